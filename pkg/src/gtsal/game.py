"""The equilibrium labeling game over superpixels.

Every superpixel is a player with two pure strategies, background (0) and
foreground (1). Each ordered pair plays a 2x2 game whose payoff adds a
position prior, an objectness prior, and a support term that rewards
agreeing with similar superpixels:

    payoff_ij(s_i, s_j) = lambda1 * pos_i(s_i) + lambda2 * obj_i(s_i)
                          + [s_i == s_j] * (A(i, j) - (alpha/N) * sum_k A(i, k))

A player's total payoff is the sum over all opponents. A mixed Nash
equilibrium of this polymatrix game (one always exists) is reached with
discrete-time replicator dynamics; each row's equilibrium foreground
probability is that superpixel's saliency value.

Payoffs are never materialized as N^2 2x2 blocks. Because the prior terms
repeat in every pairwise game and the support term only pays on matching
strategies, the expected payoff of pure strategy h against profile Z
collapses to

    U[i][h] = (N-1) * (lambda1 * pos_i(h) + lambda2 * obj_i(h))
              + sum_{j != i} Z[j][h] * (A(i, j) - offset_i),

which is O(N) per player and equals the brute-force pairwise sum exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .common import ConfigurationError, SaliencyMap, minmax_normalize
from .segmentation import Segmentation

INIT_KINDS = ("half", "bd", "pos", "obj", "prior")

_PRIOR_SUM_TOL = 1e-12
_ROW_DRIFT_TOL = 1e-12


@dataclass(frozen=True)
class PayoffParams:
    """Weights and solver controls for one game instance."""

    lambda1: float = 2.1e-6  # position weight
    lambda2: float = 9e-7  # objectness weight
    alpha: float = 0.007  # support penalty
    const_birthrate: float | None = None  # None -> derived per instance
    epsilon: float = 1e-4  # convergence threshold on profile change
    max_iters: int = 2000

    def __post_init__(self):
        if self.lambda1 <= 0 or self.lambda2 <= 0 or self.alpha <= 0 or self.epsilon <= 0:
            raise ConfigurationError("lambda1, lambda2, alpha, epsilon must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be positive")


@dataclass(frozen=True)
class Priors:
    """Per-player position and objectness payoffs for each pure strategy."""

    pos1: np.ndarray
    pos0: np.ndarray
    obj1: np.ndarray
    obj0: np.ndarray

    def validate(self) -> None:
        n = self.pos1.shape[0]
        bound = 1.0 / n
        for name in ("pos1", "pos0", "obj1", "obj0"):
            v = getattr(self, name)
            if v.shape != (n,):
                raise ValueError("prior vectors must share one length")
            if v.min() < -_PRIOR_SUM_TOL or v.max() > bound + _PRIOR_SUM_TOL:
                raise ValueError(f"{name} entries must lie in [0, 1/N]")
        if np.abs(self.pos1 + self.pos0 - bound).max() > _PRIOR_SUM_TOL:
            raise ValueError("pos1 + pos0 must equal 1/N")
        if np.abs(self.obj1 + self.obj0 - bound).max() > _PRIOR_SUM_TOL:
            raise ValueError("obj1 + obj0 must equal 1/N")


def position_prior(seg: Segmentation, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Center-distance prior: pos1 = exp(-d^2/sigma)/N, pos0 = (1 - exp(-d^2/sigma))/N.

    Centroids are normalized per axis so pixel coordinates span [0, 1] and
    the image center is (0.5, 0.5); sigma divides the squared distance
    directly (not squared).
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    n = seg.n
    sx = max(seg.width - 1, 1)
    sy = max(seg.height - 1, 1)
    dx = seg.centroids[:, 0] / sx - 0.5
    dy = seg.centroids[:, 1] / sy - 0.5
    proximity = np.exp(-(dx**2 + dy**2) / sigma)
    pos1 = proximity / n
    pos0 = (1.0 - proximity) / n
    return pos1, pos0


def objectness_prior(
    seg: Segmentation, proposals: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Mean proposal-overlap prior: obj1 = mean_j(|O_j & P_i| / |P_i|) / N.

    With no proposals both strategies get the neutral value 1/(2N).
    """
    n = seg.n
    if not proposals:
        neutral = np.full(n, 0.5 / n)
        return neutral, neutral.copy()
    flat = seg.labels.ravel()
    sizes = seg.sizes.astype(np.float64)
    overlap = np.zeros(n)
    for mask in proposals:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != seg.labels.shape:
            raise ValueError(
                f"proposal mask shape {mask.shape} does not match image {seg.labels.shape}"
            )
        counts = np.bincount(flat[mask.ravel()], minlength=n)
        overlap += counts / sizes
    mean_overlap = overlap / len(proposals)
    obj1 = mean_overlap / n
    obj0 = 1.0 / n - obj1
    return obj1, obj0


@dataclass(frozen=True)
class GameInstance:
    """One game: affinity, priors, weights, and the derived support offset."""

    affinity: np.ndarray  # (N, N), symmetric, unit diagonal
    priors: Priors
    params: PayoffParams
    support_offset: np.ndarray = field(init=False)  # (alpha/N) * row sums of A
    const_birthrate: float = field(init=False)

    def __post_init__(self):
        a = self.affinity
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("affinity must be square")
        if self.priors.pos1.shape[0] != n:
            raise ValueError("priors and affinity disagree on N")
        self.priors.validate()
        offset = (self.params.alpha / n) * a.sum(axis=1)
        object.__setattr__(self, "support_offset", offset)
        const = self.params.const_birthrate
        if const is None:
            spread = np.abs(a - offset[:, None])
            np.fill_diagonal(spread, 0.0)
            lam = self.params.lambda1 + self.params.lambda2
            const = 1.0 + float(spread.sum(axis=1).max()) + (n - 1) * lam / n
        object.__setattr__(self, "const_birthrate", float(const))

    @property
    def n(self) -> int:
        return self.affinity.shape[0]

    def prior_matrix(self) -> np.ndarray:
        """(N, 2) combined weighted prior payoff per pure strategy."""
        p = self.params
        col0 = p.lambda1 * self.priors.pos0 + p.lambda2 * self.priors.obj0
        col1 = p.lambda1 * self.priors.pos1 + p.lambda2 * self.priors.obj1
        return np.stack([col0, col1], axis=1)


def expected_payoffs(game: GameInstance, profile: np.ndarray) -> np.ndarray:
    """U[i][h]: payoff of pure strategy h for player i against profile Z."""
    a = game.affinity
    n = game.n
    support = a @ profile - np.diag(a)[:, None] * profile
    opponent_mass = profile.sum(axis=0)[None, :] - profile
    support -= game.support_offset[:, None] * opponent_mass
    return (n - 1) * game.prior_matrix() + support


def replicator_step(
    game: GameInstance, profile: np.ndarray, payoffs: np.ndarray | None = None
) -> np.ndarray:
    """One discrete replicator update; rows stay on the probability simplex."""
    if payoffs is None:
        payoffs = expected_payoffs(game, profile)
    const = game.const_birthrate
    numer = const + payoffs
    if numer.min() <= 0.0:
        raise ConfigurationError(
            f"const_birthrate {const} too small: nonpositive growth factor"
        )
    mean_payoff = (profile * payoffs).sum(axis=1)
    denom = const + mean_payoff
    if denom.min() <= 0.0:
        raise ConfigurationError(
            f"const_birthrate {const} too small: nonpositive mean fitness"
        )
    updated = profile * numer / denom[:, None]
    sums = updated.sum(axis=1)
    drifted = np.abs(sums - 1.0) > _ROW_DRIFT_TOL
    if drifted.any():
        updated[drifted] /= sums[drifted, None]
    return updated


@dataclass(frozen=True)
class EquilibriumResult:
    profile: np.ndarray
    iterations: int
    converged: bool
    last_change: float


def solve_equilibrium(game: GameInstance, init: np.ndarray) -> EquilibriumResult:
    """Iterate replicator dynamics from `init` until the profile settles.

    Convergence means the largest per-component change drops below epsilon
    while no longer growing; the growth guard keeps the tiny prior-seeded
    drift near a symmetric start from being mistaken for a fixed point.
    Hitting max_iters flags the result as non-converged instead of raising.
    """
    profile = validate_profile(init, game.n)
    eps = game.params.epsilon
    prev_change = 0.0
    change = np.inf
    for iteration in range(1, game.params.max_iters + 1):
        updated = replicator_step(game, profile)
        change = float(np.abs(updated - profile).max())
        profile = updated
        if change < eps and change <= prev_change:
            return EquilibriumResult(profile, iteration, True, change)
        prev_change = change
    return EquilibriumResult(profile, game.params.max_iters, False, change)


def validate_profile(profile: np.ndarray, n: int | None = None) -> np.ndarray:
    profile = np.asarray(profile, dtype=np.float64)
    if profile.ndim != 2 or profile.shape[1] != 2:
        raise ValueError("strategy profile must be (N, 2)")
    if n is not None and profile.shape[0] != n:
        raise ValueError(f"profile has {profile.shape[0]} rows, expected {n}")
    if profile.min() < 0.0:
        raise ValueError("mixed strategies must be nonnegative")
    if np.abs(profile.sum(axis=1) - 1.0).max() > 1e-9:
        raise ValueError("mixed strategy rows must sum to 1")
    return profile


def init_profile(
    kind: str,
    seg: Segmentation | None = None,
    priors: Priors | None = None,
    prior_map: np.ndarray | None = None,
    n: int | None = None,
) -> np.ndarray:
    """Build a starting profile: half, bd, pos, obj, or prior.

    half gives every row (0.5, 0.5); bd starts border superpixels at
    foreground probability 0.4; pos/obj rescale the respective prior to the
    simplex; prior uses a per-pixel saliency map averaged per superpixel.
    """
    if kind not in INIT_KINDS:
        raise ValueError(f"unknown init kind {kind!r}; expected one of {INIT_KINDS}")
    if n is None:
        if seg is not None:
            n = seg.n
        elif priors is not None:
            n = priors.pos1.shape[0]
        else:
            raise ValueError("init_profile needs seg, priors, or an explicit n")

    if kind == "half":
        return np.full((n, 2), 0.5)
    if kind == "bd":
        if seg is None:
            raise ValueError("bd initialization requires a segmentation")
        fg = np.where(seg.boundary, 0.4, 0.5)
        return np.stack([1.0 - fg, fg], axis=1)
    if kind == "pos":
        if priors is None:
            raise ValueError("pos initialization requires priors")
        return np.stack([n * priors.pos0, n * priors.pos1], axis=1)
    if kind == "obj":
        if priors is None:
            raise ValueError("obj initialization requires priors")
        return np.stack([n * priors.obj0, n * priors.obj1], axis=1)
    # kind == "prior"
    if prior_map is None or seg is None:
        raise ValueError("prior initialization requires a segmentation and a prior map")
    prior_map = np.asarray(prior_map, dtype=np.float64)
    if prior_map.shape != seg.labels.shape:
        raise ValueError("prior map resolution does not match the segmentation")
    if prior_map.min() < 0.0 or prior_map.max() > 1.0:
        raise ValueError("prior map values must lie in [0, 1]")
    per_sp = np.bincount(seg.labels.ravel(), weights=prior_map.ravel(), minlength=seg.n)
    per_sp /= seg.sizes.astype(np.float64)
    return np.stack([1.0 - per_sp, per_sp], axis=1)


def verify_approx_nash(game: GameInstance, profile: np.ndarray) -> np.ndarray:
    """Per-player regret: best pure payoff minus achieved expected payoff.

    The profile is a tol-approximate Nash equilibrium iff max regret <= tol.
    """
    profile = validate_profile(profile, game.n)
    payoffs = expected_payoffs(game, profile)
    return payoffs.max(axis=1) - (profile * payoffs).sum(axis=1)


def saliency_from_profile(profile: np.ndarray, seg: Segmentation) -> SaliencyMap:
    """Render each superpixel's foreground probability, min-max normalized."""
    profile = validate_profile(profile, seg.n)
    values = minmax_normalize(profile[:, 1])
    return SaliencyMap(values=values[seg.labels])
