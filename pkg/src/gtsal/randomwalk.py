"""Cross-feature-space refinement of per-superpixel labels.

Each feature space contributes two row-stochastic transition matrices: one
over the complete graph and one restricted to the neighbor relation. Every
round, each space's complete-graph matrix is sandwiched between the OTHER
space's neighbor matrix (P <- Pn_other @ P @ Pn_other), then each space's
labels are re-solved against the other space's previous labels through a
penalized Laplacian system (L + beta*I) l = l_other. The two label vectors
trade information until, after a fixed number of rounds, they are blended
into a single output.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import linalg

from .common import NumericalError, minmax_normalize
from .imgio import write_ftns

_RESIDUAL_TOL = 1e-9


@dataclass(frozen=True)
class WalkState:
    """Evolving transition matrices and label vectors for both spaces."""

    p_deep: np.ndarray  # complete-graph transitions, deep space (evolving)
    p_color: np.ndarray  # complete-graph transitions, color space (evolving)
    pn_deep: np.ndarray  # neighbor-graph transitions, deep space (fixed)
    pn_color: np.ndarray  # neighbor-graph transitions, color space (fixed)
    labels_deep: np.ndarray
    labels_color: np.ndarray
    beta: float = 1.0
    t: int = 0


def row_normalize(weights: np.ndarray) -> np.ndarray:
    """Rows rescaled to sum to 1; an all-zero row becomes the uniform row."""
    weights = np.asarray(weights, dtype=np.float64)
    sums = weights.sum(axis=1)
    out = np.empty_like(weights)
    isolated = sums <= 0.0
    ok = ~isolated
    out[ok] = weights[ok] / sums[ok, None]
    if isolated.any():
        out[isolated] = 1.0 / weights.shape[1]
    return out


def build_walk_matrices(
    affinity_deep: np.ndarray,
    affinity_color: np.ndarray,
    neighbors: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Complete- and neighbor-graph transition matrices for both spaces.

    Complete graphs drop the diagonal; neighbor graphs additionally keep
    only entries inside the neighbor relation. All four are row-normalized.
    """
    n = affinity_deep.shape[0]
    if affinity_color.shape != (n, n) or neighbors.shape != (n, n):
        raise ValueError("affinity matrices and neighbor relation must agree on N")
    off_diag = ~np.eye(n, dtype=bool)
    mask = neighbors.astype(bool) & off_diag
    p_deep = row_normalize(affinity_deep * off_diag)
    p_color = row_normalize(affinity_color * off_diag)
    pn_deep = row_normalize(affinity_deep * mask)
    pn_color = row_normalize(affinity_color * mask)
    return p_deep, p_color, pn_deep, pn_color


def cross_fuse(state: WalkState) -> WalkState:
    """One metric-fusion step: each complete matrix is filtered by the other
    space's neighbor matrix on both sides."""
    fused_deep = state.pn_color @ state.p_deep @ state.pn_color
    fused_color = state.pn_deep @ state.p_color @ state.pn_deep
    return replace(state, p_deep=fused_deep, p_color=fused_color, t=state.t + 1)


def penalized_solve(transition: np.ndarray, anchor: np.ndarray, beta: float) -> np.ndarray:
    """Solve (L + beta*I) l = anchor for the symmetrized Laplacian of `transition`.

    L = D - W with W = (P + P^T)/2, which makes the system symmetric positive
    definite for beta > 0. The solution must satisfy an infinity-norm
    residual of 1e-9 or a NumericalError is raised.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    w = 0.5 * (transition + transition.T)
    degrees = w.sum(axis=1)
    system = -w
    # L + beta*I; self-loops cancel out of the Laplacian diagonal.
    np.fill_diagonal(system, beta + degrees - np.diag(w))
    try:
        factor = linalg.cho_factor(system, check_finite=False)
        solution = linalg.cho_solve(factor, anchor, check_finite=False)
        residual = system @ solution - anchor
        solution += linalg.cho_solve(factor, residual * -1.0, check_finite=False)
        residual = system @ solution - anchor
    except linalg.LinAlgError as exc:
        raise NumericalError(f"penalized system not positive definite: {exc}") from exc
    worst = float(np.abs(residual).max())
    if worst > _RESIDUAL_TOL:
        raise NumericalError(
            f"penalized solve residual {worst:.3e} exceeds {_RESIDUAL_TOL:.0e}"
        )
    return solution


def iterate_walks(state: WalkState, rounds: int) -> tuple[np.ndarray, np.ndarray]:
    """Run `rounds` of cross fusion plus mutually penalized solves.

    Each round fuses first, then solves both spaces against the other
    space's previous labels, and finally min-max renormalizes both label
    vectors. Returns (labels_deep, labels_color); zero rounds returns the
    initial labels untouched.
    """
    if rounds < 0:
        raise ValueError("rounds must be nonnegative")
    for _ in range(rounds):
        state = cross_fuse(state)
        new_deep = penalized_solve(state.p_deep, state.labels_color, state.beta)
        new_color = penalized_solve(state.p_color, state.labels_deep, state.beta)
        state = replace(
            state,
            labels_deep=minmax_normalize(new_deep),
            labels_color=minmax_normalize(new_color),
        )
    return state.labels_deep, state.labels_color


def combine(
    labels_color: np.ndarray,
    labels_deep: np.ndarray,
    rho1: float,
    rho2: float,
) -> np.ndarray:
    """Weighted blend rho1 * color + rho2 * deep, min-max normalized."""
    labels_color = np.asarray(labels_color, dtype=np.float64)
    labels_deep = np.asarray(labels_deep, dtype=np.float64)
    if labels_color.shape != labels_deep.shape:
        raise ValueError("label vectors must share one length")
    return minmax_normalize(rho1 * labels_color + rho2 * labels_deep)


def dump_transitions(state: WalkState, out_dir: str | Path) -> None:
    """Debug dump of the four transition matrices as N x N x 1 FTNS tensors."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, matrix in (
        ("p_deep", state.p_deep),
        ("p_color", state.p_color),
        ("pn_deep", state.pn_deep),
        ("pn_color", state.pn_color),
    ):
        write_ftns(out_dir / f"{name}.ftns", matrix[:, :, None])
