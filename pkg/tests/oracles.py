"""Independent reference implementations used as test oracles.

Everything here is deliberately written the slow, direct way (explicit
loops, materialized pairwise payoff blocks, exhaustive enumeration) so it
shares no code path with the package implementations it checks.
"""

from __future__ import annotations

import numpy as np

from gtsal.game import GameInstance, PayoffParams, Priors


def random_game_instance(
    rng: np.random.Generator,
    n: int,
    lambda1: float | None = None,
    lambda2: float | None = None,
    alpha: float = 0.007,
    blocky: bool = False,
) -> GameInstance:
    """A random valid instance; `blocky` plants a 2-cluster affinity structure."""
    if blocky:
        half = n // 2
        a = rng.uniform(0.0, 0.15, size=(n, n))
        a[:half, :half] = rng.uniform(0.85, 1.0, size=(half, half))
        a[half:, half:] = rng.uniform(0.85, 1.0, size=(n - half, n - half))
    else:
        a = rng.uniform(0.01, 1.0, size=(n, n))
    a = 0.5 * (a + a.T)
    np.fill_diagonal(a, 1.0)
    pos1 = rng.uniform(0.0, 1.0, size=n) / n
    obj1 = rng.uniform(0.0, 1.0, size=n) / n
    priors = Priors(pos1=pos1, pos0=1.0 / n - pos1, obj1=obj1, obj0=1.0 / n - obj1)
    params = PayoffParams(
        lambda1=lambda1 if lambda1 is not None else 2.1e-6,
        lambda2=lambda2 if lambda2 is not None else 9e-7,
        alpha=alpha,
    )
    return GameInstance(affinity=a, priors=priors, params=params)


def materialize_payoff_blocks(game: GameInstance) -> np.ndarray:
    """All N^2 pairwise 2x2 payoff blocks B[i, j, s_i, s_j], built term by term."""
    n = game.n
    a = game.affinity
    p = game.params
    blocks = np.zeros((n, n, 2, 2))
    for i in range(n):
        offset = (p.alpha / n) * sum(a[i, k] for k in range(n))
        prior = {
            0: p.lambda1 * game.priors.pos0[i] + p.lambda2 * game.priors.obj0[i],
            1: p.lambda1 * game.priors.pos1[i] + p.lambda2 * game.priors.obj1[i],
        }
        for j in range(n):
            if j == i:
                continue
            for si in (0, 1):
                for sj in (0, 1):
                    support = a[i, j] - offset if si == sj else 0.0
                    blocks[i, j, si, sj] = prior[si] + support
    return blocks


def brute_force_expected_payoffs(blocks: np.ndarray, profile: np.ndarray) -> np.ndarray:
    """U[i][h] = sum over opponents of e_h^T B_ij z_j, summed explicitly."""
    n = blocks.shape[0]
    payoffs = np.zeros((n, 2))
    for i in range(n):
        for h in (0, 1):
            total = 0.0
            for j in range(n):
                if j == i:
                    continue
                total += blocks[i, j, h, 0] * profile[j, 0] + blocks[i, j, h, 1] * profile[j, 1]
            payoffs[i, h] = total
    return payoffs


def brute_force_replicator(
    blocks: np.ndarray, profile: np.ndarray, const: float, steps: int
) -> np.ndarray:
    """Replicator dynamics driven entirely by the materialized blocks."""
    z = profile.copy()
    for _ in range(steps):
        payoffs = brute_force_expected_payoffs(blocks, z)
        nxt = np.empty_like(z)
        for i in range(z.shape[0]):
            mean = z[i, 0] * payoffs[i, 0] + z[i, 1] * payoffs[i, 1]
            for h in (0, 1):
                nxt[i, h] = z[i, h] * (const + payoffs[i, h]) / (const + mean)
            nxt[i] /= nxt[i].sum()
        z = nxt
    return z


def pure_profile_payoffs(blocks: np.ndarray) -> np.ndarray:
    """Payoff tables for every pure profile: (2^N, N, 2) array.

    entry [p, i, h] is player i's payoff for pure strategy h when everyone
    else plays profile p (profiles enumerated as bit patterns, player i's
    own bit ignored).
    """
    n = blocks.shape[0]
    profiles = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)
    payoffs = np.zeros((2**n, n, 2))
    for i in range(n):
        for h in (0, 1):
            base = sum(blocks[i, j, h, 0] for j in range(n) if j != i)
            delta = blocks[i, :, h, 1] - blocks[i, :, h, 0]
            delta[i] = 0.0
            payoffs[:, i, h] = base + profiles @ delta
    return payoffs


def enumerate_pure_nash(blocks: np.ndarray, tol: float = 0.0) -> set[tuple[int, ...]]:
    """Exhaustive best-reply check over all 2^N pure profiles."""
    n = blocks.shape[0]
    payoffs = pure_profile_payoffs(blocks)
    bits = (np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1
    played = np.take_along_axis(payoffs, bits[:, :, None], axis=2)[:, :, 0]
    best = payoffs.max(axis=2)
    stable = np.all(played >= best - tol, axis=1)
    return {tuple(int(b) for b in bits[p]) for p in np.flatnonzero(stable)}


def bilinear_reference(tensor: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Scalar half-pixel-centered bilinear interpolation."""
    h, w, c = tensor.shape
    out = np.zeros((out_h, out_w, c))
    for oy in range(out_h):
        sy = min(max((oy + 0.5) * h / out_h - 0.5, 0.0), h - 1.0)
        y0 = int(np.floor(sy))
        y1 = min(y0 + 1, h - 1)
        fy = sy - y0
        for ox in range(out_w):
            sx = min(max((ox + 0.5) * w / out_w - 0.5, 0.0), w - 1.0)
            x0 = int(np.floor(sx))
            x1 = min(x0 + 1, w - 1)
            fx = sx - x0
            for ch in range(c):
                top = tensor[y0, x0, ch] * (1 - fx) + tensor[y0, x1, ch] * fx
                bot = tensor[y1, x0, ch] * (1 - fx) + tensor[y1, x1, ch] * fx
                out[oy, ox, ch] = top * (1 - fy) + bot * fy
    return out


def chi_square_reference(a: np.ndarray, b: np.ndarray, guard: float = 1e-10) -> float:
    total = 0.0
    for ak, bk in zip(a, b):
        total += (ak - bk) ** 2 / (ak + bk + guard)
    return 0.5 * total


def confusion_counts(saliency: np.ndarray, gt: np.ndarray, tau: float) -> tuple[int, int, int, int]:
    """Per-pixel (tp, fp, fn, tn) at threshold tau with the s >= tau rule."""
    tp = fp = fn = tn = 0
    for s, g in zip(saliency.ravel(), gt.ravel()):
        predicted = s >= tau
        if predicted and g:
            tp += 1
        elif predicted:
            fp += 1
        elif g:
            fn += 1
        else:
            tn += 1
    return tp, fp, fn, tn


def mann_whitney_auc(saliency: np.ndarray, gt: np.ndarray) -> float:
    """Exact rank-statistic AUC: P(pos > neg) + 0.5 * P(pos == neg)."""
    pos = saliency[gt.astype(bool)]
    neg = saliency[~gt.astype(bool)]
    wins = 0.0
    for v in pos:
        wins += float((v > neg).sum()) + 0.5 * float((v == neg).sum())
    return wins / (len(pos) * len(neg))


def matmul_reference(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n, m = a.shape
    m2, k = b.shape
    assert m == m2
    out = np.zeros((n, k))
    for i in range(n):
        for j in range(k):
            total = 0.0
            for t in range(m):
                total += a[i, t] * b[t, j]
            out[i, j] = total
    return out


def pairwise_energy(transition: np.ndarray, labels: np.ndarray, anchor: np.ndarray, beta: float) -> float:
    """The quadratic objective whose exact minimizer is beta*(L+beta I)^-1 anchor:
    sum over unordered pairs of W_sym(i,j)(l_i - l_j)^2 plus the anchor penalty."""
    w = 0.5 * (transition + transition.T)
    n = w.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += w[i, j] * (labels[i] - labels[j]) ** 2
    for i in range(n):
        total += beta * (labels[i] - anchor[i]) ** 2
    return total


def finite_difference_gradient(fn, x: np.ndarray, step: float = 1e-6) -> np.ndarray:
    grad = np.zeros_like(x)
    for k in range(x.size):
        plus = x.copy()
        minus = x.copy()
        plus[k] += step
        minus[k] -= step
        grad[k] = (fn(plus) - fn(minus)) / (2.0 * step)
    return grad


def scripted_walk_reference(
    p_deep: np.ndarray,
    p_color: np.ndarray,
    pn_deep: np.ndarray,
    pn_color: np.ndarray,
    labels_deep: np.ndarray,
    labels_color: np.ndarray,
    beta: float,
    rounds: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Step-by-step reference of the refinement loop using dense solves."""

    def normalize(v):
        lo, hi = v.min(), v.max()
        if hi - lo <= 1e-9 * max(1.0, abs(lo), abs(hi)):
            return np.zeros_like(v)
        return (v - lo) / (hi - lo)

    def solve(p, anchor):
        w = 0.5 * (p + p.T)
        lap = np.diag(w.sum(axis=1)) - w
        return np.linalg.solve(lap + beta * np.eye(len(anchor)), anchor)

    ld, lc = labels_deep.copy(), labels_color.copy()
    for _ in range(rounds):
        p_deep = matmul_reference(matmul_reference(pn_color, p_deep), pn_color)
        p_color = matmul_reference(matmul_reference(pn_deep, p_color), pn_deep)
        new_ld = solve(p_deep, lc)
        new_lc = solve(p_color, ld)
        ld, lc = normalize(new_ld), normalize(new_lc)
    return ld, lc
