"""End-to-end detector: multi-scale segmentation, per-scale dual-space
equilibrium games, cross-space random-walk refinement, and scale averaging.
"""

from __future__ import annotations

import json
import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from . import features, game, randomwalk, segmentation
from .common import SaliencyMap, minmax_normalize, validate_image
from .imgio import load_proposal_manifest, read_ftns

log = logging.getLogger("gtsal.pipeline")

CONFIG_KEYS = (
    "scales",
    "sigma",
    "epsilon",
    "lambda1",
    "lambda2",
    "alpha",
    "beta",
    "T",
    "rho1",
    "rho2",
    "init",
    "feature_tensor",
    "proposals",
)

# Gaussian radius of the fallback dense features, as a fraction of the
# image diagonal.
FALLBACK_BLUR_FRACTION = 0.05


@dataclass(frozen=True)
class PipelineConfig:
    scales: tuple[int, ...] = (100, 150, 200, 250)
    sigma: float = 0.1
    epsilon: float = 1e-4
    lambda1: float = 2.1e-6
    lambda2: float = 9e-7
    alpha: float = 0.007
    beta: float = 1.0
    T: int = 20
    rho1: float = 0.3
    rho2: float = 0.7
    init: str = "half"
    feature_tensor: str | None = None
    proposals: str | None = None

    def __post_init__(self):
        if not self.scales:
            raise ValueError("scales must be nonempty")
        if any(s < 1 for s in self.scales):
            raise ValueError("scales must be positive")
        for name in ("sigma", "epsilon", "lambda1", "lambda2", "alpha", "beta", "rho1", "rho2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.init not in game.INIT_KINDS:
            raise ValueError(f"init must be one of {game.INIT_KINDS}")

    def payoff_params(self) -> game.PayoffParams:
        return game.PayoffParams(
            lambda1=self.lambda1,
            lambda2=self.lambda2,
            alpha=self.alpha,
            epsilon=self.epsilon,
        )


def config_from_dict(data: dict) -> PipelineConfig:
    unknown = set(data) - set(CONFIG_KEYS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(data)
    if "scales" in kwargs:
        kwargs["scales"] = tuple(int(s) for s in kwargs["scales"])
    return PipelineConfig(**kwargs)


def load_config(path: str | Path) -> PipelineConfig:
    """Read a JSON config file; missing keys fall back to package defaults."""
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {path!s} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config file {path!s} must hold a JSON object")
    return config_from_dict(data)


@contextmanager
def _timed(timings: dict | None, key: str):
    if timings is None:
        yield
        return
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[key] = timings.get(key, 0.0) + time.perf_counter() - start


def fallback_feature_tensor(img: np.ndarray) -> np.ndarray:
    """Dense stand-in features when no tensor file is supplied: the Lab
    channels blurred with a Gaussian whose radius is 5% of the diagonal."""
    lab = features.rgb_to_lab(img)
    h, w = lab.shape[:2]
    radius = FALLBACK_BLUR_FRACTION * float(np.hypot(h, w))
    blurred = np.stack(
        [ndimage.gaussian_filter(lab[..., c], sigma=radius, mode="nearest") for c in range(3)],
        axis=-1,
    )
    return blurred


def _load_inputs(cfg: PipelineConfig, img: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    tensor = read_ftns(cfg.feature_tensor) if cfg.feature_tensor else fallback_feature_tensor(img)
    proposals = load_proposal_manifest(cfg.proposals) if cfg.proposals else []
    return tensor, proposals


def _default_prior_map(img: np.ndarray, sigma: float) -> np.ndarray:
    """Centered-falloff prior used when the config asks for a prior start
    but supplies no external prior map."""
    h, w = img.shape[:2]
    ys = np.arange(h)[:, None] / max(h - 1, 1) - 0.5
    xs = np.arange(w)[None, :] / max(w - 1, 1) - 0.5
    return np.exp(-(xs**2 + ys**2) / sigma)


def _solve_space(
    seg: segmentation.Segmentation,
    affinity_matrix: np.ndarray,
    priors: game.Priors,
    cfg: PipelineConfig,
    prior_map: np.ndarray | None,
) -> np.ndarray:
    instance = game.GameInstance(affinity=affinity_matrix, priors=priors, params=cfg.payoff_params())
    init = game.init_profile(cfg.init, seg=seg, priors=priors, prior_map=prior_map)
    result = game.solve_equilibrium(instance, init)
    if not result.converged:
        log.info(
            "equilibrium not reached in %d iterations (last change %.2e)",
            result.iterations,
            result.last_change,
        )
    # The game's output convention is min-max normalized, like its rendered map.
    return minmax_normalize(result.profile[:, 1])


def run_single_scale(
    img: np.ndarray,
    cfg: PipelineConfig,
    scale: int,
    *,
    tensor: np.ndarray | None = None,
    proposals: list[np.ndarray] | None = None,
    timings: dict | None = None,
) -> SaliencyMap:
    """Full detector at one superpixel count."""
    img = validate_image(img)
    if tensor is None or proposals is None:
        loaded_tensor, loaded_proposals = _load_inputs(cfg, img)
        tensor = loaded_tensor if tensor is None else tensor
        proposals = loaded_proposals if proposals is None else proposals

    with _timed(timings, "segment"):
        seg = segmentation.slic_segment(img, scale)
    with _timed(timings, "color_features"):
        lab = features.rgb_to_lab(img)
        color_space = features.color_histogram(seg, lab, sigma=cfg.sigma)
        affinity_color = features.affinity(color_space)
    with _timed(timings, "deep_features"):
        deep_space = features.pool_deep_features(seg, tensor, sigma=cfg.sigma)
        affinity_deep = features.affinity(deep_space)

    with _timed(timings, "priors"):
        pos1, pos0 = game.position_prior(seg, cfg.sigma)
        obj1, obj0 = game.objectness_prior(seg, proposals)
        priors = game.Priors(pos1=pos1, pos0=pos0, obj1=obj1, obj0=obj0)
        prior_map = _default_prior_map(img, cfg.sigma) if cfg.init == "prior" else None

    with _timed(timings, "game"):
        saliency_color = _solve_space(seg, affinity_color, priors, cfg, prior_map)
        saliency_deep = _solve_space(seg, affinity_deep, priors, cfg, prior_map)

    with _timed(timings, "walk"):
        p_deep, p_color, pn_deep, pn_color = randomwalk.build_walk_matrices(
            affinity_deep, affinity_color, seg.neighbors
        )
        state = randomwalk.WalkState(
            p_deep=p_deep,
            p_color=p_color,
            pn_deep=pn_deep,
            pn_color=pn_color,
            labels_deep=saliency_deep,
            labels_color=saliency_color,
            beta=cfg.beta,
        )
        labels_deep, labels_color = randomwalk.iterate_walks(state, cfg.T)

    with _timed(timings, "combine"):
        blended = randomwalk.combine(labels_color, labels_deep, cfg.rho1, cfg.rho2)
        values = blended[seg.labels]
    return SaliencyMap(values=values)


def run_multiscale(
    img: np.ndarray,
    cfg: PipelineConfig,
    *,
    timings: dict | None = None,
) -> SaliencyMap:
    """Equal-weight average of all per-scale maps, min-max normalized."""
    img = validate_image(img)
    tensor, proposals = _load_inputs(cfg, img)
    total = np.zeros(img.shape[:2], dtype=np.float64)
    for scale in cfg.scales:
        result = run_single_scale(
            img, cfg, scale, tensor=tensor, proposals=proposals, timings=timings
        )
        total += result.values
    with _timed(timings, "combine"):
        values = minmax_normalize(total / len(cfg.scales))
    return SaliencyMap(values=values)


def with_overrides(cfg: PipelineConfig, **overrides) -> PipelineConfig:
    """Non-None overrides win over existing config values."""
    valid = {f.name for f in fields(PipelineConfig)}
    unknown = set(overrides) - valid
    if unknown:
        raise ValueError(f"unknown config fields: {sorted(unknown)}")
    changes = {k: v for k, v in overrides.items() if v is not None}
    if "scales" in changes:
        changes["scales"] = tuple(int(s) for s in changes["scales"])
    return replace(cfg, **changes)
