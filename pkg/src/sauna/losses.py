"""Regression losses for signed soft labels, with analytic gradients.

All functions accept :class:`~sauna.grid.ScalarField` objects or plain
array-likes of equal shape. Reductions use ``numpy.sum`` on contiguous
float64 arrays (pairwise summation), which is deterministic for a given
shape.

Non-differentiable points get subgradient 0, and the sign indicator in the
focal losses is treated as piecewise constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError

__all__ = [
    "LossConfig",
    "gjml",
    "gjml_grad",
    "stable_focal_l1",
    "stable_focal_l1_map",
    "focal_l1_map",
    "stable_focal_l1_grad",
    "focal_l1_reference",
    "l1_loss",
    "l1_loss_grad",
    "combined_loss",
    "combined_loss_grad",
]


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 1.0
    weight_gjml: float = 1.0
    weight_sfl1: float = 1.0
    bounds_lo: float = -1.0
    bounds_hi: float = 1.0
    denom_guard: float = 1e-12

    def __post_init__(self):
        if not self.gamma >= 1.0:
            raise InputError(f"gamma must be >= 1, got {self.gamma}")
        if self.weight_gjml < 0 or self.weight_sfl1 < 0:
            raise InputError("loss weights must be non-negative")
        if not self.bounds_lo < self.bounds_hi:
            raise InputError(f"need bounds_lo < bounds_hi, got [{self.bounds_lo}, {self.bounds_hi}]")
        if not self.denom_guard > 0:
            raise InputError("denom_guard must be positive")


DEFAULT = LossConfig()


def _pair(pred, target, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(getattr(pred, "data", pred), dtype=np.float64)
    t = np.asarray(getattr(target, "data", target), dtype=np.float64)
    if p.shape != t.shape:
        raise InputError(f"shape mismatch: pred {p.shape} vs target {t.shape}")
    for name, a in (("pred", p), ("target", t)):
        if a.size and (a.min() < lo or a.max() > hi or not np.all(np.isfinite(a))):
            raise InputError(f"{name} values outside [{lo}, {hi}]")
    return p, t


def gjml(pred, target, cfg: LossConfig = DEFAULT) -> float:
    """Jaccard metric loss on the hypercube ``[bounds_lo, bounds_hi]^D``.

    ``1 - (S - D) / (S + D)`` where ``S = |pred + target|_1`` and
    ``D = |pred - target|_1``; returns 0 when ``S + D`` is below the guard.
    """
    p, t = _pair(pred, target, cfg.bounds_lo, cfg.bounds_hi)
    s = np.sum(np.abs(p + t))
    d = np.sum(np.abs(p - t))
    if s + d < cfg.denom_guard:
        return 0.0
    return float(2.0 * d / (s + d))


def gjml_grad(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    p, t = _pair(pred, target, cfg.bounds_lo, cfg.bounds_hi)
    s = np.sum(np.abs(p + t))
    d = np.sum(np.abs(p - t))
    denom = s + d
    if denom < cfg.denom_guard:
        return np.zeros_like(p)
    return 2.0 * (np.sign(p - t) * s - d * np.sign(p + t)) / (denom * denom)


def _focal_terms(p: np.ndarray, t: np.ndarray, gamma: float):
    e = t - p
    agree = t * p >= 0
    expo = np.where(agree, gamma, 0.0)
    return e, agree, expo


def stable_focal_l1_map(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    """Per-pixel ``|e|^(1+gamma)`` where pred and target agree in sign (or
    either is 0), ``|e|`` elsewhere; ``e = target - pred``."""
    p, t = _pair(pred, target, -1.0, 1.0)
    e, _, expo = _focal_terms(p, t, cfg.gamma)
    return np.abs(e) ** (1.0 + expo)


def stable_focal_l1(pred, target, cfg: LossConfig = DEFAULT) -> float:
    """Pixel mean of :func:`stable_focal_l1_map`."""
    terms = stable_focal_l1_map(pred, target, cfg)
    return float(np.sum(terms) / terms.size)


def stable_focal_l1_grad(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    p, t = _pair(pred, target, -1.0, 1.0)
    e, _, expo = _focal_terms(p, t, cfg.gamma)
    return -(1.0 + expo) * np.abs(e) ** expo * np.sign(e) / e.size


def focal_l1_map(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    p, t = _pair(pred, target, -1.0, 1.0)
    e, _, expo = _focal_terms(p, t, cfg.gamma)
    scale = np.maximum(np.maximum(np.abs(t), np.abs(p)), cfg.denom_guard)
    return np.abs(e) * np.abs(e) ** expo / scale


def focal_l1_reference(pred, target, cfg: LossConfig = DEFAULT) -> float:
    """Original Focal-L1, weighted by ``1 / max(|target|, |pred|)``.

    Kept for comparison against :func:`stable_focal_l1`; it has a spurious
    local minimum at the far end of the range and is not used for training.
    """
    terms = focal_l1_map(pred, target, cfg)
    return float(np.sum(terms) / terms.size)


def l1_loss(pred, target, cfg: LossConfig = DEFAULT) -> float:
    """Plain mean absolute error (hard-label baseline)."""
    p, t = _pair(pred, target, -1.0, 1.0)
    return float(np.sum(np.abs(t - p)) / p.size)


def l1_loss_grad(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    p, t = _pair(pred, target, -1.0, 1.0)
    return -np.sign(t - p) / p.size


def combined_loss(pred, target, cfg: LossConfig = DEFAULT) -> tuple[float, dict[str, float]]:
    """``weight_gjml * gjml + weight_sfl1 * stable_focal_l1``."""
    parts = {"gjml": gjml(pred, target, cfg), "sfl1": stable_focal_l1(pred, target, cfg)}
    total = cfg.weight_gjml * parts["gjml"] + cfg.weight_sfl1 * parts["sfl1"]
    return total, parts


def combined_loss_grad(pred, target, cfg: LossConfig = DEFAULT) -> np.ndarray:
    grad = np.zeros(np.shape(getattr(pred, "data", pred)))
    if cfg.weight_gjml:
        grad = grad + cfg.weight_gjml * gjml_grad(pred, target, cfg)
    if cfg.weight_sfl1:
        grad = grad + cfg.weight_sfl1 * stable_focal_l1_grad(pred, target, cfg)
    return grad
