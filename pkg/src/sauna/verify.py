"""Randomized property suites for the transforms and losses.

Each suite returns a :class:`SuiteResult`. Trial ``k`` of a suite seeded with
``seed`` draws from ``numpy.random.default_rng([seed, suite_tag, k])``, so a
failure is reproducible from the ``(seed, trial)`` pair it reports.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import BinaryMask
from .losses import (
    LossConfig,
    combined_loss,
    combined_loss_grad,
    focal_l1_map,
    focal_l1_reference,
    gjml,
    gjml_grad,
    stable_focal_l1,
    stable_focal_l1_grad,
    stable_focal_l1_map,
)
from .trainer import featurize, objective
from .transforms import SaunaParams, brute_force_oracles, sauna_components

__all__ = [
    "SuiteResult",
    "FULL_TRIALS",
    "HYPERCUBES",
    "central_difference",
    "relative_error",
    "random_mask",
    "metric_axioms",
    "unique_minimum",
    "negative_side_decreasing",
    "lower_bound",
    "focal_spurious_minimum",
    "oracle_equivalence",
    "gradient_check",
    "end_to_end_gradient_check",
    "run_all",
    "format_table",
    "discrete_local_minima",
]

HYPERCUBES = ((0.0, 1.0), (-1.0, 1.0), (-3.0, 2.0))
FULL_TRIALS = {
    "metric": 10_000,
    "lower-bound": 10_000,
    "oracle": 500,
    "gradient": 1_000,
}
SCAN_STEP = 1e-3
FD_STEP = 1e-5
KINK_MARGIN = 1e-3


@dataclass
class SuiteResult:
    name: str
    passed: bool
    trials: int
    detail: str = ""
    seed: int | None = None
    trial: int | None = None
    seconds: float = 0.0


def _rng(seed: int, tag: int, k: int) -> np.random.Generator:
    return np.random.default_rng([seed, tag, k])


def central_difference(func: Callable[[np.ndarray], float], x: np.ndarray, h: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for j in range(flat.size):
        old = flat[j]
        flat[j] = old + h
        fp = func(x)
        flat[j] = old - h
        fm = func(x)
        flat[j] = old
        gflat[j] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric) -> float:
    a, n = np.ravel(analytic), np.ravel(numeric)
    scale = max(np.linalg.norm(a), np.linalg.norm(n), 1e-12)
    return float(np.linalg.norm(a - n) / scale)


# ---------------------------------------------------------------------------
# semi-metric axioms


def metric_axioms(trials: int = FULL_TRIALS["metric"], seed: int = 0) -> list[SuiteResult]:
    """Reflexivity, its converse, positivity and symmetry of ``gjml`` on each
    hypercube in :data:`HYPERCUBES` (``trials`` pairs per hypercube)."""
    t0 = time.perf_counter()
    fails: dict[str, tuple[str, int]] = {}
    total = 0
    for cube_idx, (lo, hi) in enumerate(HYPERCUBES):
        cfg = LossConfig(bounds_lo=lo, bounds_hi=hi)
        for k in range(trials):
            rng = _rng(seed, 100 + cube_idx, k)
            dim = int(rng.integers(1, 65))
            a = rng.uniform(lo, hi, dim)
            if k % 4 == 3:
                # near-coincident pair exercises the reflexivity converse
                b = np.clip(a + rng.normal(0, 10.0 ** rng.uniform(-14, -3), dim), lo, hi)
            else:
                b = rng.uniform(lo, hi, dim)
            total += 1
            here = f"[{lo:g},{hi:g}]^{dim}"
            if "reflexivity" not in fails and abs(gjml(a, a, cfg)) > 1e-12:
                fails["reflexivity"] = (f"gjml(a,a)={gjml(a, a, cfg):.3e} on {here}", k)
            ab, ba = gjml(a, b, cfg), gjml(b, a, cfg)
            if "positivity" not in fails and ab < 0:
                fails["positivity"] = (f"gjml(a,b)={ab:.3e} < 0 on {here}", k)
            if "symmetry" not in fails and ab != ba:
                fails["symmetry"] = (f"gjml(a,b)-gjml(b,a)={ab - ba:.3e} on {here}", k)
            if "reflexivity-converse" not in fails and ab < 1e-9 and np.abs(a - b).sum() >= 1e-6:
                fails["reflexivity-converse"] = (f"gjml={ab:.3e} but |a-b|_1={np.abs(a - b).sum():.3e}", k)
    secs = time.perf_counter() - t0
    out = []
    for name in ("reflexivity", "positivity", "symmetry", "reflexivity-converse"):
        if name in fails:
            detail, k = fails[name]
            out.append(SuiteResult(name, False, total, detail, seed, k, secs))
        else:
            out.append(SuiteResult(name, True, total, f"{len(HYPERCUBES)} hypercubes", seed, None, secs))
    return out


# ---------------------------------------------------------------------------
# focal losses on a 1-D scan


def _scan(lo: float = -1.0, hi: float = 1.0, step: float = SCAN_STEP) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def discrete_local_minima(values: np.ndarray) -> np.ndarray:
    """Indices that are strictly below every existing neighbour."""
    v = np.asarray(values)
    left = np.r_[np.inf, v[:-1]]
    right = np.r_[v[1:], np.inf]
    return np.flatnonzero((v < left) & (v < right))


def unique_minimum(gammas=(1.0, 2.0), n_targets: int = 33) -> SuiteResult:
    """Stable Focal-L1 per-pixel loss has a single minimum at the target."""
    t0 = time.perf_counter()
    xs = _scan()
    for gamma in gammas:
        cfg = LossConfig(gamma=gamma)
        for y0 in np.linspace(-1.0, 1.0, n_targets):
            vals = stable_focal_l1_map(xs, np.full_like(xs, y0), cfg)
            best = xs[np.argmin(vals)]
            if abs(best - y0) > SCAN_STEP * (1 + 1e-9):
                return SuiteResult("unique-minimum", False, n_targets * len(gammas),
                                   f"gamma={gamma} y0={y0:g}: argmin at {best:g}")
            for j in discrete_local_minima(vals):
                if abs(xs[j] - y0) > SCAN_STEP * (1 + 1e-9):
                    return SuiteResult("unique-minimum", False, n_targets * len(gammas),
                                       f"gamma={gamma} y0={y0:g}: extra local minimum at {xs[j]:g}")
    return SuiteResult("unique-minimum", True, n_targets * len(gammas),
                       f"gammas={list(gammas)}, {n_targets} targets", seconds=time.perf_counter() - t0)


def negative_side_decreasing(gammas=(1.0, 2.0), n_targets: int = 33) -> SuiteResult:
    """For a positive target the loss over ``x < 0`` is strictly decreasing
    (mirrored: for a negative target, strictly increasing over ``x > 0``)."""
    t0 = time.perf_counter()
    xs = _scan()
    neg, pos = xs[xs < 0], xs[xs > 0]
    for gamma in gammas:
        cfg = LossConfig(gamma=gamma)
        for y0 in np.linspace(-1.0, 1.0, n_targets):
            if y0 > 0:
                vals = stable_focal_l1_map(neg, np.full_like(neg, y0), cfg)
                ok = np.all(np.diff(vals) < 0)
            elif y0 < 0:
                vals = stable_focal_l1_map(pos, np.full_like(pos, y0), cfg)
                ok = np.all(np.diff(vals) > 0)
            else:
                continue
            if not ok:
                return SuiteResult("negative-side-decreasing", False, n_targets * len(gammas),
                                   f"gamma={gamma} y0={y0:g}: not strictly monotone on the opposite side")
    return SuiteResult("negative-side-decreasing", True, n_targets * len(gammas),
                       seconds=time.perf_counter() - t0)


def lower_bound(trials: int = FULL_TRIALS["lower-bound"], seed: int = 0) -> SuiteResult:
    """Stable Focal-L1 never exceeds the original Focal-L1 on [-1, 1]^D."""
    t0 = time.perf_counter()
    worst = -np.inf
    for k in range(trials):
        rng = _rng(seed, 200, k)
        dim = int(rng.integers(1, 65))
        f = rng.uniform(-1, 1, dim)
        y = rng.uniform(-1, 1, dim)
        # sprinkle exact zeros and endpoints
        special = rng.random(dim) < 0.05
        f[special] = rng.choice([-1.0, 0.0, 1.0], special.sum())
        gamma = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        cfg = LossConfig(gamma=gamma)
        gap = stable_focal_l1(f, y, cfg) - focal_l1_reference(f, y, cfg)
        worst = max(worst, gap)
        if gap > 1e-12:
            return SuiteResult("lower-bound", False, k + 1, f"stable - original = {gap:.3e}", seed, k,
                               time.perf_counter() - t0)
    return SuiteResult("lower-bound", True, trials, f"max(stable - original) = {worst:.3e}", seed,
                       seconds=time.perf_counter() - t0)


def focal_spurious_minimum(y0: float = 0.5, gamma: float = 1.0) -> SuiteResult:
    """The original Focal-L1 has a boundary minimum at -1 for target 0.5; the
    stable version decreases monotonically from -1 to the target."""
    cfg = LossConfig(gamma=gamma)
    at_edge = focal_l1_reference([-1.0], [y0], cfg)
    next_to = focal_l1_reference([-1.0 + SCAN_STEP], [y0], cfg)
    xs = _scan(-1.0, y0)
    stable = stable_focal_l1_map(xs, np.full_like(xs, y0), cfg)
    original = focal_l1_map(xs, np.full_like(xs, y0), cfg)
    problems = []
    if at_edge != 1.5:
        problems.append(f"original(-1)={at_edge!r} != 1.5")
    if not next_to > at_edge:
        problems.append("original has no minimum at -1")
    if 0 not in discrete_local_minima(original):
        problems.append("scan misses the original's edge minimum")
    if not np.all(np.diff(stable) < 0):
        problems.append("stable is not strictly decreasing toward the target")
    return SuiteResult("focal-spurious-minimum", not problems, 1,
                       "; ".join(problems) or f"original(-1)=1.5 < original(-1+h)={next_to:.6f}")


# ---------------------------------------------------------------------------
# transforms vs brute force


def random_mask(rng: np.random.Generator, max_side: int = 48) -> np.ndarray:
    """Two-class mask with FG density drawn from [5%, 60%]: either i.i.d.
    pixels or thresholded smoothed noise (blob/vessel-like regions)."""
    from scipy.ndimage import gaussian_filter

    while True:
        h, w = (int(v) for v in rng.integers(1, max_side + 1, 2))
        density = rng.uniform(0.05, 0.60)
        if rng.random() < 0.5:
            arr = rng.random((h, w)) < density
        else:
            noise = gaussian_filter(rng.standard_normal((h, w)), rng.uniform(0.5, 4.0))
            arr = noise > np.quantile(noise, 1 - density)
        if arr.any() and not arr.all():
            return arr.astype(np.uint8)


def oracle_equivalence(trials: int = FULL_TRIALS["oracle"], seed: int = 0, tol: float = 1e-9) -> SuiteResult:
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(trials):
        rng = _rng(seed, 300, k)
        mask = BinaryMask(random_mask(rng))
        flags = [(True, True), (True, False), (False, True)][int(rng.choice(3, p=[0.7, 0.15, 0.15]))]
        params = SaunaParams(include_boundary_map=flags[0], include_thickness_map=flags[1])
        fast = sauna_components(mask, params)
        d, t, yb, sauna = brute_force_oracles(mask, params)
        for label, a, b in (
            ("distance", fast.distance, d),
            ("thickness", fast.thickness, t),
            ("boundary", fast.boundary, yb),
            ("sauna", fast.sauna, sauna),
        ):
            err = float(np.max(np.abs(a.data - b.data)))
            worst = max(worst, err)
            if err >= tol:
                return SuiteResult("oracle-equivalence", False, k + 1,
                                   f"{label} differs by {err:.3e} on a {mask.shape} mask", seed, k,
                                   time.perf_counter() - t0)
    return SuiteResult("oracle-equivalence", True, trials, f"max |delta| = {worst:.1e}", seed,
                       seconds=time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# gradients


def _kink_free_pair(rng: np.random.Generator, dim: int, which: str):
    while True:
        p = rng.uniform(-0.99, 0.99, dim)
        t = rng.uniform(-0.99, 0.99, dim)
        gaps = [np.abs(p - t)]
        if which in ("gjml", "combined"):
            gaps.append(np.abs(p + t))
        if which in ("sfl1", "combined"):
            gaps.append(np.abs(p))
        if min(g.min() for g in gaps) > KINK_MARGIN:
            return p, t


def gradient_check(which: str, trials: int = FULL_TRIALS["gradient"], seed: int = 0,
                   tol: float = 1e-4) -> SuiteResult:
    """Analytic loss gradient vs. central differences (``which`` is one of
    ``gjml``, ``sfl1``, ``combined``)."""
    value_fn, grad_fn = {
        "gjml": (gjml, gjml_grad),
        "sfl1": (stable_focal_l1, stable_focal_l1_grad),
        "combined": (lambda p, t, c: combined_loss(p, t, c)[0], combined_loss_grad),
    }[which]
    tag = {"gjml": 400, "sfl1": 401, "combined": 402}[which]
    name = f"gradient-{which}"
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(trials):
        rng = _rng(seed, tag, k)
        dim = int(rng.integers(1, 17))
        p, t = _kink_free_pair(rng, dim, which)
        cfg = LossConfig(gamma=float(rng.choice([1.0, 1.5, 2.0])),
                         weight_gjml=float(rng.uniform(0.1, 2)), weight_sfl1=float(rng.uniform(0.1, 2)))
        err = relative_error(grad_fn(p, t, cfg), central_difference(lambda x: value_fn(x, t, cfg), p))
        worst = max(worst, err)
        if err >= tol:
            return SuiteResult(name, False, k + 1, f"relative error {err:.3e}", seed, k, time.perf_counter() - t0)
    return SuiteResult(name, True, trials, f"max rel err = {worst:.1e}", seed, seconds=time.perf_counter() - t0)


def end_to_end_gradient_check(trials: int = FULL_TRIALS["gradient"], seed: int = 0,
                              tol: float = 1e-3) -> SuiteResult:
    """Gradient of the training objective with respect to the model weights
    on random 8x8 problems, for the combined loss and the plain L1 baseline."""
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(trials):
        rng = _rng(seed, 500, k)
        loss = "l1" if k % 4 == 3 else "combined"
        cfg = LossConfig(gamma=float(rng.choice([1.0, 1.5, 2.0])))
        while True:
            n_img = int(rng.integers(1, 4))
            feats = [featurize(rng.random((8, 8))) for _ in range(n_img)]
            targets = [rng.uniform(-0.99, 0.99, (8, 8)) for _ in range(n_img)]
            w = rng.normal(0, 0.5, feats[0].shape[-1])
            preds = [np.tanh(phi @ w) for phi in feats]
            gaps = [np.abs(f - y) for f, y in zip(preds, targets)]
            if loss == "combined":
                gaps += [np.abs(f + y) for f, y in zip(preds, targets)] + [np.abs(f) for f in preds]
            if min(g.min() for g in gaps) > KINK_MARGIN:
                break
        _, analytic = objective(w, feats, targets, loss, cfg)
        numeric = central_difference(lambda v: objective(v, feats, targets, loss, cfg)[0], w)
        err = relative_error(analytic, numeric)
        worst = max(worst, err)
        if err >= tol:
            return SuiteResult("gradient-end-to-end", False, k + 1, f"relative error {err:.3e} ({loss})",
                               seed, k, time.perf_counter() - t0)
    return SuiteResult("gradient-end-to-end", True, trials, f"max rel err = {worst:.1e}", seed,
                       seconds=time.perf_counter() - t0)


def run_all(trials: int | None = None, seed: int = 0) -> list[SuiteResult]:
    """Every suite; ``trials`` caps the random-trial count of each suite."""

    def n(key):
        return FULL_TRIALS[key] if trials is None else min(trials, FULL_TRIALS[key])

    results = metric_axioms(n("metric"), seed)
    results.append(unique_minimum())
    results.append(negative_side_decreasing())
    results.append(lower_bound(n("lower-bound"), seed))
    results.append(focal_spurious_minimum())
    results.append(oracle_equivalence(n("oracle"), seed))
    for which in ("gjml", "sfl1", "combined"):
        results.append(gradient_check(which, n("gradient"), seed))
    results.append(end_to_end_gradient_check(n("gradient"), seed))
    return results


def format_table(results: list[SuiteResult]) -> str:
    rows = [("property", "status", "trials", "seconds", "detail")]
    for r in results:
        detail = r.detail
        if not r.passed and r.seed is not None:
            detail += f" (seed={r.seed}, trial={r.trial})"
        rows.append((r.name, "PASS" if r.passed else "FAIL", str(r.trials), f"{r.seconds:.2f}", detail))
    widths = [max(len(row[i]) for row in rows) for i in range(4)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row[:4])) + "  " + row[4] for row in rows]
    return "\n".join(lines)
