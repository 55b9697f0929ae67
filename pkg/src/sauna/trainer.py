"""Linear-on-features pixel regressor trained with hand-derived gradients.

The model predicts ``f = tanh(phi @ w)`` per pixel from a fixed 8-channel
feature bank. Training is full-batch gradient descent with a constant step;
the per-image loss gradient is chained through ``tanh'`` and the features,
then averaged over images in corpus order.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import losses
from .errors import DivergenceError, InputError
from .grid import BinaryMask, ScalarField
from .losses import LossConfig
from .metrics import aggregate, binarize, confusion, metrics_from_confusion
from .synth import SynthConfig, generate
from .transforms import SaunaParams, sauna_transform

log = logging.getLogger(__name__)

__all__ = [
    "FEATURE_NAMES",
    "featurize",
    "fit_standardizer",
    "PixelModel",
    "Variant",
    "VARIANTS",
    "objective",
    "train",
    "TrainResult",
    "ExperimentResult",
    "run_experiment",
]

FEATURE_NAMES = (
    "intensity",
    "blur_r1",
    "blur_r2",
    "blur_r4",
    "grad_x",
    "grad_y",
    "std_r2",
    "bias",
)
# |z| beyond this saturates tanh to within 1e-15 of +-1; clipping keeps f strictly inside (-1, 1)
Z_CLIP = 18.0


def _windows(img: np.ndarray, radius: int) -> np.ndarray:
    padded = np.pad(img, radius, mode="edge")
    return sliding_window_view(padded, (2 * radius + 1, 2 * radius + 1))


def featurize(image) -> np.ndarray:
    """Return an ``(H, W, 8)`` feature bank; borders are edge-clamped."""
    img = np.asarray(getattr(image, "data", image), dtype=np.float64)
    if img.ndim != 2:
        raise InputError("featurize expects a single-channel 2-D image")
    if not np.all(np.isfinite(img)):
        raise InputError("image contains non-finite values")
    padded = np.pad(img, 1, mode="edge")
    gx = np.abs(padded[1:-1, 2:] - padded[1:-1, :-2]) / 2.0
    gy = np.abs(padded[2:, 1:-1] - padded[:-2, 1:-1]) / 2.0
    chans = [
        img,
        _windows(img, 1).mean(axis=(-2, -1)),
        _windows(img, 2).mean(axis=(-2, -1)),
        _windows(img, 4).mean(axis=(-2, -1)),
        gx,
        gy,
        _windows(img, 2).std(axis=(-2, -1)),
        np.ones_like(img),
    ]
    return np.stack(chans, axis=-1)


def fit_standardizer(feats: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and std over all pixels of ``feats``.

    Constant channels (the bias) keep mean 0 and scale 1.
    """
    flat = np.concatenate([f.reshape(-1, f.shape[-1]) for f in feats])
    mean = flat.mean(axis=0)
    scale = flat.std(axis=0)
    constant = scale <= 1e-12
    mean[constant] = 0.0
    scale[constant] = 1.0
    return mean, scale


@dataclass
class PixelModel:
    """``f = tanh(((phi - feature_mean) / feature_scale) @ weights)``."""

    weights: np.ndarray = field(default_factory=lambda: np.zeros(len(FEATURE_NAMES)))
    learning_rate: float = 1e-2
    epochs: int = 200
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 1:
            raise InputError(f"weights must be 1-D, got shape {self.weights.shape}")
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be positive")
        if self.epochs < 0:
            raise InputError("epochs must be non-negative")

    def standardize(self, feats: np.ndarray) -> np.ndarray:
        if self.feature_mean is None:
            return feats
        return (feats - self.feature_mean) / self.feature_scale

    def predict_features(self, feats: np.ndarray) -> np.ndarray:
        """Predict from raw (unstandardized) features."""
        return np.tanh(np.clip(self.standardize(feats) @ self.weights, -Z_CLIP, Z_CLIP))

    def predict(self, image) -> ScalarField:
        return ScalarField(self.predict_features(featurize(image)), "prediction")


@dataclass(frozen=True)
class Variant:
    """Target construction plus objective for one experiment arm.

    ``sauna=None`` means hard targets ``2y - 1``; ``loss`` is ``"combined"``
    or ``"l1"``.
    """

    name: str
    sauna: SaunaParams | None = SaunaParams()
    loss: str = "combined"
    weight_gjml: float = 1.0
    weight_sfl1: float = 1.0

    def targets(self, mask: BinaryMask) -> np.ndarray:
        if self.sauna is None:
            return 2.0 * mask.data.astype(np.float64) - 1.0
        return sauna_transform(mask, self.sauna).data

    def loss_config(self, gamma: float = 1.0) -> LossConfig:
        return LossConfig(gamma=gamma, weight_gjml=self.weight_gjml, weight_sfl1=self.weight_sfl1)


VARIANTS = {
    v.name: v
    for v in (
        Variant("hard-l1", sauna=None, loss="l1"),
        Variant("sauna"),
        Variant("sauna-no-yT", sauna=SaunaParams(include_thickness_map=False)),
        Variant("sauna-no-yB", sauna=SaunaParams(include_boundary_map=False)),
        Variant("sauna-only-gjml", weight_sfl1=0.0),
        Variant("sauna-only-sfl1", weight_gjml=0.0),
    )
}


def _loss_and_grad_f(pred: np.ndarray, target: np.ndarray, loss: str, cfg: LossConfig):
    if loss == "l1":
        return losses.l1_loss(pred, target), losses.l1_loss_grad(pred, target)
    if loss == "combined":
        total, _ = losses.combined_loss(pred, target, cfg)
        return total, losses.combined_loss_grad(pred, target, cfg)
    raise InputError(f"unknown loss {loss!r}")


def objective(weights, feats: list[np.ndarray], targets: list[np.ndarray], loss: str, cfg: LossConfig):
    """Mean per-image loss and its gradient with respect to ``weights``."""
    w = np.asarray(weights, dtype=np.float64)
    total = 0.0
    grad = np.zeros_like(w)
    for phi, y in zip(feats, targets):
        z = phi @ w
        inside = np.abs(z) < Z_CLIP
        f = np.tanh(np.clip(z, -Z_CLIP, Z_CLIP))
        value, g_f = _loss_and_grad_f(f, y, loss, cfg)
        g_z = g_f * (1.0 - f * f) * inside
        total += value
        grad += np.tensordot(g_z, phi, axes=([0, 1], [0, 1]))
    n = len(feats)
    return total / n, grad / n


@dataclass
class TrainResult:
    model: PixelModel
    curve: list[float]


def train(
    corpus,
    cfg: LossConfig = LossConfig(),
    model: PixelModel | None = None,
    loss: str = "combined",
    features: list[np.ndarray] | None = None,
) -> TrainResult:
    """Full-batch gradient descent on ``corpus`` = [(image, target), ...].

    ``curve[k]`` is the objective before update ``k``; the final entry is the
    objective of the returned weights. ``features`` are raw feature banks
    (computed from the images when omitted); the model's standardizer, if
    any, is applied before the linear layer.
    """
    corpus = list(corpus)
    if not corpus:
        raise InputError("training corpus is empty")
    model = model or PixelModel()
    targets = []
    for _, target in corpus:
        t = np.asarray(getattr(target, "data", target), dtype=np.float64)
        if t.min() < -1 or t.max() > 1:
            raise InputError("targets must lie in [-1, 1]")
        targets.append(t)
    feats = features if features is not None else [featurize(img) for img, _ in corpus]
    feats = [model.standardize(phi) for phi in feats]
    w = model.weights.copy()
    curve = []
    for epoch in range(model.epochs + 1):
        value, grad = objective(w, feats, targets, loss, cfg)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            raise DivergenceError(f"non-finite loss at epoch {epoch}")
        curve.append(value)
        if epoch == model.epochs:
            break
        w = w - model.learning_rate * grad
        if epoch % 50 == 0:
            log.debug("epoch %d loss %.6f", epoch, value)
    trained = PixelModel(w, model.learning_rate, model.epochs, model.feature_mean, model.feature_scale)
    return TrainResult(trained, curve)


@dataclass
class ExperimentResult:
    rows: list[dict]
    curves: dict[str, list[float]]
    weights: dict[str, np.ndarray]


def run_experiment(
    seed: int = 7,
    n_train: int = 20,
    n_test: int = 10,
    variants=tuple(VARIANTS),
    epochs: int = 200,
    learning_rate: float = 1e-2,
    gamma: float = 1.0,
    synth: SynthConfig | None = None,
) -> ExperimentResult:
    """Train each variant on the same synthetic data and score test IoU."""
    if n_train < 1 or n_test < 1:
        raise InputError("need at least one train and one test image")
    unknown = [v for v in variants if v not in VARIANTS]
    if unknown:
        raise InputError(f"unknown variants: {', '.join(unknown)}")
    synth = synth or SynthConfig(seed=seed)
    data = generate(synth, n_train + n_test)
    train_set, test_set = data[:n_train], data[n_train:]
    train_feats = [featurize(img) for img, _ in train_set]
    test_feats = [featurize(img) for img, _ in test_set]
    mean, scale = fit_standardizer(train_feats)

    rows, curves, weights = [], {}, {}
    for name in variants:
        variant = VARIANTS[name]
        corpus = [(img, variant.targets(mask)) for img, mask in train_set]
        log.info("training %s", name)
        result = train(
            corpus,
            variant.loss_config(gamma),
            PixelModel(learning_rate=learning_rate, epochs=epochs, feature_mean=mean, feature_scale=scale),
            loss=variant.loss,
            features=train_feats,
        )
        items = [
            metrics_from_confusion(confusion(binarize(result.model.predict_features(phi)), mask), id=str(k))
            for k, (phi, (_, mask)) in enumerate(zip(test_feats, test_set))
        ]
        report = aggregate(items)
        rows.append(
            {
                "variant": name,
                "iou_mean": report.mean["iou"],
                "iou_se": report.se["iou"],
                "dice_mean": report.mean["dice"],
                "ba_mean": report.mean["ba"],
                "final_loss": result.curve[-1],
            }
        )
        curves[name] = result.curve
        weights[name] = result.model.weights
    return ExperimentResult(rows, curves, weights)
