"""Pixelwise logistic predictor trained by plain gradient descent.

The predictor is ``sigmoid(w . x_i)`` over the per-pixel feature vector. The
loss gradient with respect to the prediction is pushed through the sigmoid by
the chain rule; no autodiff is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from . import metrics
from .errors import DimensionError, DivergenceError
from .losses import DEFAULT_BETA2, EPS, LOSS_NAMES, evaluate_loss
from .maps import SaliencyMap, _frozen


@dataclass(frozen=True)
class TrainConfig:
    loss: str = "floss"
    beta2: float = DEFAULT_BETA2
    lr: float = 1.0
    epochs: int = 20
    seed: int = 0
    init_scale: float = 0.01
    eval_every: int = 50
    # CE is averaged over pixels during training so learning rates stay comparable
    ce_reduction: str = "mean"

    def validate(self):
        if self.loss not in LOSS_NAMES:
            raise ValueError(f"unknown loss {self.loss!r}; expected one of {', '.join(LOSS_NAMES)}")
        if not self.lr >= 0:
            raise ValueError("lr must be non-negative")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")
        if not self.beta2 > 0:
            raise ValueError("beta2 must be positive")

    def as_dict(self) -> dict:
        return {
            "loss": self.loss,
            "beta2": self.beta2,
            "lr": self.lr,
            "epochs": self.epochs,
            "seed": self.seed,
            "init_scale": self.init_scale,
            "eval_every": self.eval_every,
            "ce_reduction": self.ce_reduction,
        }


@dataclass(frozen=True)
class LogRecord:
    iteration: int
    train_loss: float
    max_f: float
    mean_f: float
    mae: float


@dataclass
class ConvergenceLog:
    records: list[LogRecord] = field(default_factory=list)

    def append(self, record: LogRecord):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("log iterations must be strictly increasing")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def __len__(self):
        return len(self.records)


@dataclass
class TrainResult:
    params: np.ndarray
    log: ConvergenceLog
    summary: metrics.EvalSummary
    config: TrainConfig


def init_params(config: TrainConfig, n_features: int = 4) -> np.ndarray:
    rng = np.random.default_rng(config.seed)
    return rng.uniform(-config.init_scale, config.init_scale, size=n_features)


def _logits(params, features) -> np.ndarray:
    x = features.values if hasattr(features, "values") else np.asarray(features)
    w = np.asarray(params, dtype=np.float64)
    if w.shape != (x.shape[-1],):
        raise DimensionError(f"expected {x.shape[-1]} weights, got shape {w.shape}")
    return x @ w


def predict(params, features) -> SaliencyMap:
    """``sigmoid(w . x)`` at every pixel."""
    return SaliencyMap(_frozen(expit(_logits(params, features))))


def _loss_kwargs(config: TrainConfig) -> dict:
    return {"beta2": config.beta2, "eps": EPS, "reduction": config.ce_reduction}


def loss_and_param_gradient(params, sample, config: TrainConfig) -> tuple[float, np.ndarray]:
    pred = predict(params, sample.features)
    res = evaluate_loss(config.loss, pred, sample.mask, **_loss_kwargs(config))
    p = pred.values
    dz = res.grad.values * p * (1.0 - p)
    grad = np.tensordot(dz, sample.features.values, axes=([0, 1], [0, 1]))
    return res.loss, grad


def param_gradient(params, sample, config: TrainConfig) -> np.ndarray:
    """``sum_i dL/dy_i * y_i (1 - y_i) * x_i`` for the configured loss."""
    return loss_and_param_gradient(params, sample, config)[1]


def sample_loss(params, sample, config: TrainConfig) -> float:
    pred = predict(params, sample.features)
    return evaluate_loss(config.loss, pred, sample.mask, **_loss_kwargs(config)).loss


def evaluate(params, samples, beta2: float = DEFAULT_BETA2, mode: str = "average-pr") -> metrics.DatasetEval:
    pairs = [(predict(params, s.features), s.mask) for s in samples]
    return metrics.dataset_eval(pairs, beta2=beta2, mode=mode, ids=[s.id for s in samples])


def train(train_set, test_set, config: TrainConfig, params=None) -> TrainResult:
    """Per-image gradient descent over seed-shuffled epochs.

    Each step uses one image. The test set is evaluated every
    ``config.eval_every`` iterations and after the final iteration; the logged
    ``train_loss`` is the mean step loss since the previous checkpoint.
    """
    config.validate()
    train_set, test_set = list(train_set), list(test_set)
    if not train_set or not test_set:
        raise ValueError("train and test sets must be non-empty")
    w = init_params(config, train_set[0].features.channels) if params is None else np.array(params, dtype=np.float64)
    order_rng = np.random.default_rng([config.seed, 1])
    log = ConvergenceLog()
    window = []
    iteration = 0
    total = config.epochs * len(train_set)
    for _ in range(config.epochs):
        for idx in order_rng.permutation(len(train_set)):
            try:
                loss, grad = loss_and_param_gradient(w, train_set[idx], config)
            except ArithmeticError:
                raise DivergenceError(iteration + 1, math.inf) from None
            if not (math.isfinite(loss) and np.all(np.isfinite(grad))):
                raise DivergenceError(iteration + 1, loss)
            w = w - config.lr * grad
            iteration += 1
            window.append(loss)
            if iteration % config.eval_every == 0 or iteration == total:
                s = evaluate(w, test_set, config.beta2).summary
                log.append(LogRecord(iteration, float(np.mean(window)), s.max_f, s.mean_f, s.mae))
                window = []
    final = evaluate(w, test_set, config.beta2).summary
    return TrainResult(params=w, log=log, summary=final, config=config)


def iterations_to_fraction(log: ConvergenceLog, fraction: float = 0.95) -> int:
    """First logged iteration whose MaxF reaches ``fraction`` of the final MaxF."""
    max_f = log.column("max_f")
    target = fraction * max_f[-1]
    k = int(np.argmax(max_f >= target))
    return log.records[k].iteration


def polarization(preds, low: float = 0.2, high: float = 0.8) -> float:
    """Fraction of predicted values strictly inside ``(low, high)``."""
    vals = np.concatenate([np.asarray(getattr(p, "values", p)).ravel() for p in preds])
    return float(np.mean((vals > low) & (vals < high)))


def with_overrides(config: TrainConfig, **kw) -> TrainConfig:
    return replace(config, **kw)
