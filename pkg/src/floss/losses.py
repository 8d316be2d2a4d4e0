"""Relaxed F-measure losses and the cross-entropy baselines.

All four losses work on a single prediction/ground-truth pair and return the
loss value together with its exact gradient with respect to the prediction.

Degenerate denominators are floored at ``eps`` (``max(H, eps)``) rather than
shifted by it, so that every closed-form value (e.g. the saturation gradient
``-beta2 / ((1 + beta2) * n_pos)``) is exact whenever the denominator is
non-vanishing, while an empty image with an empty prediction still yields
``F = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionError, SaturationError
from .maps import GradientMap, _frozen, check_shapes

EPS = 1e-8
DEFAULT_BETA2 = 0.3

LOSS_NAMES = ("floss", "logfloss", "ce", "balanced-ce")


@dataclass(frozen=True)
class RelaxedCounts:
    tp: float
    fp: float
    fn_: float
    n_pos: float
    n_neg: float


@dataclass(frozen=True)
class LossResult:
    loss: float
    grad: GradientMap


def _check_beta2(beta2):
    if not beta2 > 0:
        raise ValueError(f"beta2 must be positive, got {beta2}")


def relaxed_counts(pred, gt) -> RelaxedCounts:
    p, y = check_shapes(pred, gt)
    p, y = p.ravel(), y.ravel()
    n_pos = float(y.sum())
    tp = float(np.dot(p, y))
    fp = float(np.dot(p, 1.0 - y))
    # tp + fn_ must equal n_pos exactly, so derive fn_ from the identity
    return RelaxedCounts(tp=tp, fp=fp, fn_=n_pos - tp, n_pos=n_pos, n_neg=float(y.size - n_pos))


def _f_parts(p: np.ndarray, y: np.ndarray, beta2: float, eps: float):
    """Return (tp, H, floored, F) for flat arrays."""
    n_pos = y.sum()
    tp = np.dot(p, y)
    h = beta2 * n_pos + p.sum()  # beta2 * (tp + fn) + (tp + fp)
    floored = h < eps
    if floored:
        h = eps
    return tp, h, floored, (1.0 + beta2) * tp / h


def relaxed_f(pred, gt, beta2: float = DEFAULT_BETA2, eps: float = EPS) -> float:
    """Relaxed F-measure ``(1 + beta2) TP / H`` on soft counts."""
    _check_beta2(beta2)
    p, y = check_shapes(pred, gt)
    return float(_f_parts(p.ravel(), y.ravel(), beta2, eps)[3])


def _floss_grad(p, y, beta2, eps):
    tp, h, floored, f = _f_parts(p.ravel(), y.ravel(), beta2, eps)
    k = 1.0 + beta2
    if floored:
        # inside the floor H does not depend on the prediction
        return f, -k * y / h
    return f, k * tp / (h * h) - k * y / h


def floss(pred, gt, beta2: float = DEFAULT_BETA2, eps: float = EPS) -> LossResult:
    """``1 - F`` with gradient ``(1+b2) TP / H^2 - (1+b2) y_i / H``."""
    _check_beta2(beta2)
    p, y = check_shapes(pred, gt)
    f, grad = _floss_grad(p, y, beta2, eps)
    return LossResult(loss=float(1.0 - f), grad=GradientMap(_frozen(grad)))


def log_floss(pred, gt, beta2: float = DEFAULT_BETA2, eps: float = EPS) -> LossResult:
    """``-log F``; its gradient is the FLoss gradient divided by F."""
    _check_beta2(beta2)
    p, y = check_shapes(pred, gt)
    f, grad = _floss_grad(p, y, beta2, eps)
    if f <= eps:
        raise SaturationError(f"relaxed F = {f!r} <= eps; -log F is unbounded")
    return LossResult(loss=float(-math.log(f)), grad=GradientMap(_frozen(grad / f)))


def _weighted_ce(p, y, w_pos, w_neg, eps, reduction):
    # log((p + eps) / (1 + eps)) keeps the loss >= 0 and exactly 0 at p == y,
    # while the derivative is the plain -y/(p+eps) + (1-y)/(1-p+eps)
    log_norm = math.log1p(eps)
    pos = np.log(p + eps) - log_norm
    neg = np.log(1.0 - p + eps) - log_norm
    loss = -(w_pos * y * pos + w_neg * (1.0 - y) * neg).sum()
    grad = -w_pos * y / (p + eps) + w_neg * (1.0 - y) / (1.0 - p + eps)
    if reduction == "mean":
        loss, grad = loss / p.size, grad / p.size
    elif reduction != "sum":
        raise ValueError(f"reduction must be 'sum' or 'mean', got {reduction!r}")
    return LossResult(loss=max(float(loss), 0.0), grad=GradientMap(_frozen(grad)))


def celoss(pred, gt, eps: float = EPS, reduction: str = "sum") -> LossResult:
    """Binary cross-entropy summed over the pixels of one image.

    The gradient returned is that of the loss itself,
    ``-y/(p+eps) + (1-y)/(1-p+eps)``. ``reduction="mean"`` divides both loss
    and gradient by the pixel count.
    """
    p, y = check_shapes(pred, gt)
    return _weighted_ce(p, y, 1.0, 1.0, eps, reduction)


def balance_weights(gt) -> tuple[float, float]:
    """Per-image class weights ``(w_pos, w_neg)``.

    Positives are weighted by the background fraction and negatives by the
    foreground fraction.
    """
    _, y = check_shapes(gt, gt)
    frac_pos = float(y.sum()) / y.size
    return 1.0 - frac_pos, frac_pos


def balanced_celoss(pred, gt, eps: float = EPS, reduction: str = "sum") -> LossResult:
    p, y = check_shapes(pred, gt)
    w_pos, w_neg = balance_weights(y)
    return _weighted_ce(p, y, w_pos, w_neg, eps, reduction)


def get_loss(name: str) -> Callable[..., LossResult]:
    """Look a loss function up by its CLI name."""
    try:
        return _LOSSES[name]
    except KeyError:
        raise ValueError(f"unknown loss {name!r}; expected one of {', '.join(LOSS_NAMES)}") from None


_LOSSES = {
    "floss": floss,
    "logfloss": log_floss,
    "ce": celoss,
    "balanced-ce": balanced_celoss,
}


def evaluate_loss(name, pred, gt, beta2=DEFAULT_BETA2, eps=EPS, reduction="sum") -> LossResult:
    """Dispatch to a named loss, passing only the parameters it accepts."""
    fn = get_loss(name)
    if name in ("floss", "logfloss"):
        return fn(pred, gt, beta2=beta2, eps=eps)
    return fn(pred, gt, eps=eps, reduction=reduction)


def finite_difference_grad(loss_fn, pred, gt, h: float = 1e-5, **params) -> GradientMap:
    """Central-difference gradient of a loss, one pixel at a time.

    ``loss_fn`` is either a loss name or a callable returning a LossResult.
    Perturbed values are clamped to [0, 1] and the actual step is used in the
    denominator.
    """
    if isinstance(loss_fn, str):
        name = loss_fn
        loss_fn = lambda p, y, **kw: evaluate_loss(name, p, y, **kw)  # noqa: E731
    p, y = check_shapes(pred, gt)
    work = np.array(p, dtype=np.float64)
    flat = work.reshape(-1)
    out = np.empty(flat.size)
    for i in range(flat.size):
        x0 = flat[i]
        hi, lo = min(x0 + h, 1.0), max(x0 - h, 0.0)
        flat[i] = hi
        f_hi = loss_fn(work, y, **params).loss
        flat[i] = lo
        f_lo = loss_fn(work, y, **params).loss
        flat[i] = x0
        out[i] = (f_hi - f_lo) / (hi - lo)
    return GradientMap.from_array(out.reshape(p.shape))


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Largest ``|a - n| / max(|a|, |n|, floor)`` over all entries."""
    a = np.asarray(getattr(analytic, "values", analytic), dtype=np.float64)
    n = np.asarray(getattr(numeric, "values", numeric), dtype=np.float64)
    if a.shape != n.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {n.shape}")
    denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)
    return float(np.max(np.abs(a - n) / denom))


def loss_surface_grid(loss_fn, gt, beta2: float = DEFAULT_BETA2, resolution: int = 101, eps: float = EPS):
    """Evaluate a loss over the uniform grid ``[0, 1]^2`` of a 2-pixel problem.

    Returns an ``(resolution**2, 3)`` array of ``(y0, y1, loss)`` rows sorted by
    ``y0`` then ``y1``. Points where Log-FLoss is unbounded hold ``inf``.
    """
    y = np.asarray(getattr(gt, "values", gt), dtype=np.float64).ravel()
    if y.size != 2:
        raise DimensionError(f"surface ground truth must have exactly 2 pixels, got {y.size}")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    name = loss_fn if isinstance(loss_fn, str) else None
    axis = np.linspace(0.0, 1.0, int(resolution))
    rows = np.empty((axis.size * axis.size, 3))
    k = 0
    gt2 = y.reshape(1, 2)
    for a in axis:
        for b in axis:
            p = np.array([[a, b]])
            try:
                if name is not None:
                    val = evaluate_loss(name, p, gt2, beta2=beta2, eps=eps).loss
                else:
                    val = loss_fn(p, gt2).loss
            except SaturationError:
                val = math.inf
            rows[k] = (a, b, val)
            k += 1
    return rows
