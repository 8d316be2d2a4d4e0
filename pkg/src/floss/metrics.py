"""Thresholded evaluation: precision/recall/F, MAE, sweeps, MaxF and MeanF.

Precision, recall and F all use floored denominators (``max(d, eps)``), the
same convention as :mod:`floss.losses`, so that the F of a binary prediction
is bit-identical to the relaxed F of that prediction. F is computed from the
counts as ``(1 + b2) TP / (b2 (TP + FN) + (TP + FP))``, which equals the
harmonic combination of precision and recall whenever ``TP > 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError
from .losses import DEFAULT_BETA2, EPS
from .maps import binarize, check_shapes

AGGREGATION_MODES = ("average-pr", "per-image-f")


def default_thresholds() -> np.ndarray:
    """The 256-level grid ``{i / 255}``."""
    return np.arange(256) / 255.0


@dataclass(frozen=True)
class DiscreteCounts:
    tp: int
    fp: int
    fn_: int


@dataclass(frozen=True)
class SweepCurve:
    thresholds: np.ndarray
    precision: np.ndarray
    recall: np.ndarray
    f: np.ndarray
    beta2: float = DEFAULT_BETA2

    def __post_init__(self):
        n = len(self.thresholds)
        if n < 1 or not (len(self.precision) == len(self.recall) == len(self.f) == n):
            raise DimensionError("sweep sequences must share one non-zero length")

    def __len__(self):
        return len(self.thresholds)

    def rows(self):
        return list(zip(self.thresholds.tolist(), self.precision.tolist(), self.recall.tolist(), self.f.tolist()))


@dataclass(frozen=True)
class EvalSummary:
    max_f: float
    mean_f: float
    mae: float
    t_o: float


@dataclass
class ImageRecord:
    image_id: str
    max_f: float
    mean_f: float
    mae: float
    t_o: float
    curve: SweepCurve = field(repr=False)


@dataclass
class DatasetEval:
    summary: EvalSummary
    curve: SweepCurve
    mode: str
    images: list[ImageRecord]


def _div(num, den, eps):
    return num / np.maximum(den, eps)


def f_from_counts(tp, fp, fn_, beta2=DEFAULT_BETA2, eps=EPS):
    """F from (possibly array-valued) counts; same operation order as the losses."""
    n_pos = tp + fn_
    return _div((1.0 + beta2) * tp, beta2 * n_pos + (tp + fp), eps)


def f_from_pr(p, r, beta2=DEFAULT_BETA2, eps=EPS):
    """Weighted harmonic mean of precision and recall."""
    return _div((1.0 + beta2) * p * r, beta2 * p + r, eps)


def discrete_counts(binpred, gt) -> DiscreteCounts:
    b, y = check_shapes(binpred, gt)
    b, y = b.astype(bool), y.astype(bool)
    return DiscreteCounts(
        tp=int(np.count_nonzero(b & y)),
        fp=int(np.count_nonzero(b & ~y)),
        fn_=int(np.count_nonzero(~b & y)),
    )


def f_at_threshold(pred, gt, t: float, beta2: float = DEFAULT_BETA2, eps: float = EPS):
    """Return ``(precision, recall, f)`` after binarizing ``pred`` at ``t``."""
    check_shapes(pred, gt)
    c = discrete_counts(binarize(pred, t), gt)
    tp, fp, fn_ = float(c.tp), float(c.fp), float(c.fn_)
    p = _div(tp, tp + fp, eps)
    r = _div(tp, tp + fn_, eps)
    return float(p), float(r), float(f_from_counts(tp, fp, fn_, beta2, eps))


def _check_thresholds(thresholds) -> np.ndarray:
    t = np.asarray(list(thresholds), dtype=np.float64)
    if t.size == 0:
        raise ValueError("threshold set must be non-empty")
    if t.min() < 0.0 or t.max() > 1.0:
        raise ValueError("thresholds must lie in [0, 1]")
    return np.unique(t)


def sweep_counts(pred, gt, thresholds) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorised ``(tp, fp, fn)`` per threshold via sorted search.

    ``count(pred > t)`` is ``n - searchsorted(sorted, t, side="right")``, which
    reproduces the strict-inequality binarization exactly.
    """
    p, y = check_shapes(pred, gt)
    p, y = p.ravel(), y.ravel().astype(bool)
    pos = np.sort(p[y])
    neg = np.sort(p[~y])
    tp = pos.size - np.searchsorted(pos, thresholds, side="right")
    fp = neg.size - np.searchsorted(neg, thresholds, side="right")
    return tp.astype(np.float64), fp.astype(np.float64), (pos.size - tp).astype(np.float64)


def sweep(pred, gt, thresholds=None, beta2: float = DEFAULT_BETA2, eps: float = EPS) -> SweepCurve:
    t = default_thresholds() if thresholds is None else _check_thresholds(thresholds)
    tp, fp, fn_ = sweep_counts(pred, gt, t)
    return SweepCurve(
        thresholds=t,
        precision=_div(tp, tp + fp, eps),
        recall=_div(tp, tp + fn_, eps),
        f=f_from_counts(tp, fp, fn_, beta2, eps),
        beta2=beta2,
    )


def optimal_threshold(curve: SweepCurve) -> tuple[float, float]:
    """``(t_o, max_f)``; ties go to the smallest threshold."""
    k = int(np.argmax(curve.f))  # argmax returns the first maximum
    return float(curve.thresholds[k]), float(curve.f[k])


def mean_f(curve: SweepCurve) -> float:
    return float(np.mean(curve.f))


def mae(pred, gt) -> float:
    p, y = check_shapes(pred, gt)
    return float(np.mean(np.abs(p - y)))


def summarize(curve: SweepCurve, mae_value: float) -> EvalSummary:
    t_o, max_f = optimal_threshold(curve)
    return EvalSummary(max_f=max_f, mean_f=mean_f(curve), mae=mae_value, t_o=t_o)


def dataset_eval(
    pairs: Iterable,
    thresholds=None,
    beta2: float = DEFAULT_BETA2,
    mode: str = "average-pr",
    ids: Sequence[str] | None = None,
    eps: float = EPS,
) -> DatasetEval:
    """Evaluate a dataset of ``(pred, gt)`` pairs.

    In ``average-pr`` mode the per-image precision and recall are averaged at
    each threshold and then combined into F; in ``per-image-f`` mode the
    per-image F values are averaged directly. MaxF, MeanF and ``t_o`` come from
    the resulting dataset-level curve; MAE is the mean of per-image MAE.
    """
    if mode not in AGGREGATION_MODES:
        raise ValueError(f"mode must be one of {AGGREGATION_MODES}, got {mode!r}")
    pairs = list(pairs)
    if not pairs:
        raise ValueError("dataset is empty")
    if ids is None:
        ids = [f"{i:05d}" for i in range(len(pairs))]
    t = default_thresholds() if thresholds is None else _check_thresholds(thresholds)

    records = []
    for image_id, (pred, gt) in zip(ids, pairs):
        try:
            curve = sweep(pred, gt, t, beta2, eps)
            err = mae(pred, gt)
        except DimensionError as exc:
            raise DimensionError(f"image {image_id}: {exc}") from None
        s = summarize(curve, err)
        records.append(ImageRecord(image_id, s.max_f, s.mean_f, s.mae, s.t_o, curve))

    # fixed input-order reduction
    p_mean = np.mean([r.curve.precision for r in records], axis=0)
    r_mean = np.mean([r.curve.recall for r in records], axis=0)
    if mode == "average-pr":
        f = f_from_pr(p_mean, r_mean, beta2, eps)
    else:
        f = np.mean([r.curve.f for r in records], axis=0)
    curve = SweepCurve(thresholds=t, precision=p_mean, recall=r_mean, f=f, beta2=beta2)
    summary = summarize(curve, float(np.mean([r.mae for r in records])))
    return DatasetEval(summary=summary, curve=curve, mode=mode, images=records)


def threshold_stats(summaries) -> tuple[float, float]:
    """Mean and population variance of the optimal thresholds."""
    t = np.array([s.t_o for s in summaries], dtype=np.float64)
    if t.size == 0:
        raise ValueError("need at least one summary")
    return float(t.mean()), float(t.var())
