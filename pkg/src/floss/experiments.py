"""Shipped toy-benchmark configuration and the analyses behind the reports.

The benchmark: 300 seeded 32x32 images split 200/100, a 4-feature logistic
model, 20 epochs of one-image gradient descent. FLoss-family runs use a
learning rate ten times the cross-entropy one.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import metrics
from .losses import DEFAULT_BETA2
from .model import TrainConfig, TrainResult, iterations_to_fraction, polarization, predict, train
from .synth import Sample, SynthConfig, generate, split

# noise above the smallest fg/bg contrast (0.2) keeps the task unsaturated
BENCHMARK_DATA = SynthConfig(width=32, height=32, n_images=300, noise_sigma=0.3, seed=0)
TRAIN_FRACTION = 2 / 3
SPLIT_SEED = 0

CE_LR = 1.0
FLOSS_LR = 10.0 * CE_LR

SHIPPED = {
    "floss": TrainConfig(loss="floss", lr=FLOSS_LR, epochs=20, eval_every=10),
    "logfloss": TrainConfig(loss="logfloss", lr=FLOSS_LR, epochs=20, eval_every=10),
    "ce": TrainConfig(loss="ce", lr=CE_LR, epochs=20, eval_every=10),
    "balanced-ce": TrainConfig(loss="balanced-ce", lr=CE_LR, epochs=20, eval_every=10),
}

BETA2_GRID = (0.1, 0.3, 1.0, 2.0)


def shipped_config(loss: str, **overrides) -> TrainConfig:
    from dataclasses import replace

    return replace(SHIPPED[loss], **overrides)


def benchmark_split(config: SynthConfig = BENCHMARK_DATA):
    return split(generate(config), TRAIN_FRACTION, SPLIT_SEED)


@dataclass
class RunAnalysis:
    """Test-set metrics of one trained model (or one run directory)."""

    name: str
    evaluation: metrics.DatasetEval
    preds: list
    masks: list
    beta2: float = DEFAULT_BETA2

    @property
    def summary(self) -> metrics.EvalSummary:
        return self.evaluation.summary

    @property
    def mean_max_ratio(self) -> float:
        s = self.summary
        return s.mean_f / s.max_f if s.max_f > 0 else 0.0

    def per_image_t_o(self) -> np.ndarray:
        return np.array([r.t_o for r in self.evaluation.images])

    def t_o_stats(self) -> tuple[float, float]:
        return metrics.threshold_stats(self.evaluation.images)

    def pr_at_t_o(self) -> tuple[float, float]:
        """Dataset-level precision and recall at the dataset optimal threshold."""
        c = self.evaluation.curve
        k = int(np.argmax(c.f))
        return float(c.precision[k]), float(c.recall[k])

    def prf_at(self, t: float, beta2: float = DEFAULT_BETA2) -> tuple[float, float, float]:
        """Mean per-image precision and recall at ``t``, combined into F."""
        vals = np.array([metrics.f_at_threshold(p, y, t, beta2)[:2] for p, y in zip(self.preds, self.masks)])
        p, r = vals.mean(axis=0)
        return float(p), float(r), float(metrics.f_from_pr(p, r, beta2))

    def polarization(self) -> float:
        return polarization(self.preds)


def analyse(name: str, preds, masks, ids=None, beta2: float = DEFAULT_BETA2, mode: str = "average-pr") -> RunAnalysis:
    ev = metrics.dataset_eval(list(zip(preds, masks)), beta2=beta2, mode=mode, ids=ids)
    return RunAnalysis(name=name, evaluation=ev, preds=list(preds), masks=list(masks), beta2=beta2)


def analyse_model(name: str, params, test_set: list[Sample], beta2: float = DEFAULT_BETA2) -> RunAnalysis:
    preds = [predict(params, s.features) for s in test_set]
    return analyse(name, preds, [s.mask for s in test_set], [s.id for s in test_set], beta2)


@dataclass
class BenchmarkRun:
    result: TrainResult
    analysis: RunAnalysis

    @property
    def iterations_to_95(self) -> int:
        return iterations_to_fraction(self.result.log, 0.95)


def run_benchmark(configs: dict[str, TrainConfig], split_sets=None) -> dict[str, BenchmarkRun]:
    """Train every named config on the benchmark split and analyse on the test set.

    Test metrics always use beta2 = 0.3, whatever beta2 a run trained with.
    """
    train_set, test_set = split_sets if split_sets is not None else benchmark_split()
    out = {}
    for name, cfg in configs.items():
        res = train(train_set, test_set, cfg)
        out[name] = BenchmarkRun(res, analyse_model(name, res.params, test_set))
    return out


def beta2_configs(grid=BETA2_GRID) -> dict[str, TrainConfig]:
    return {f"floss-b2-{b:g}": shipped_config("floss", beta2=b) for b in grid}


def monotone_violations(values, increasing: bool = True) -> tuple[int, float]:
    """Number of adjacent pairs breaking monotonicity, and the size of the worst break."""
    v = np.asarray(values, dtype=np.float64)
    d = np.diff(v) if increasing else -np.diff(v)
    worst = float(-d.min()) if d.size and d.min() < 0 else 0.0
    return int(np.count_nonzero(d < 0)), worst
