"""Command-line entry point: ``floss <subcommand> [flags]``.

Exit codes: 0 on success, 1 for invalid flags or inputs, 2 for runtime
failures (shape mismatches, gradient checks over tolerance, divergence).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, figures, metrics, storage
from .errors import FlossError
from .losses import DEFAULT_BETA2, LOSS_NAMES, evaluate_loss, finite_difference_grad, loss_surface_grid, max_relative_error
from .maps import SaliencyMap, _frozen
from .model import TrainConfig, predict, train
from .synth import FEATURE_NAMES, SynthConfig, generate, sample_from_arrays, split

GRAD_TOL = 1e-6
SURFACE_GT = {"01": (0.0, 1.0), "11": (1.0, 1.0)}


class UsageError(Exception):
    """Bad flags or inputs; exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive(typ):
    def conv(text):
        v = typ(text)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v

    return conv


# ------------------------------------------------------------------ losscheck

def _random_pair(rng, size):
    pred = rng.uniform(0.05, 0.95, size=(size, size))
    gt = (rng.random((size, size)) < 0.3).astype(np.float64)
    if not gt.any():
        gt.flat[rng.integers(gt.size)] = 1.0
    return pred, gt


def gradient_check(loss: str, beta2=DEFAULT_BETA2, size=8, trials=100, seed=0, h=1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        pred, gt = _random_pair(rng, size)
        analytic = evaluate_loss(loss, pred, gt, beta2=beta2).grad
        numeric = finite_difference_grad(loss, pred, gt, h=h, beta2=beta2)
        worst = max(worst, max_relative_error(analytic, numeric))
    return worst


def cmd_losscheck(args) -> int:
    losses = LOSS_NAMES if args.loss == "all" else (args.loss,)
    print(f"{'loss':<12} {'max_rel_error':>14}  status")
    ok = True
    for name in losses:
        err = gradient_check(name, args.beta2, args.size, args.trials, args.seed, args.h)
        passed = err < GRAD_TOL
        ok &= passed
        print(f"{name:<12} {err:>14.3e}  {'ok' if passed else 'FAIL'}")
    return 0 if ok else 2


# -------------------------------------------------------------------- surface

def cmd_surface(args) -> int:
    if args.gt not in SURFACE_GT:
        raise UsageError(f"--gt must be one of {', '.join(SURFACE_GT)}, got {args.gt!r}")
    out = storage.ensure_dir(args.out)
    gt = np.array([SURFACE_GT[args.gt]])
    grid = loss_surface_grid(args.loss, gt, beta2=args.beta2, resolution=args.res)
    stem = f"surface_{args.loss}_gt{args.gt}"
    storage.write_csv(grid.tolist(), storage.SURFACE, out / f"{stem}.csv")
    figures.surface_figure(grid, f"{args.loss}, GT=[{args.gt[0]}, {args.gt[1]}]", out / f"{stem}.svg")
    print(f"wrote {out / stem}.csv ({len(grid)} rows) and {stem}.svg")
    return 0


# ---------------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    cfg = SynthConfig(
        width=args.width,
        height=args.height,
        n_images=args.n_images,
        blobs_per_image=(args.blobs_min, args.blobs_max),
        noise_sigma=args.noise_sigma,
        seed=args.seed,
    )
    try:
        cfg.validate()
    except FlossError as exc:
        raise UsageError(str(exc)) from None
    out = storage.ensure_dir(args.out)
    rows = []
    for s in generate(cfg):
        img, gt = f"img_{s.id}.pgm", f"gt_{s.id}.pgm"
        storage.write_pgm(s.image, out / img)
        storage.write_pgm(s.mask, out / gt)
        rows.append((s.id, img, gt))
    storage.write_csv(rows, storage.MANIFEST, out / "manifest.csv")
    storage.write_config(out / "config.txt", cfg.as_dict())
    print(f"wrote {len(rows)} image/mask pairs to {out}")
    return 0


# ---------------------------------------------------------------------- train

def load_dataset(data_dir):
    data_dir = Path(data_dir)
    manifest = data_dir / "manifest.csv"
    if not manifest.is_file():
        raise UsageError(f"{data_dir} is not a synthesized dataset (no manifest.csv)")
    samples = []
    for sample_id, img, gt in storage.read_csv(manifest, storage.MANIFEST):
        image, _ = storage.read_pgm(data_dir / img)
        mask = storage.read_gt_pgm(data_dir / gt)
        samples.append(sample_from_arrays(sample_id, image, mask))
    return samples


def cmd_train(args) -> int:
    samples = load_dataset(args.data)
    lr = args.lr if args.lr is not None else experiments.SHIPPED[args.loss].lr
    cfg = TrainConfig(
        loss=args.loss,
        beta2=args.beta2,
        lr=lr,
        epochs=args.epochs,
        seed=args.seed,
        init_scale=args.init_scale,
        eval_every=args.eval_every,
        ce_reduction=args.ce_reduction,
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    train_set, test_set = split(samples, args.train_fraction, args.split_seed)
    result = train(train_set, test_set, cfg)

    run = storage.RunDirectory.create(args.out)
    config = dict(cfg.as_dict())
    config.update(
        data=str(Path(args.data).resolve()),
        train_fraction=args.train_fraction,
        split_seed=args.split_seed,
        test_ids=",".join(s.id for s in test_set),
    )
    storage.write_config(run.config, config)
    storage.write_csv(
        [(r.iteration, r.train_loss, r.max_f, r.mean_f, r.mae) for r in result.log.records],
        storage.CONVERGENCE,
        run.log,
    )
    storage.write_csv(zip(FEATURE_NAMES, result.params.tolist()), storage.PARAMS, run.params)
    for s in test_set:
        storage.write_pgm(predict(result.params, s.features), run.preds / f"pred_{s.id}.pgm")
    s = result.summary
    print(f"{args.loss}: MaxF={s.max_f:.4f} MeanF={s.mean_f:.4f} MAE={s.mae:.4f} t_o={s.t_o:.4f} -> {run.root}")
    return 0


# ----------------------------------------------------------------------- eval

def _pairs(pred_dir, gt_dir, pred_prefix, gt_prefix, allow_extra_gt=False):
    preds = storage.list_pgm(pred_dir, pred_prefix)
    gts = storage.list_pgm(gt_dir, gt_prefix)
    missing = sorted(set(preds) - set(gts)) if allow_extra_gt else sorted(set(preds) ^ set(gts))
    if missing:
        raise UsageError("unmatched file stems: " + ", ".join(missing))
    if not preds:
        raise UsageError(f"no {pred_prefix}*.pgm files in {pred_dir}")
    ids = sorted(preds)
    pairs = []
    for i in ids:
        p, _ = storage.read_pgm(preds[i])
        y = storage.read_gt_pgm(gts[i])
        if p.shape != y.shape:
            raise FlossError(f"shape mismatch for {preds[i].name}: {p.shape} vs {gts[i].name}: {y.shape}")
        pairs.append((SaliencyMap(_frozen(p)), y))
    return ids, pairs


def _write_sweep(curve, path):
    storage.write_csv(curve.rows(), storage.SWEEP, path)


def cmd_eval(args) -> int:
    ids, pairs = _pairs(args.pred, args.gt, args.pred_prefix, args.gt_prefix, args.allow_extra_gt)
    out = storage.ensure_dir(args.out)
    summary_rows = []
    for mode in metrics.AGGREGATION_MODES:
        ev = metrics.dataset_eval(pairs, beta2=args.beta2, mode=mode, ids=ids)
        _write_sweep(ev.curve, out / f"sweep_{mode}.csv")
        s = ev.summary
        summary_rows.append((mode, s.max_f, s.mean_f, s.mae, s.t_o))
        print(f"[{mode}] MaxF={s.max_f:.4f} MeanF={s.mean_f:.4f} MAE={s.mae:.4f} t_o={s.t_o:.4f}")
    storage.write_csv(
        [(r.image_id, r.max_f, r.mean_f, r.mae, r.t_o) for r in ev.images], storage.PER_IMAGE, out / "per_image.csv"
    )
    storage.write_csv(summary_rows, SUMMARY, out / "summary.csv")
    return 0


SUMMARY = storage.schema(("mode", str), ("max_f", float), ("mean_f", float), ("mae", float), ("t_o", float))


# ---------------------------------------------------------------------- sweep

def cmd_sweep(args) -> int:
    p, _ = storage.read_pgm(args.pred)
    y = storage.read_gt_pgm(args.gt)
    if p.shape != y.shape:
        raise FlossError(f"shape mismatch: {args.pred} {p.shape} vs {args.gt} {y.shape}")
    curve = metrics.sweep(SaliencyMap(_frozen(p)), y, beta2=args.beta2)
    out = storage.ensure_dir(args.out)
    _write_sweep(curve, out / "sweep.csv")
    series = {
        "precision": (curve.thresholds, curve.precision),
        "recall": (curve.thresholds, curve.recall),
        "F": (curve.thresholds, curve.f),
    }
    storage.plot_svg(series, "threshold", "score", out / "sweep.svg", title=Path(args.pred).name)
    figures.prf_figure({Path(args.pred).stem: curve}, out / "sweep.png")
    t_o, max_f = metrics.optimal_threshold(curve)
    print(f"MaxF={max_f:.4f} MeanF={metrics.mean_f(curve):.4f} t_o={t_o:.4f} MAE={metrics.mae(p, y):.4f}")
    return 0


# --------------------------------------------------------------------- report

REPORT_SWEEP = storage.schema(
    ("run", str), ("threshold", float), ("precision", float), ("recall", float), ("f", float)
)
REPORT_TO = storage.schema(
    ("run", str), ("loss", str), ("t_o_mean", float), ("t_o_var", float), ("dataset_t_o", float),
    ("max_f", float), ("mean_f", float), ("mae", float), ("mean_max_ratio", float), ("polarization", float),
)
REPORT_BETA2 = storage.schema(
    ("run", str), ("loss", str), ("train_beta2", float), ("precision", float), ("recall", float), ("f", float)
)
REPORT_CONV = storage.schema(
    ("run", str), ("iteration", int), ("train_loss", float), ("max_f", float), ("mean_f", float), ("mae", float)
)


def load_run(run_dir, beta2=DEFAULT_BETA2, data_dir=None):
    """Recompute test metrics of a run directory from its stored predictions."""
    run = storage.RunDirectory(Path(run_dir))
    if not run.is_complete():
        raise UsageError(f"{run_dir} is not a completed run directory")
    cfg = storage.read_config(run.config)
    data = Path(data_dir or cfg["data"])
    ids = [i for i in cfg.get("test_ids", "").split(",") if i]
    preds, masks = [], []
    for i in ids:
        p, _ = storage.read_pgm(run.preds / f"pred_{i}.pgm")
        y = storage.read_gt_pgm(data / f"gt_{i}.pgm")
        if p.shape != y.shape:
            raise FlossError(f"shape mismatch for pred_{i}.pgm in {run_dir}")
        preds.append(SaliencyMap(_frozen(p)))
        masks.append(y)
    name = run.root.name
    analysis = experiments.analyse(name, preds, masks, ids, beta2)
    log = storage.read_csv(run.log, storage.CONVERGENCE)
    return cfg, analysis, log


def cmd_report(args) -> int:
    if len(args.runs) < 2:
        raise UsageError("report needs at least two run directories")
    out = storage.ensure_dir(args.out)
    runs = [(Path(r).name, *load_run(r, args.beta2, args.data)) for r in args.runs]
    mode = "average-pr"

    sweep_rows, to_rows, beta_rows, conv_rows = [], [], [], []
    f_series, conv_series, curves = {}, {}, {}
    for name, cfg, a, log in runs:
        c = a.evaluation.curve
        sweep_rows += [(name, *row) for row in c.rows()]
        f_series[name] = (c.thresholds, c.f)
        curves[name] = c
        mean, var = a.t_o_stats()
        s = a.summary
        to_rows.append((name, cfg["loss"], mean, var, s.t_o, s.max_f, s.mean_f, s.mae, a.mean_max_ratio, a.polarization()))
        p, r, f = a.prf_at(0.5, args.beta2)
        beta_rows.append((name, cfg["loss"], float(cfg["beta2"]), p, r, f))
        conv_rows += [(name, *row) for row in log]
        conv_series[name] = ([row[0] for row in log], [row[2] for row in log])

    storage.write_csv(sweep_rows, REPORT_SWEEP, out / f"f_vs_threshold_{mode}.csv")
    storage.plot_svg(f_series, "threshold", f"F ({mode})", out / "f_vs_threshold.svg", title="F-measure vs threshold")
    figures.lines_figure(f_series, "threshold", f"F-measure ({mode})", out / "f_vs_threshold.png")

    storage.write_csv(to_rows, REPORT_TO, out / "threshold_stats.csv")
    figures.errorbar_figure(
        [r[0] for r in to_rows], [r[2] for r in to_rows], [np.sqrt(r[3]) for r in to_rows],
        out / "threshold_stats.png", ylabel="per-image optimal threshold", title="mean and std of t_o",
    )

    for name, c in curves.items():
        series = {"precision": (c.thresholds, c.precision), "recall": (c.thresholds, c.recall), "F": (c.thresholds, c.f)}
        storage.plot_svg(series, "threshold", "score", out / f"prf_{name}.svg", title=name)
    figures.prf_figure(curves, out / "prf_vs_threshold.png")

    beta_rows.sort(key=lambda r: (r[1], r[2], r[0]))
    storage.write_csv(beta_rows, REPORT_BETA2, out / "beta2_sweep.csv")
    figures.bars_figure(
        [f"{r[0]} (b2={r[2]:g})" for r in beta_rows],
        {"precision": [r[3] for r in beta_rows], "recall": [r[4] for r in beta_rows], "F": [r[5] for r in beta_rows]},
        out / "beta2_sweep.png", title="precision / recall / F at t=0.5",
    )

    storage.write_csv(conv_rows, REPORT_CONV, out / "convergence.csv")
    storage.plot_svg(conv_series, "iteration", "test MaxF", out / "convergence.svg", title="convergence")
    figures.lines_figure(conv_series, "iteration", "test MaxF", out / "convergence.png")

    print(f"{'run':<24} {'loss':<12} {'MaxF':>7} {'MeanF':>7} {'MAE':>7} {'t_o mean':>9} {'t_o var':>9}")
    for r in to_rows:
        print(f"{r[0]:<24} {r[1]:<12} {r[5]:>7.4f} {r[6]:>7.4f} {r[7]:>7.4f} {r[2]:>9.4f} {r[3]:>9.4f}")
    print(f"(dataset curves aggregate with mode={mode}); reports in {out}")
    return 0


# --------------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="floss", description="Relaxed F-measure losses, evaluation and toy experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("losscheck", help="finite-difference gradient check", formatter_class=fmt)
    p.add_argument("--loss", choices=(*LOSS_NAMES, "all"), required=True)
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="F-measure balance factor")
    p.add_argument("--size", type=_positive(int), default=8, help="map side length")
    p.add_argument("--trials", type=_positive(int), default=100, help="random map pairs")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--h", type=_positive(float), default=1e-5, help="central-difference step")
    p.set_defaults(func=cmd_losscheck)

    p = sub.add_parser("surface", help="loss surface of the 2-pixel problem", formatter_class=fmt)
    p.add_argument("--loss", choices=LOSS_NAMES, required=True)
    p.add_argument("--gt", default="01", help="ground truth code: 01 or 11")
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="F-measure balance factor")
    p.add_argument("--res", type=int, default=101, help="grid points per axis (>= 2)")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("synth", help="generate the synthetic saliency dataset", formatter_class=fmt)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-images", type=_positive(int), default=300)
    p.add_argument("--width", type=_positive(int), default=32)
    p.add_argument("--height", type=_positive(int), default=32)
    p.add_argument("--blobs-min", type=_positive(int), default=1)
    p.add_argument("--blobs-max", type=_positive(int), default=2)
    p.add_argument("--noise-sigma", type=float, default=0.1, help="Gaussian pixel noise (benchmark uses 0.3)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the pixelwise logistic model", formatter_class=fmt)
    p.add_argument("--data", required=True, help="dataset directory written by synth")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--loss", choices=LOSS_NAMES, default="floss")
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="F-measure balance factor")
    p.add_argument("--lr", type=_positive(float), default=None,
                   help=f"learning rate (default: {experiments.FLOSS_LR:g} for floss/logfloss, {experiments.CE_LR:g} for ce/balanced-ce)")
    p.add_argument("--epochs", type=_positive(int), default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init-scale", type=float, default=0.01)
    p.add_argument("--eval-every", type=_positive(int), default=50, help="checkpoint interval in iterations")
    p.add_argument("--ce-reduction", choices=("mean", "sum"), default="mean")
    p.add_argument("--train-fraction", type=float, default=experiments.TRAIN_FRACTION)
    p.add_argument("--split-seed", type=int, default=experiments.SPLIT_SEED)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a directory of predictions", formatter_class=fmt)
    p.add_argument("--pred", required=True, help="prediction directory")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    p.add_argument("--pred-prefix", default="pred_", help="prediction filename prefix, stripped before matching")
    p.add_argument("--gt-prefix", default="gt_", help="ground-truth filename prefix, stripped before matching")
    p.add_argument("--allow-extra-gt", action="store_true", help="ignore ground truths that have no prediction")
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="F-measure balance factor")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="threshold sweep of one prediction", formatter_class=fmt)
    p.add_argument("--pred", required=True, help="prediction PGM")
    p.add_argument("--gt", required=True, help="ground-truth PGM")
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="F-measure balance factor")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="comparative report over run directories", formatter_class=fmt)
    p.add_argument("--runs", nargs="+", required=True, help="two or more run directories")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--beta2", type=_positive(float), default=DEFAULT_BETA2, help="evaluation beta2")
    p.add_argument("--data", default=None, help="override the dataset directory recorded in each run")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"floss {args.command}: {exc}", file=sys.stderr)
        return 1
    except (FlossError, OSError) as exc:
        print(f"floss {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
