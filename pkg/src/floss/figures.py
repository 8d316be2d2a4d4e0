"""Matplotlib renderings of surfaces and report panels.

Everything here draws onto a fresh figure with the Agg backend and saves it
to a file; nothing is shown interactively. SVG output is made reproducible
by fixing the hash salt and dropping the date metadata.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "svg.hashsalt": "floss",
    "svg.fonttype": "none",
    "axes.grid": True,
    "grid.alpha": 0.3,
}


def _save(fig, path):
    path = str(path)
    meta = {"Date": None} if path.endswith(".svg") else {}
    if path.endswith(".png"):
        meta = {"Software": None}
    fig.savefig(path, metadata=meta, bbox_inches="tight", dpi=120)
    plt.close(fig)


def surface_figure(grid: np.ndarray, title: str, path) -> None:
    """Filled contour of a ``(y0, y1, loss)`` grid such as loss_surface_grid returns."""
    n = int(round(np.sqrt(len(grid))))
    y0 = grid[:, 0].reshape(n, n)
    y1 = grid[:, 1].reshape(n, n)
    z = grid[:, 2].reshape(n, n)
    finite = np.isfinite(z)
    zmax = np.max(z[finite]) if finite.any() else 1.0
    z = np.where(finite, z, zmax)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5, 4.2))
        cs = ax.contourf(y0, y1, z, levels=20, cmap="viridis")
        ax.contour(y0, y1, z, levels=10, colors="k", linewidths=0.4)
        fig.colorbar(cs, ax=ax, label="loss")
        ax.set_xlabel(r"$\hat y_0$")
        ax.set_ylabel(r"$\hat y_1$")
        ax.set_title(title)
        ax.set_aspect("equal")
        _save(fig, path)


def lines_figure(series: dict, xlabel: str, ylabel: str, path, title: str = "", styles: dict | None = None) -> None:
    """Overlay of named ``(x, y)`` series."""
    styles = styles or {}
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for name, (x, y) in series.items():
            ax.plot(x, y, label=name, **styles.get(name, {}))
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)


def prf_figure(curves: dict, path, title: str = "") -> None:
    """Precision, recall and F against threshold, one line style per run.

    ``curves`` maps run name to a SweepCurve; the MaxF point is marked.
    """
    colours = {"precision": "tab:red", "recall": "tab:green", "f": "tab:blue"}
    dashes = ["-", "--", ":", "-."]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, (name, c) in enumerate(curves.items()):
            ls = dashes[k % len(dashes)]
            for field in ("precision", "recall", "f"):
                ax.plot(c.thresholds, getattr(c, field), ls=ls, color=colours[field], label=f"{name} {field}")
            j = int(np.argmax(c.f))
            ax.plot([c.thresholds[j]], [c.f[j]], "o", color=colours["f"])
        ax.set_xlabel("threshold")
        ax.set_ylabel("score")
        if title:
            ax.set_title(title)
        ax.legend(loc="lower center", ncol=len(curves))
        _save(fig, path)


def bars_figure(labels, groups: dict, path, ylabel: str = "", title: str = "") -> None:
    """Grouped bar chart: ``groups`` maps series name to one value per label."""
    x = np.arange(len(labels))
    width = 0.8 / max(len(groups), 1)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        for k, (name, vals) in enumerate(groups.items()):
            ax.bar(x + (k - (len(groups) - 1) / 2) * width, vals, width, label=name)
        ax.set_xticks(x, [str(v) for v in labels])
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        ax.legend(loc="best")
        _save(fig, path)


def errorbar_figure(names, means, stds, path, ylabel: str = "", title: str = "") -> None:
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(names))
        ax.errorbar(x, means, yerr=stds, fmt="o", capsize=4)
        ax.set_xticks(x, list(names))
        ax.set_ylabel(ylabel)
        ax.set_ylim(0, 1)
        if title:
            ax.set_title(title)
        _save(fig, path)
