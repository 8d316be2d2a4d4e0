"""File formats: binary PGM, schema-checked CSV, minimal SVG line plots and
the run-directory layout."""
from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import FormatError, UnsupportedFormatError


# --------------------------------------------------------------------- PGM

_WS = b" \t\r\n"


def _header_tokens(data: bytes, count: int):
    """Read ``count`` whitespace-separated header tokens, skipping comments.

    Returns the tokens and the offset of the byte following the single
    whitespace character that terminates the last token.
    """
    tokens = []
    pos = 0
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos] in _WS:
            pos += 1
        if pos < n and data[pos] == ord("#"):
            while pos < n and data[pos] not in b"\r\n":
                pos += 1
            continue
        if pos >= n:
            raise FormatError(f"truncated PGM header at byte {pos}")
        start = pos
        while pos < n and data[pos] not in _WS and data[pos] != ord("#"):
            pos += 1
        tokens.append((data[start:pos], start))
    if pos >= n or data[pos] not in _WS:
        raise FormatError(f"missing whitespace after PGM header at byte {pos}")
    return tokens, pos + 1


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary (P5) 8-bit PGM; returns values scaled to [0, 1] and maxval."""
    data = Path(path).read_bytes()
    if len(data) < 2:
        raise FormatError(f"{path}: file too short for a PGM header (byte 0)")
    magic = data[:2]
    if magic in (b"P1", b"P2", b"P3", b"P4", b"P6"):
        raise UnsupportedFormatError(f"{path}: only binary greyscale PGM (P5) is supported, got {magic.decode()}")
    if magic != b"P5":
        raise FormatError(f"{path}: bad magic number at byte 0")
    try:
        tokens, offset = _header_tokens(data[2:], 3)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None
    values = []
    for tok, start in tokens:
        if not tok.isdigit():
            raise FormatError(f"{path}: malformed header field {tok!r} at byte {start + 2}")
        values.append(int(tok))
    width, height, maxval = values
    offset += 2
    if maxval != 255:
        raise UnsupportedFormatError(f"{path}: maxval {maxval} not supported (need 255)")
    if width < 1 or height < 1:
        raise FormatError(f"{path}: non-positive image size {width}x{height}")
    payload = data[offset:]
    need = width * height
    if len(payload) < need:
        raise FormatError(f"{path}: truncated payload, expected {need} bytes at byte {offset}, got {len(payload)}")
    pixels = np.frombuffer(payload, dtype=np.uint8, count=need).reshape(height, width)
    return pixels.astype(np.float64) / maxval, maxval


def quantize(values) -> np.ndarray:
    """Map [0, 1] to bytes: nearest integer of ``v * 255``, ties away from zero."""
    v = np.asarray(values, dtype=np.float64) * 255.0
    return np.clip(np.floor(v + 0.5), 0, 255).astype(np.uint8)


def write_pgm(values, path) -> None:
    arr = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"PGM needs a 2-D map, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(quantize(arr).tobytes())


def read_gt_pgm(path) -> np.ndarray:
    """Ground-truth ingest: 8-bit values >= 128 become 1."""
    values, maxval = read_pgm(path)
    return (np.rint(values * maxval) >= 128).astype(np.float64)


# --------------------------------------------------------------------- CSV

@dataclass(frozen=True)
class Schema:
    """Ordered column names with their Python types (float, int or str)."""

    columns: tuple[tuple[str, type], ...]

    @property
    def names(self) -> list[str]:
        return [c for c, _ in self.columns]


def schema(*columns: tuple[str, type]) -> Schema:
    return Schema(tuple(columns))


SURFACE = schema(("y0", float), ("y1", float), ("loss", float))
SWEEP = schema(("threshold", float), ("precision", float), ("recall", float), ("f", float))
PER_IMAGE = schema(("image_id", str), ("max_f", float), ("mean_f", float), ("mae", float), ("t_o", float))
CONVERGENCE = schema(("iteration", int), ("train_loss", float), ("max_f", float), ("mean_f", float), ("mae", float))
PARAMS = schema(("feature", str), ("weight", float))
MANIFEST = schema(("id", str), ("image", str), ("mask", str))


def _fmt(value, typ):
    if typ is float:
        return format(float(value), ".17g")
    if typ is int:
        return str(int(value))
    return str(value)


def write_csv(rows: Iterable[Sequence], schema: Schema, path) -> None:
    """Write rows with a mandatory header; reals get 17 significant digits."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(schema.names)
        for k, row in enumerate(rows, start=1):
            row = list(row)
            if len(row) != len(schema.columns):
                raise FormatError(f"{path}: row {k} has {len(row)} fields, schema has {len(schema.columns)}")
            writer.writerow([_fmt(v, t) for v, (_, t) in zip(row, schema.columns)])


def read_csv(path, schema: Schema) -> list[tuple]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: missing header row") from None
        if header != schema.names:
            raise FormatError(f"{path}: header {header} does not match {schema.names} (row 1)")
        rows = []
        for k, row in enumerate(reader, start=2):
            if len(row) != len(schema.columns):
                raise FormatError(f"{path}: row {k} has {len(row)} fields, expected {len(schema.columns)}")
            try:
                rows.append(tuple(t(v) for v, (_, t) in zip(row, schema.columns)))
            except ValueError as exc:
                raise FormatError(f"{path}: row {k}: {exc}") from None
    return rows


# --------------------------------------------------------------------- SVG

SVG_WIDTH, SVG_HEIGHT = 640, 420
_MARGIN = dict(left=70, right=160, top=30, bottom=55)
_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def axis_bounds(values, pad: float = 0.05) -> tuple[float, float]:
    """``[min, max]`` of the data widened by ``pad`` of the span on each side."""
    v = np.asarray(values, dtype=np.float64)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return 0.0, 1.0
    lo, hi = float(v.min()), float(v.max())
    span = hi - lo
    if span == 0:
        span = abs(lo) if lo != 0 else 1.0
    return lo - pad * span, hi + pad * span


def _num(x: float) -> str:
    return f"{x:.2f}"


def plot_svg(series: dict, xlabel: str, ylabel: str, path, title: str = "") -> None:
    """Standalone SVG line chart: one ``<polyline>`` per named series.

    ``series`` maps a legend label to ``(x, y)`` sequences. Output depends
    only on the inputs.
    """
    if not series:
        raise ValueError("need at least one series")
    for name, (x, y) in series.items():
        if len(x) == 0 or len(x) != len(y):
            raise ValueError(f"series {name!r} must be non-empty with matching x/y lengths")
    xlo, xhi = axis_bounds(np.concatenate([np.asarray(x, float) for x, _ in series.values()]))
    ylo, yhi = axis_bounds(np.concatenate([np.asarray(y, float) for _, y in series.values()]))
    m = _MARGIN
    pw = SVG_WIDTH - m["left"] - m["right"]
    ph = SVG_HEIGHT - m["top"] - m["bottom"]

    def sx(x):
        return m["left"] + (x - xlo) / (xhi - xlo) * pw

    def sy(y):
        return m["top"] + (1.0 - (y - ylo) / (yhi - ylo)) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" '
        f'viewBox="0 0 {SVG_WIDTH} {SVG_HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{SVG_WIDTH}" height="{SVG_HEIGHT}" fill="white"/>',
        f'<rect x="{m["left"]}" y="{m["top"]}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{m["left"] + pw / 2:.2f}" y="18" text-anchor="middle">{escape(title)}</text>')
    for k in range(6):
        fx = xlo + (xhi - xlo) * k / 5
        fy = ylo + (yhi - ylo) * k / 5
        out.append(f'<text x="{_num(sx(fx))}" y="{m["top"] + ph + 16}" text-anchor="middle">{fx:.3g}</text>')
        out.append(f'<text x="{m["left"] - 6}" y="{_num(sy(fy) + 4)}" text-anchor="end">{fy:.3g}</text>')
    out.append(f'<text x="{m["left"] + pw / 2:.2f}" y="{SVG_HEIGHT - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(
        f'<text x="16" y="{m["top"] + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {m["top"] + ph / 2:.2f})">{escape(ylabel)}</text>'
    )
    for k, (name, (x, y)) in enumerate(series.items()):
        colour = _COLOURS[k % len(_COLOURS)]
        pts = " ".join(
            f"{_num(sx(a))},{_num(sy(b))}" for a, b in zip(x, y) if math.isfinite(a) and math.isfinite(b)
        )
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{pts}"/>')
        ly = m["top"] + 14 + 18 * k
        lx = m["left"] + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{colour}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{escape(str(name))}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


# --------------------------------------------------------------- run layout

_LOWER_ASCII = re.compile(r"^[a-z0-9_.\-]+$")


@dataclass(frozen=True)
class RunDirectory:
    root: Path

    @property
    def config(self) -> Path:
        return self.root / "config.txt"

    @property
    def log(self) -> Path:
        return self.root / "log.csv"

    @property
    def params(self) -> Path:
        return self.root / "params.csv"

    @property
    def preds(self) -> Path:
        return self.root / "preds"

    @property
    def reports(self) -> Path:
        return self.root / "reports"

    @classmethod
    def create(cls, root) -> "RunDirectory":
        run = cls(Path(root))
        run.preds.mkdir(parents=True, exist_ok=True)
        run.reports.mkdir(parents=True, exist_ok=True)
        return run

    def is_complete(self) -> bool:
        return self.config.is_file() and self.log.is_file() and self.params.is_file() and self.preds.is_dir()


def check_filename(name: str) -> str:
    if not _LOWER_ASCII.match(name):
        raise ValueError(f"file names must be lowercase ASCII, got {name!r}")
    return name


def write_config(path, items: dict, timestamp: bool = True) -> None:
    """``key=value`` lines; the only file allowed to carry a timestamp."""
    lines = [f"{k}={v}" for k, v in items.items()]
    if timestamp:
        lines.append("created=" + datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def read_config(path) -> dict:
    out = {}
    for k, line in enumerate(Path(path).read_text(encoding="ascii").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}: line {k} is not key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def list_pgm(directory, prefix: str = "") -> dict[str, Path]:
    """Map stem-without-prefix to path for ``<prefix>*.pgm`` files."""
    out = {}
    for p in sorted(Path(directory).glob(f"{prefix}*.pgm")):
        out[p.stem[len(prefix):]] = p
    return out


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
