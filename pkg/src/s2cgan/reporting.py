"""Metrics CSV emission and a dependency-free SVG scatter plot.

CSV values are written with repr, which round-trips doubles exactly and
therefore reproduces at least 12 significant digits on re-parse. Files
always use LF line endings and '.' as the decimal separator, so emitted
artifacts are byte-comparable across platforms.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

CSV_HEADER = (
    "step,v_sup,v_labeller,v_unsup,v_full,label_agreement,"
    "mean_iou,mmd2,marginal_tv,pseudo_label_acc"
)

# color-blind-safe cycle; reused modulo for many classes
PALETTE = (
    "#0072b2",
    "#d55e00",
    "#009e73",
    "#cc79a7",
    "#e69f00",
    "#56b4e9",
    "#f0e442",
    "#000000",
)


def _fmt(v: float) -> str:
    return repr(float(v))


def emit_metrics_csv(history, path) -> None:
    """One row per record; inapplicable cells stay empty."""
    lines = [CSV_HEADER]
    for rec in history:
        cells = [
            str(rec.step),
            _fmt(rec.breakdown.v_sup),
            _fmt(rec.breakdown.v_labeller),
            _fmt(rec.breakdown.v_unsup) if rec.unsup_active else "",
            _fmt(rec.breakdown.v_full),
            _fmt(rec.label_agreement),
            _fmt(rec.mean_iou) if rec.mean_iou is not None else "",
            _fmt(rec.mmd2),
            _fmt(rec.marginal_tv),
            _fmt(rec.pseudo_label_acc) if rec.pseudo_label_acc is not None else "",
        ]
        lines.append(",".join(cells))
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write metrics CSV to {path}: {e}") from e


def parse_metrics_csv(path) -> list[dict]:
    """Rows as dicts; empty cells become None, numbers become floats."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    rows = []
    for raw in reader:
        row = {}
        for key, cell in raw.items():
            if cell == "" or cell is None:
                row[key] = None
            elif key == "step":
                row[key] = int(cell)
            else:
                row[key] = float(cell)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# SVG scatter

_VIEW = 800
_PLOT = (70.0, 20.0, 770.0, 720.0)  # left, top, right, bottom of the plot area


def _bounds(points: np.ndarray) -> tuple[float, float, float, float]:
    if points.shape[0] == 0:
        return -1.0, 1.0, -1.0, 1.0
    x_min, y_min = points.min(axis=0)
    x_max, y_max = points.max(axis=0)
    pad_x = 0.1 * (x_max - x_min) or 0.1
    pad_y = 0.1 * (y_max - y_min) or 0.1
    return x_min - pad_x, x_max + pad_x, y_min - pad_y, y_max + pad_y


def emit_scatter_svg(real_samples, fake_samples, labels, path) -> None:
    """2-D scatter: real points as circles, generated points as crosses.

    ``labels`` is a pair (real_labels, fake_labels) of integer arrays (or
    None entries for single-color sets) selecting the per-class color.
    Byte output is deterministic for identical inputs.
    """
    real = np.asarray(real_samples, dtype=np.float64).reshape(-1, 2) if np.size(
        real_samples
    ) else np.zeros((0, 2))
    fake = np.asarray(fake_samples, dtype=np.float64).reshape(-1, 2) if np.size(
        fake_samples
    ) else np.zeros((0, 2))
    real_labels, fake_labels = labels if labels is not None else (None, None)
    real_labels = (
        np.zeros(real.shape[0], dtype=int)
        if real_labels is None
        else np.asarray(real_labels, dtype=int).reshape(-1)
    )
    fake_labels = (
        np.zeros(fake.shape[0], dtype=int)
        if fake_labels is None
        else np.asarray(fake_labels, dtype=int).reshape(-1)
    )
    if real_labels.shape[0] != real.shape[0] or fake_labels.shape[0] != fake.shape[0]:
        raise ValueError("label counts must match sample counts")

    both = np.vstack([real, fake]) if real.size + fake.size else np.zeros((0, 2))
    x0, x1, y0, y1 = _bounds(both)
    left, top, right, bottom = _PLOT

    def px(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * (right - left)

    def py(y: float) -> float:
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_VIEW}" height="{_VIEW}" '
        f'viewBox="0 0 {_VIEW} {_VIEW}">',
        f'<rect x="0" y="0" width="{_VIEW}" height="{_VIEW}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        f'fill="none" stroke="#444444" stroke-width="1"/>',
    ]
    for value, anchor in ((x0, "start"), (x1, "end")):
        out.append(
            f'<text x="{px(value):.2f}" y="{bottom + 24:.2f}" font-size="14" '
            f'text-anchor="{anchor}" fill="#444444">{value:.3f}</text>'
        )
    for value in (y0, y1):
        out.append(
            f'<text x="{left - 8:.2f}" y="{py(value) + 5:.2f}" font-size="14" '
            f'text-anchor="end" fill="#444444">{value:.3f}</text>'
        )

    for (x, y), lab in zip(real, real_labels):
        color = PALETTE[lab % len(PALETTE)]
        out.append(
            f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3.5" fill="{color}" '
            f'fill-opacity="0.55"/>'
        )
    for (x, y), lab in zip(fake, fake_labels):
        color = PALETTE[lab % len(PALETTE)]
        cx, cy = px(x), py(y)
        out.append(
            f'<path class="cross" d="M {cx - 3.5:.2f} {cy - 3.5:.2f} L {cx + 3.5:.2f} '
            f'{cy + 3.5:.2f} M {cx - 3.5:.2f} {cy + 3.5:.2f} L {cx + 3.5:.2f} '
            f'{cy - 3.5:.2f}" stroke="{color}" stroke-width="1.6" fill="none"/>'
        )

    classes = sorted({*real_labels.tolist(), *fake_labels.tolist()})
    ly = top + 16
    out.append(
        f'<text x="{right - 150:.2f}" y="{ly:.2f}" font-size="14" fill="#222222">'
        f"circle = real, cross = generated</text>"
    )
    for lab in classes:
        ly += 20
        color = PALETTE[lab % len(PALETTE)]
        out.append(
            f'<rect x="{right - 150:.2f}" y="{ly - 11:.2f}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        out.append(
            f'<text x="{right - 132:.2f}" y="{ly:.2f}" font-size="14" '
            f'fill="#222222">class {lab}</text>'
        )
    out.append("</svg>")
    try:
        Path(path).write_text("\n".join(out) + "\n", encoding="utf-8", newline="\n")
    except OSError as e:
        raise OSError(f"cannot write SVG to {path}: {e}") from e
