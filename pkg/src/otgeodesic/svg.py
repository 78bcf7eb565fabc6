"""Minimal SVG scatter plots of 2-D datasets, colored by argmax label."""
from __future__ import annotations

from html import escape

import numpy as np

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf", "#393b79", "#637939", "#8c6d31", "#843c39", "#7b4173", "#3182bd",
)


def scatter_svg(ds, title=None, size=480, margin=24, radius=2.5):
    X = ds.features
    if X.shape[1] == 1:
        X = np.column_stack([X[:, 0], np.zeros(len(X))])
    X = X[:, :2]
    lo = X.min(axis=0)
    span = np.where(X.max(axis=0) - lo > 0, X.max(axis=0) - lo, 1.0)
    inner = size - 2 * margin
    px = margin + (X - lo) / span * inner
    px[:, 1] = size - px[:, 1]
    cls = ds.labels.argmax(axis=1)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{margin}" y="{margin - 8}" font-size="12" font-family="sans-serif">{escape(title)}</text>')
    for (x, y), c in zip(px, cls):
        parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="{PALETTE[c % len(PALETTE)]}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(ds, path, title=None):
    with open(path, "w") as fh:
        fh.write(scatter_svg(ds, title or ds.id))
