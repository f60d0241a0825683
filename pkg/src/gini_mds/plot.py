"""Dependency-free SVG scatter plots of 1-D or 2-D embeddings."""

from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def scatter_svg(coords, labels=None, title="", size=480, margin=24, radius=3.0) -> str:
    """One ``<circle class="point">`` per row; colour follows the integer label."""
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] not in (1, 2):
        raise ValueError("scatter_svg expects 1 or 2 columns")
    if coords.shape[1] == 1:
        coords = np.column_stack([coords[:, 0], np.zeros(len(coords))])
    lo, hi = coords.min(axis=0), coords.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    inner = size - 2 * margin
    px = margin + (coords[:, 0] - lo[0]) / span[0] * inner
    py = size - margin - (coords[:, 1] - lo[1]) / span[1] * inner
    if np.all(hi[1] == lo[1]):
        py[:] = size / 2

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
    ]
    if title:
        out.append(f'<title>{escape(title)}</title>')
    for i, (x, y) in enumerate(zip(px, py)):
        colour = PALETTE[int(labels[i]) % len(PALETTE)] if labels is not None else PALETTE[0]
        out.append(f'<circle class="point" cx="{x:.3f}" cy="{y:.3f}" r="{radius}" fill="{colour}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
