"""Self-contained SVG rendering of a planar walk, its center of mass, and hull.

No plotting dependency: the drawing is a fit-to-viewbox affine transform of
the raw coordinates.  The walk path is blue, the center-of-mass path black,
the convex hull red; the run configuration is embedded verbatim in a
<metadata> element so every figure carries its provenance.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .geometry import Hull2D, convex_hull_2d

# rendering-only decimation threshold; statistics never see decimated data
MAX_RENDER_POINTS = 100_000


def _decimate(pts: np.ndarray) -> np.ndarray:
    if len(pts) <= MAX_RENDER_POINTS:
        return pts
    idx = np.linspace(0, len(pts) - 1, MAX_RENDER_POINTS).astype(np.int64)
    return pts[np.unique(idx)]


def _polyline(pts: np.ndarray, sx, sy, tx, ty) -> str:
    x = pts[:, 0] * sx + tx
    y = pts[:, 1] * sy + ty
    return " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(x, y))


def render_figure(record, hull: Optional[Hull2D] = None,
                  width: int = 800, height: int = 800,
                  config: Optional[dict] = None) -> str:
    """SVG for a d=2 trajectory record: walk, center of mass, hull.

    Paths longer than 100000 points are decimated uniformly for rendering
    only.  The hull defaults to the hull of the recorded walk points; pass
    the hull of the full-resolution path when the record is strided.
    """
    if record.params.d != 2:
        raise ValueError("figure rendering needs d = 2")
    walk = np.vstack([np.zeros((1, 2), dtype=np.int64), record.S])
    cm = record.G
    if hull is None:
        hull = convex_hull_2d(record.S)
    hv = hull.vertices

    all_x = np.concatenate([walk[:, 0], cm[:, 0], hv[:, 0]])
    all_y = np.concatenate([walk[:, 1], cm[:, 1], hv[:, 1]])
    x0, x1 = float(all_x.min()), float(all_x.max())
    y0, y1 = float(all_y.min()), float(all_y.max())
    span_x = max(x1 - x0, 1e-9)
    span_y = max(y1 - y0, 1e-9)
    margin = 0.05
    s = min(width * (1 - 2 * margin) / span_x, height * (1 - 2 * margin) / span_y)
    # center the data, flip y so the lattice y-axis points up
    tx = width / 2 - s * (x0 + x1) / 2
    ty = height / 2 + s * (y0 + y1) / 2
    sx, sy = s, -s

    cfg = dict(config) if config is not None else {
        "d": record.params.d, "p": record.params.p, "steps": record.n_steps,
        "seed": record.seed, "record_every": record.record_every}
    caption = (f"planar elephant walk, p={record.params.p}, "
               f"n={record.n_steps}, seed={record.seed}: walk in blue, "
               "center of mass in black, convex hull in red")

    walk_pts = _polyline(_decimate(walk), sx, sy, tx, ty)
    cm_pts = _polyline(_decimate(cm), sx, sy, tx, ty)
    hull_pts = _polyline(hv, sx, sy, tx, ty)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f"<metadata>{json.dumps(cfg, sort_keys=True)}</metadata>",
        f"<desc>{caption}</desc>",
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<polyline points="{walk_pts}" fill="none" stroke="blue" '
        'stroke-width="0.6"/>',
        f'<polyline points="{cm_pts}" fill="none" stroke="black" '
        'stroke-width="1.2"/>',
        f'<polygon points="{hull_pts}" fill="none" stroke="red" '
        'stroke-width="1.5"/>',
        "</svg>",
    ]
    return "\n".join(parts)
