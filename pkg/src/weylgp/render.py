"""Minimal SVG quiver plots for planar vector fields."""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = ["quiver_svg", "contour_segments"]


def contour_segments(axes: Sequence[np.ndarray], inside: np.ndarray) -> list[tuple[tuple[float, float], tuple[float, float]]]:
    """Marching-squares outline of a boolean mask given on a grid (first axis = x)."""
    xs, ys = axes
    mask = inside.reshape(len(xs), len(ys))
    segs = []
    for i in range(len(xs) - 1):
        for j in range(len(ys) - 1):
            corners = [mask[i, j], mask[i + 1, j], mask[i + 1, j + 1], mask[i, j + 1]]
            if all(corners) or not any(corners):
                continue
            pts = [(xs[i], ys[j]), (xs[i + 1], ys[j]), (xs[i + 1], ys[j + 1]), (xs[i], ys[j + 1])]
            mids = []
            for k in range(4):
                a, b = corners[k], corners[(k + 1) % 4]
                if a != b:
                    p, q = pts[k], pts[(k + 1) % 4]
                    mids.append(((p[0] + q[0]) / 2, (p[1] + q[1]) / 2))
            for k in range(0, len(mids) - 1, 2):
                segs.append((mids[k], mids[k + 1]))
    return segs


def quiver_svg(axes: Sequence[np.ndarray], mean: np.ndarray, inside: np.ndarray | None = None,
               data_points: np.ndarray | None = None, scale: float = 1.0, width: int = 640,
               stride: int = 1) -> str:
    """SVG with one arrow per grid point, the region outline and red data markers."""
    xs, ys = axes
    x0, x1, y0, y1 = xs[0], xs[-1], ys[0], ys[-1]
    height = max(1, int(round(width * (y1 - y0) / (x1 - x0))))
    margin = 20

    def tx(x):
        return margin + (x - x0) / (x1 - x0) * width

    def ty(y):
        return margin + (y1 - y) / (y1 - y0) * height

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width + 2 * margin}" '
             f'height="{height + 2 * margin}" viewBox="0 0 {width + 2 * margin} {height + 2 * margin}">',
             '<rect width="100%" height="100%" fill="white"/>']
    if inside is not None and not np.all(inside):
        path = " ".join(f"M{tx(a[0]):.2f},{ty(a[1]):.2f}L{tx(b[0]):.2f},{ty(b[1]):.2f}"
                        for a, b in contour_segments(axes, inside))
        parts.append(f'<path d="{path}" stroke="gray" stroke-width="1" fill="none"/>')
    m = mean.reshape(len(xs), len(ys), -1)
    finite = np.isfinite(m[..., 0]) & np.isfinite(m[..., 1])
    norms = np.hypot(m[..., 0], m[..., 1])
    top = float(np.max(norms[finite])) if np.any(finite) else 0.0
    cell = min((x1 - x0) / max(len(xs) - 1, 1), (y1 - y0) / max(len(ys) - 1, 1)) * stride
    unit = scale * cell / top if top > 0 else 0.0
    for i in range(0, len(xs), stride):
        for j in range(0, len(ys), stride):
            if not finite[i, j] or norms[i, j] == 0:
                continue
            u, v = m[i, j, 0] * unit, m[i, j, 1] * unit
            ax, ay = tx(xs[i]), ty(ys[j])
            bx, by = tx(xs[i] + u), ty(ys[j] + v)
            ang = math.atan2(by - ay, bx - ax)
            h = min(4.0, 0.35 * math.hypot(bx - ax, by - ay))
            hx1, hy1 = bx - h * math.cos(ang - 0.45), by - h * math.sin(ang - 0.45)
            hx2, hy2 = bx - h * math.cos(ang + 0.45), by - h * math.sin(ang + 0.45)
            parts.append(f'<path d="M{ax:.2f},{ay:.2f}L{bx:.2f},{by:.2f}M{hx1:.2f},{hy1:.2f}L{bx:.2f},{by:.2f}'
                         f'L{hx2:.2f},{hy2:.2f}" stroke="black" stroke-width="0.8" fill="none"/>')
    if data_points is not None:
        # one marker per location; several components may share a point
        for p in np.unique(np.atleast_2d(data_points), axis=0):
            parts.append(f'<circle cx="{tx(p[0]):.2f}" cy="{ty(p[1]):.2f}" r="5" fill="red"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
