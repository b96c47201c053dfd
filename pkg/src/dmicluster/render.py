"""Static SVG rendering of planar clusterings.

Fixed 800x800 viewport: points colored by cluster, a star at each cluster
mean, the global mean, and dashed partition rays drawn by extending the
segment from each cluster mean through the global mean (the boundary
between the other clusters lies along that extension).
"""
from __future__ import annotations

import numpy as np

VIEW = 800
MARGIN = 70
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)


def _scaler(points: np.ndarray):
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.where(hi - lo < 1e-12, 1.0, hi - lo)
    inner = VIEW - 2 * MARGIN

    def to_px(xy: np.ndarray) -> tuple[float, float]:
        u = (xy - lo) / span
        return (MARGIN + u[0] * inner, VIEW - MARGIN - u[1] * inner)

    return to_px


def _star_path(cx: float, cy: float, r: float = 9.0) -> str:
    pts = []
    for i in range(10):
        rad = r if i % 2 == 0 else 0.45 * r
        ang = -np.pi / 2 + i * np.pi / 5
        pts.append(f"{cx + rad * np.cos(ang):.2f},{cy + rad * np.sin(ang):.2f}")
    return " ".join(pts)


def render_clustering_svg(points, labels) -> str:
    """SVG document for 2d points with integer cluster labels."""
    points = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("points must be (n, 2)")
    if labels.shape != (points.shape[0],):
        raise ValueError("labels must align with points")
    to_px = _scaler(points)
    global_mean = points.mean(axis=0)
    gx, gy = to_px(global_mean)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{VIEW}" '
        f'height="{VIEW}" viewBox="0 0 {VIEW} {VIEW}">',
        f'<rect width="{VIEW}" height="{VIEW}" fill="white"/>',
    ]

    clusters = sorted(set(int(c) for c in labels))
    ray_len = 2.0 * VIEW  # long enough to leave the viewport
    for c in clusters:
        color = PALETTE[c % len(PALETTE)]
        mean = points[labels == c].mean(axis=0)
        mx, my = to_px(mean)
        dx, dy = gx - mx, gy - my
        norm = float(np.hypot(dx, dy))
        if norm > 1e-9:
            ex = gx + dx / norm * ray_len
            ey = gy + dy / norm * ray_len
            parts.append(
                f'<line x1="{gx:.2f}" y1="{gy:.2f}" x2="{ex:.2f}" '
                f'y2="{ey:.2f}" stroke="#444444" stroke-width="1.5" '
                'stroke-dasharray="7,5"/>'
            )

    for xy, c in zip(points, labels):
        px, py = to_px(xy)
        color = PALETTE[int(c) % len(PALETTE)]
        parts.append(
            f'<circle cx="{px:.2f}" cy="{py:.2f}" r="5" fill="{color}" '
            'fill-opacity="0.85"/>'
        )

    for c in clusters:
        color = PALETTE[c % len(PALETTE)]
        mean = points[labels == c].mean(axis=0)
        mx, my = to_px(mean)
        parts.append(
            f'<polygon points="{_star_path(mx, my)}" fill="{color}" '
            'stroke="black" stroke-width="0.8"/>'
        )

    parts.append(
        f'<circle cx="{gx:.2f}" cy="{gy:.2f}" r="6" fill="black"/>'
    )
    parts.append(
        f'<circle cx="{gx:.2f}" cy="{gy:.2f}" r="10" fill="none" '
        'stroke="black" stroke-width="1.5"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
