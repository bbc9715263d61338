"""Dependency-free static SVG figures: electrode topomaps and bar charts.

Output is a pure function of the inputs (no timestamps, fixed float
formatting), so identical calls produce byte-identical files.
"""

import math

from .data import ElectrodeLayout


def _fmt(v: float) -> str:
    return f"{v:.4f}".rstrip("0").rstrip(".")


def _heat_color(value: float, lo: float, hi: float) -> str:
    """Linear white -> red over [lo, hi]; higher values are darker red."""
    if not math.isfinite(value):
        return "rgb(200,200,200)"
    t = 0.5 if hi <= lo else (value - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0)
    gb = round(255 * (1.0 - t))
    return f"rgb(255,{gb},{gb})"


def topomap_svg(layout: ElectrodeLayout, values: dict[str, float]) -> str:
    """Head-outline scatter of per-channel values at the layout coordinates."""
    size = 420
    cx = cy = size / 2
    head_r = 150.0
    scale = 140.0  # layout coords are ~unit head radius
    finite = [v for v in values.values() if v is not None and math.isfinite(v)]
    lo = min(finite) if finite else 0.0
    hi = max(finite) if finite else 1.0

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(head_r)}" '
        'fill="none" stroke="black" stroke-width="2"/>',
        # nose marker at the top of the head circle
        f'<path d="M {_fmt(cx - 14)} {_fmt(cy - head_r + 2)} L {_fmt(cx)} '
        f'{_fmt(cy - head_r - 16)} L {_fmt(cx + 14)} {_fmt(cy - head_r + 2)}" '
        'fill="none" stroke="black" stroke-width="2"/>',
    ]
    for name, (x, y) in zip(layout.names, layout.positions):
        px = cx + x * scale
        py = cy - y * scale  # +y is the nose, which points up on screen
        v = values.get(name)
        color = _heat_color(v, lo, hi) if v is not None else "rgb(200,200,200)"
        label = "n/a" if v is None or not math.isfinite(v) else _fmt(v)
        parts.append(
            f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="11" fill="{color}" '
            f'stroke="black" stroke-width="1"><title>{name}: {label}</title></circle>'
        )
        parts.append(
            f'<text x="{_fmt(px)}" y="{_fmt(py + 22)}" font-size="8" '
            f'text-anchor="middle" font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def bar_chart_svg(items: list[tuple[str, float | None]], y_label: str = "") -> str:
    """Vertical bar chart; supports negative values (bars hang below the zero line)."""
    bar_w, gap, margin = 34, 12, 48
    plot_h = 220
    width = margin * 2 + len(items) * (bar_w + gap)
    height = plot_h + 2 * margin
    finite = [v for _, v in items if v is not None and math.isfinite(v)]
    lo = min(0.0, min(finite)) if finite else 0.0
    hi = max(0.0, max(finite)) if finite else 1.0
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo

    def ypos(v: float) -> float:
        return margin + plot_h * (hi - v) / span

    zero_y = ypos(0.0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{_fmt(zero_y)}" x2="{width - margin}" '
        f'y2="{_fmt(zero_y)}" stroke="black" stroke-width="1"/>',
    ]
    if y_label:
        parts.append(
            f'<text x="{margin}" y="{margin - 12}" font-size="10" '
            f'font-family="sans-serif">{y_label}</text>'
        )
    for i, (name, v) in enumerate(items):
        x = margin + i * (bar_w + gap)
        if v is None or not math.isfinite(v):
            parts.append(
                f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(zero_y - 4)}" font-size="8" '
                f'text-anchor="middle" font-family="sans-serif">n/a</text>'
            )
        else:
            top = min(ypos(v), zero_y)
            h = abs(ypos(v) - zero_y)
            parts.append(
                f'<rect x="{_fmt(x)}" y="{_fmt(top)}" width="{bar_w}" height="{_fmt(h)}" '
                f'fill="rgb(178,34,34)" stroke="black" stroke-width="0.5"/>'
            )
            vy = top - 4 if v >= 0 else top + h + 10
            parts.append(
                f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(vy)}" font-size="8" '
                f'text-anchor="middle" font-family="sans-serif">{_fmt(v)}</text>'
            )
        parts.append(
            f'<text x="{_fmt(x + bar_w / 2)}" y="{_fmt(margin + plot_h + 14)}" font-size="8" '
            f'text-anchor="middle" font-family="sans-serif">{name}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
