"""Minimal SVG line plots for radiation patterns.

Hand-rolled on purpose: output must be byte-identical for identical
inputs (no timestamps, no library version strings), and the only thing
ever drawn is one curve with optional direction markers.
"""

import math

WIDTH = 800
HEIGHT = 480
MARGIN_L = 64
MARGIN_R = 18
MARGIN_T = 30
MARGIN_B = 46

_STYLE = (
    "text{font-family:sans-serif;font-size:13px;fill:#333}"
    ".grid{stroke:#ccc;stroke-width:1}"
    ".axis{stroke:#333;stroke-width:1.5}"
    ".curve{stroke:#1f6fb2;stroke-width:1.8;fill:none}"
    ".beam{stroke:#2a8f2a;stroke-width:1.4;stroke-dasharray:6 4}"
    ".null{stroke:#c03030;stroke-width:1.4;stroke-dasharray:6 4}"
)


def _tick_step(span, target=8):
    """Largest step from a 1-2-5 ladder giving at most `target` ticks."""
    if span <= 0:
        return 1.0
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if mag * mult >= raw:
            return mag * mult
    return mag * 10.0


def _ticks(lo, hi, step):
    first = math.ceil(lo / step) * step
    out = []
    v = first
    while v <= hi + 1e-9 * step:
        out.append(0.0 if abs(v) < 1e-12 else v)
        v += step
    return out


def _fmt(v):
    return f"{v:.2f}"


def pattern_svg(angles, values_db, beams=(), nulls=(), title=""):
    """Cartesian angle-vs-dB plot as an SVG string."""
    if len(angles) != len(values_db) or len(angles) < 2:
        raise ValueError("angles and values must be equal-length, >= 2")
    x_lo, x_hi = float(angles[0]), float(angles[-1])
    v_lo, v_hi = min(values_db), max(values_db)
    y_lo = math.floor(v_lo / 10.0) * 10.0
    y_hi = math.ceil(v_hi / 10.0) * 10.0
    if y_hi <= y_lo:
        y_hi = y_lo + 10.0

    px_w = WIDTH - MARGIN_L - MARGIN_R
    px_h = HEIGHT - MARGIN_T - MARGIN_B

    def xp(theta):
        return MARGIN_L + (theta - x_lo) / (x_hi - x_lo) * px_w

    def yp(val):
        return MARGIN_T + (y_hi - val) / (y_hi - y_lo) * px_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<style>{_STYLE}</style>",
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]

    x_step = _tick_step(x_hi - x_lo)
    for t in _ticks(x_lo, x_hi, x_step):
        x = _fmt(xp(t))
        parts.append(
            f'<line class="grid" x1="{x}" y1="{MARGIN_T}" x2="{x}" '
            f'y2="{HEIGHT - MARGIN_B}"/>'
        )
        parts.append(
            f'<text x="{x}" y="{HEIGHT - MARGIN_B + 18}" '
            f'text-anchor="middle">{t:g}</text>'
        )
    y_step = _tick_step(y_hi - y_lo, target=7)
    for v in _ticks(y_lo, y_hi, y_step):
        y = _fmt(yp(v))
        parts.append(
            f'<line class="grid" x1="{MARGIN_L}" y1="{y}" '
            f'x2="{WIDTH - MARGIN_R}" y2="{y}"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{y}" text-anchor="end" '
            f'dominant-baseline="middle">{v:g}</text>'
        )

    parts.append(
        f'<rect class="axis" x="{MARGIN_L}" y="{MARGIN_T}" width="{px_w}" '
        f'height="{px_h}" fill="none"/>'
    )

    for theta in beams:
        x = _fmt(xp(float(theta)))
        parts.append(
            f'<line class="beam" x1="{x}" y1="{MARGIN_T}" x2="{x}" '
            f'y2="{HEIGHT - MARGIN_B}"/>'
        )
    for theta in nulls:
        x = _fmt(xp(float(theta)))
        parts.append(
            f'<line class="null" x1="{x}" y1="{MARGIN_T}" x2="{x}" '
            f'y2="{HEIGHT - MARGIN_B}"/>'
        )

    pts = " ".join(
        f"{_fmt(xp(float(a)))},{_fmt(yp(float(v)))}"
        for a, v in zip(angles, values_db)
    )
    parts.append(f'<polyline class="curve" points="{pts}"/>')

    parts.append(
        f'<text x="{MARGIN_L + px_w / 2:.0f}" y="{HEIGHT - 8}" '
        f'text-anchor="middle">angle [deg]</text>'
    )
    parts.append(
        f'<text x="16" y="{MARGIN_T + px_h / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {MARGIN_T + px_h / 2:.0f})">power [dB]</text>'
    )
    if title:
        parts.append(
            f'<text x="{MARGIN_L + px_w / 2:.0f}" y="18" '
            f'text-anchor="middle">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, svg):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
