"""Minimal deterministic SVG line and scatter charts."""

from xml.sax.saxutils import escape

WIDTH, HEIGHT = 480, 320
MARGIN = 50


def _fmt(v):
    return f"{v:.2f}"


def _scale(values, lo_px, hi_px, pad=0.05):
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    span = hi - lo
    lo, hi = lo - pad * span, hi + pad * span
    return (lambda v: lo_px + (v - lo) / (hi - lo) * (hi_px - lo_px)), lo, hi


def _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi):
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH // 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH // 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">{escape(xlabel)}</text>',
        f'<text x="14" y="{HEIGHT // 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT // 2})">{escape(ylabel)}</text>',
        f'<text x="{MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10" text-anchor="middle">{xlo:.3g}</text>',
        f'<text x="{WIDTH - MARGIN}" y="{HEIGHT - MARGIN + 16}" font-size="10" text-anchor="middle">{xhi:.3g}</text>',
        f'<text x="{MARGIN - 4}" y="{HEIGHT - MARGIN}" font-size="10" text-anchor="end">{ylo:.3g}</text>',
        f'<text x="{MARGIN - 4}" y="{MARGIN + 4}" font-size="10" text-anchor="end">{yhi:.3g}</text>',
    ]
    return parts


def line_chart(series, title="", xlabel="", ylabel=""):
    """``series``: list of ``(name, xs, ys)``. One ``<circle>`` per data point."""
    allx = [x for _, xs, _ in series for x in xs]
    ally = [y for _, _, ys in series for y in ys]
    fx, xlo, xhi = _scale(allx, MARGIN, WIDTH - MARGIN)
    fy, ylo, yhi = _scale(ally, HEIGHT - MARGIN, MARGIN)
    parts = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    palette = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
    for k, (name, xs, ys) in enumerate(series):
        color = palette[k % len(palette)]
        pts = " ".join(f"{_fmt(fx(x))},{_fmt(fy(y))}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        for x, y in zip(xs, ys):
            parts.append(f'<circle class="point" cx="{_fmt(fx(x))}" cy="{_fmt(fy(y))}" r="2.5" fill="{color}"/>')
        parts.append(f'<text x="{WIDTH - MARGIN + 4}" y="{MARGIN + 14 * k}" font-size="10" '
                     f'fill="{color}">{escape(str(name))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def scatter(xs, ys, labels=None, title="", xlabel="", ylabel=""):
    fx, xlo, xhi = _scale(list(xs), MARGIN, WIDTH - MARGIN)
    fy, ylo, yhi = _scale(list(ys), HEIGHT - MARGIN, MARGIN)
    parts = _frame(title, xlabel, ylabel, xlo, xhi, ylo, yhi)
    for k, (x, y) in enumerate(zip(xs, ys)):
        parts.append(f'<circle class="point" cx="{_fmt(fx(x))}" cy="{_fmt(fy(y))}" r="3" fill="#1f77b4"/>')
        if labels is not None:
            parts.append(f'<text x="{_fmt(fx(x) + 5)}" y="{_fmt(fy(y) - 5)}" font-size="9">{escape(str(labels[k]))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
