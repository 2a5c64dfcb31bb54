"""Tiny SVG line/scatter plots for power curves (no plotting dependency)."""

from xml.sax.saxutils import escape

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def _ticks(lo, hi, k=5):
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def line_plot(series, xlabel="", ylabel="", title="", width=480, height=320, errors=None):
    """Render ``{name: (xs, ys)}`` as an SVG string.

    ``errors`` optionally maps a series name to symmetric error-bar
    half-widths.
    """
    pad_l, pad_r, pad_t, pad_b = 56, 16, 28, 44
    xs = [x for v in series.values() for x in v[0]]
    ys = [y for v in series.values() for y in v[1]]
    if errors:
        ys += [y + e for k, e_list in errors.items() for y, e in zip(series[k][1], e_list)]
        ys += [y - e for k, e_list in errors.items() for y, e in zip(series[k][1], e_list)]
    x0, x1 = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y0, y1 = (min(ys + [0.0]), max(ys + [1.0])) if ys else (0.0, 1.0)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1

    def sx(x):
        return pad_l + (x - x0) / (x1 - x0) * (width - pad_l - pad_r)

    def sy(y):
        return height - pad_b - (y - y0) / (y1 - y0) * (height - pad_t - pad_b)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="16" text-anchor="middle">{escape(title)}</text>',
           f'<line x1="{pad_l}" y1="{sy(y0):.1f}" x2="{width - pad_r}" y2="{sy(y0):.1f}" stroke="black"/>',
           f'<line x1="{pad_l}" y1="{sy(y0):.1f}" x2="{pad_l}" y2="{pad_t}" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.1f}" y="{height - pad_b + 14}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{pad_l - 6}" y="{sy(t) + 4:.1f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="{height - 8}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{height / 2:.1f}" transform="rotate(-90 14 {height / 2:.1f})" '
               f'text-anchor="middle">{escape(ylabel)}</text>')
    for i, (name, (px, py)) in enumerate(series.items()):
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y in zip(px, py))
        out.append(f'<polyline points="{pts}" fill="none" stroke="{col}" stroke-width="1.5"/>')
        for x, y in zip(px, py):
            out.append(f'<circle cx="{sx(x):.1f}" cy="{sy(y):.1f}" r="2.5" fill="{col}"/>')
        if errors and name in errors:
            for x, y, e in zip(px, py, errors[name]):
                out.append(f'<line x1="{sx(x):.1f}" y1="{sy(y - e):.1f}" x2="{sx(x):.1f}" '
                           f'y2="{sy(y + e):.1f}" stroke="{col}"/>')
        out.append(f'<text x="{width - pad_r - 4}" y="{pad_t + 14 * (i + 1)}" text-anchor="end" '
                   f'fill="{col}">{escape(str(name))}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_power_svg(points, path, title=""):
    xs = [p.value for p in points]
    ys = [p.power for p in points]
    name = points[0].param if points else "power"
    svg = line_plot({name: (xs, ys)}, xlabel=name, ylabel="power", title=title,
                    errors={name: [p.ci_half for p in points]})
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg)
    return svg
