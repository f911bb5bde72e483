"""Self-contained SVG emission (no external renderer).

Heatmaps use a fixed five-stop ramp (the standard viridis anchor colors)
interpolated linearly in RGB:
0.0 #440154, 0.25 #3b528b, 0.5 #21918c, 0.75 #5ec962, 1.0 #fde725.
"""

from __future__ import annotations

_RAMP = [(0.00, (0x44, 0x01, 0x54)),
         (0.25, (0x3B, 0x52, 0x8B)),
         (0.50, (0x21, 0x91, 0x8C)),
         (0.75, (0x5E, 0xC9, 0x62)),
         (1.00, (0xFD, 0xE7, 0x25))]

_CELL = 22
_MARGIN_LEFT = 56
_MARGIN_TOP = 34
_MARGIN_BOTTOM = 44
_MARGIN_RIGHT = 70


def ramp_color(value: float) -> str:
    v = min(max(float(value), 0.0), 1.0)
    for (t0, c0), (t1, c1) in zip(_RAMP, _RAMP[1:]):
        if v <= t1:
            w = 0.0 if t1 == t0 else (v - t0) / (t1 - t0)
            rgb = [round(a + w * (b - a)) for a, b in zip(c0, c1)]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return "#{:02x}{:02x}{:02x}".format(*_RAMP[-1][1])


def _text(x, y, s, anchor="middle", size=11):
    return (f'<text x="{x:.1f}" y="{y:.1f}" font-family="monospace" '
            f'font-size="{size}" text-anchor="{anchor}">{s}</text>')


def phase_heatmap_svg(diagram, crossings=None) -> str:
    """Heatmap of the success matrix; optional (s_list, m_star_list)
    contour crossings drawn as white dots."""
    s_grid, m_grid = diagram.s_grid, diagram.m_grid
    width = _MARGIN_LEFT + _CELL * len(m_grid) + _MARGIN_RIGHT
    height = _MARGIN_TOP + _CELL * len(s_grid) + _MARGIN_BOTTOM
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             _text(width / 2, 18,
                   f"recovery probability, n={diagram.n}, {diagram.dist.kind}")]
    for i, s in enumerate(s_grid):
        y = _MARGIN_TOP + i * _CELL
        parts.append(_text(_MARGIN_LEFT - 8, y + _CELL * 0.7, f"s={s}", "end"))
        for j, _ in enumerate(m_grid):
            x = _MARGIN_LEFT + j * _CELL
            color = ramp_color(diagram.success[i, j])
            parts.append(f'<rect x="{x}" y="{y}" width="{_CELL}" '
                         f'height="{_CELL}" fill="{color}"/>')
    step = max(1, len(m_grid) // 8)
    for j in range(0, len(m_grid), step):
        x = _MARGIN_LEFT + j * _CELL + _CELL / 2
        parts.append(_text(x, _MARGIN_TOP + _CELL * len(s_grid) + 16, str(m_grid[j])))
    parts.append(_text(width / 2, height - 8, "m (rows)"))
    # colorbar
    bar_x = _MARGIN_LEFT + _CELL * len(m_grid) + 16
    bar_h = _CELL * len(s_grid)
    for i in range(bar_h):
        v = 1.0 - i / max(bar_h - 1, 1)
        parts.append(f'<rect x="{bar_x}" y="{_MARGIN_TOP + i}" width="14" '
                     f'height="1.5" fill="{ramp_color(v)}"/>')
    parts.append(_text(bar_x + 18, _MARGIN_TOP + 8, "1", "start", 10))
    parts.append(_text(bar_x + 18, _MARGIN_TOP + bar_h, "0", "start", 10))
    if crossings is not None:
        s_index = {s: i for i, s in enumerate(s_grid)}
        m0, m1 = m_grid[0], m_grid[-1]
        span = (m1 - m0) or 1
        for s, m_star in zip(*crossings):
            x = _MARGIN_LEFT + (m_star - m0) / span * (_CELL * (len(m_grid) - 1)) + _CELL / 2
            y = _MARGIN_TOP + s_index[s] * _CELL + _CELL / 2
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="3.5" '
                         'fill="white" stroke="black"/>')
    parts.append("</svg>")
    return "\n".join(parts)
