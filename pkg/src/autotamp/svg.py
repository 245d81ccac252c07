"""SVG drawings of an environment and an optional trajectory."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .geometry import Environment, Trajectory

SCALE = 40.0
PAD = 10.0
AGENT_COLORS = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_svg(trajectory: Trajectory | None, env: Environment) -> str:
    x0, x1, y0, y1 = env.workspace
    w = (x1 - x0) * SCALE + 2 * PAD
    h = (y1 - y0) * SCALE + 2 * PAD

    def px(x):
        return _fmt(PAD + (x - x0) * SCALE)

    def py(y):  # SVG y grows downwards
        return _fmt(PAD + (y1 - y) * SCALE)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(w)}" height="{_fmt(h)}" '
           f'viewBox="0 0 {_fmt(w)} {_fmt(h)}">',
           f'<rect x="{px(x0)}" y="{py(y1)}" width="{_fmt((x1 - x0) * SCALE)}" '
           f'height="{_fmt((y1 - y0) * SCALE)}" fill="white" stroke="black" stroke-width="1"/>']
    for r in env.regions:
        color = r.attributes.get("color") or ("black" if r.group == "walls" else "lightgray")
        out.append(f'<rect x="{px(r.x_min)}" y="{py(r.y_max)}" width="{_fmt((r.x_max - r.x_min) * SCALE)}" '
                   f'height="{_fmt((r.y_max - r.y_min) * SCALE)}" fill="{escape(color)}" fill-opacity="0.6" '
                   f'stroke="gray" stroke-width="0.5"><title>{escape(r.name)}</title></rect>')
        out.append(f'<text x="{px(0.5 * (r.x_min + r.x_max))}" y="{py(0.5 * (r.y_min + r.y_max))}" '
                   f'font-size="9" text-anchor="middle" fill="black">{escape(r.name)}</text>')
    if trajectory is not None:
        for k, (name, pts) in enumerate(trajectory.waypoints.items()):
            color = AGENT_COLORS[k % len(AGENT_COLORS)]
            coords = " ".join(f"{px(x)},{py(y)}" for x, y, _ in pts)
            out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2">'
                       f'<title>{escape(name)}</title></polyline>')
            sx, sy, _ = pts[0]
            ex, ey, _ = pts[-1]
            out.append(f'<circle cx="{px(sx)}" cy="{py(sy)}" r="4" fill="{color}"/>')
            out.append(f'<rect x="{_fmt(float(px(ex)) - 4)}" y="{_fmt(float(py(ey)) - 4)}" width="8" height="8" '
                       f'fill="{color}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


__all__ = ["render_svg"]
