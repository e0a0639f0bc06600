"""Deterministic top-down SVG rendering of scenes.

Pure string building with fixed float formatting: the same scene always
produces identical bytes, so renders are diffable in CI.
"""

from __future__ import annotations

from . import world
from .world import Color, Scene

#: Pixels per meter.
_SCALE = 1000.0

_FILL = {
    Color.BLUE: "#2e6fdb",
    Color.YELLOW: "#e8c61a",
    Color.RED: "#d43a2f",
    Color.GREEN: "#3d9e46",
    Color.PINK: "#e87fb4",
    Color.GREY: "#8a8a8a",
    Color.WHITE: "#f2f2ef",
    Color.ORANGE: "#e8862a",
    Color.CYAN: "#35bdc9",
    Color.BROWN: "#8a5a2e",
    Color.PURPLE: "#8b4fc9",
}


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _xy(x: float, y: float) -> tuple[float, float]:
    # SVG y grows downward; the workspace origin is bottom-left.
    return x * _SCALE, (world.WORKSPACE_H - y) * _SCALE


def render_scene_svg(scene: Scene) -> str:
    w, h = world.WORKSPACE_W * _SCALE, world.WORKSPACE_H * _SCALE
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {_fmt(w)} {_fmt(h)}" '
        f'width="{_fmt(w)}" height="{_fmt(h)}">',
        f'<rect x="0" y="0" width="{_fmt(w)}" height="{_fmt(h)}" fill="#d9cfc0"/>',
    ]
    # Region grid for orientation.
    for i in (1, 2):
        gx = w * i / 3.0
        gy = h * i / 3.0
        parts.append(f'<line x1="{_fmt(gx)}" y1="0" x2="{_fmt(gx)}" y2="{_fmt(h)}" stroke="#c4b8a6" stroke-width="1"/>')
        parts.append(f'<line x1="0" y1="{_fmt(gy)}" x2="{_fmt(w)}" y2="{_fmt(gy)}" stroke="#c4b8a6" stroke-width="1"/>')

    for zone in scene.zones:
        cx, cy = _xy(zone.pose.x, zone.pose.y)
        half = zone.edge / 2.0 * _SCALE
        parts.append(
            f'<rect x="{_fmt(cx - half)}" y="{_fmt(cy - half)}" width="{_fmt(2 * half)}" '
            f'height="{_fmt(2 * half)}" fill="none" stroke="{_FILL[zone.color]}" stroke-width="4"/>'
        )
    for bowl in scene.bowls:
        cx, cy = _xy(bowl.pose.x, bowl.pose.y)
        r = bowl.edge / 2.0 * _SCALE
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" fill="{_FILL[bowl.color]}" '
            f'fill-opacity="0.35" stroke="{_FILL[bowl.color]}" stroke-width="3"/>'
        )
    # Blocks bottom-up so stack tops draw last.
    def level(o) -> int:
        return world.stack_of(scene, o.id).index(o.id)

    for block in sorted(scene.blocks, key=lambda o: (level(o), o.id)):
        cx, cy = _xy(block.pose.x, block.pose.y)
        half = block.edge / 2.0 * _SCALE
        deg = -block.pose.theta * 180.0 / 3.141592653589793
        transform = f' transform="rotate({_fmt(deg)} {_fmt(cx)} {_fmt(cy)})"' if block.pose.theta else ""
        parts.append(
            f'<rect x="{_fmt(cx - half)}" y="{_fmt(cy - half)}" width="{_fmt(2 * half)}" '
            f'height="{_fmt(2 * half)}" fill="{_FILL[block.color]}" stroke="#333333" '
            f'stroke-width="1.5"{transform}/>'
        )
        lv = level(block)
        if lv > 0:
            parts.append(
                f'<text x="{_fmt(cx)}" y="{_fmt(cy + 5)}" font-size="16" font-family="monospace" '
                f'text-anchor="middle" fill="#111111">{lv + 1}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
