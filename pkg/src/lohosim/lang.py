"""Bidirectional language layer.

Renders actions, scenes and outcomes to fixed templated text (the reporter
side of the loop) and parses instruction text back into structured actions
(what the actor needs from a text-emitting planner). The grammar is a fixed
template with a small synonym table; parsing the canonical rendering of any
action gives the action back exactly.
"""

from __future__ import annotations

import re

from . import world
from .primitives import Action, ExecutionOutcome, PlaceTarget
from .world import Color, Kind, ObjectRef, Region, Scene, SceneObject, SizeClass

TEMPLATE_VERSION = "1"

ZONE_MATCH_THRESHOLD = 0.5


class ParseError(world.SimError):
    """Instruction text does not match the grammar."""

    def __init__(self, position: int, expected: str, text: str = ""):
        super().__init__(f"parse error at {position}: expected {expected}")
        self.position = position
        self.expected = expected
        self.text = text


_ORDINAL_WORDS = (
    "first", "second", "third", "fourth", "fifth",
    "sixth", "seventh", "eighth", "ninth", "tenth",
)
_ORDINAL_BY_WORD = {w: i + 1 for i, w in enumerate(_ORDINAL_WORDS)}

_COLOR_PAT = "|".join(c.value for c in Color)
_SIZE_PAT = "smaller|bigger"
_ORD_PAT = "|".join(_ORDINAL_WORDS) + r"|\d+(?:st|nd|rd|th)"
_ROW_PAT = "top|center|bottom"
_COL_PAT = "left|middle|right"

_BLOCK_DESC = (
    r"(?:the\s+)?"
    rf"(?:(?P<ordinal>{_ORD_PAT})\s+)?"
    rf"(?:(?P<size>{_SIZE_PAT})\s+)?"
    rf"(?:(?P<color>{_COLOR_PAT})\s+)?"
    r"block"
    rf"(?:\s+in\s+the\s+(?P<drow>{_ROW_PAT})\s+(?P<dcol>{_COL_PAT})\s+(?:area|zone))?"
)

_MAIN_RE = re.compile(
    r"^\s*pick\s+up\s+(?P<pick>.+?)\s+and\s+(?:place|put)\s+(?:it\s+)?(?P<place>.+?)\s*\.?\s*$",
    re.IGNORECASE,
)
# Short imperative synonym without an explicit pick-up clause:
# "put the blue block in the red bowl".
_SHORT_RE = re.compile(
    r"^\s*(?:place|put)\s+(?P<pick>.+?\bblock)\s+(?P<place>.+?)\s*\.?\s*$",
    re.IGNORECASE,
)
_PICK_RE = re.compile(rf"^{_BLOCK_DESC}$")

_PLACE_RELATIVE_RE = re.compile(
    rf"^(?:on\s+the\s+(?P<side>left|right)\s+of|(?P<vert>above|below))\s+(?P<desc>{_BLOCK_DESC.replace('P<', 'P<t_')})$"
)
_PLACE_ON_RE = re.compile(rf"^on(?:\s+top\s+of)?\s+(?P<desc>{_BLOCK_DESC.replace('P<', 'P<t_')})$")
_PLACE_CENTER_RE = re.compile(r"^(?:in|at|on)\s+the\s+center\s+of\s+the\s+table$")
_PLACE_REGION_RE = re.compile(
    rf"^(?:in|into|on|to)\s+the\s+(?P<row>{_ROW_PAT})\s+(?P<col>{_COL_PAT})\s+(?:area|zone)$"
)
_PLACE_BOWL_RE = re.compile(
    rf"^(?:in|into|on)\s+(?:the\s+)?(?:(?P<ordinal>{_ORD_PAT})\s+)?(?P<color>{_COLOR_PAT})\s+bowl$"
)
_PLACE_ZONE_RE = re.compile(
    rf"^(?:in|into|on)\s+(?:the\s+)?(?:(?P<ordinal>{_ORD_PAT})\s+)?(?P<color>{_COLOR_PAT})\s+(?:zone|area)$"
)


def _ordinal_word(n: int) -> str:
    if 1 <= n <= len(_ORDINAL_WORDS):
        return _ORDINAL_WORDS[n - 1]
    suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10 if n % 100 not in (11, 12, 13) else 0, "th")
    return f"{n}{suffix}"


def _parse_ordinal(word: str) -> int:
    if word in _ORDINAL_BY_WORD:
        return _ORDINAL_BY_WORD[word]
    return int(re.match(r"\d+", word).group())


def _ref_phrase(ref: ObjectRef) -> str:
    if ref.kind is not Kind.BLOCK:
        raise ValueError("only block references render as pick descriptors")
    parts = ["the"]
    if ref.ordinal is not None:
        parts.append(_ordinal_word(ref.ordinal))
    if ref.size is not None:
        parts.append(ref.size.value)
    if ref.color is not None:
        parts.append(ref.color.value)
    parts.append("block")
    phrase = " ".join(parts)
    if ref.region is not None:
        phrase += f" in the {ref.region.display} area"
    return phrase


def _ref_from_groups(g: dict, prefix: str = "") -> ObjectRef:
    ordinal = g.get(prefix + "ordinal")
    size = g.get(prefix + "size")
    color = g.get(prefix + "color")
    drow, dcol = g.get(prefix + "drow"), g.get(prefix + "dcol")
    return ObjectRef(
        kind=Kind.BLOCK,
        color=Color(color) if color else None,
        size=SizeClass(size) if size else None,
        region=Region((drow, dcol)) if drow else None,
        ordinal=_parse_ordinal(ordinal) if ordinal else None,
    )


def render_instruction(action: Action) -> str:
    """Canonical instruction text for an action.

    Table-point targets are internal (drop/topple bookkeeping) and have no
    language form.
    """
    place = action.place
    if place.kind == "on_object":
        tail = f"on {_ref_phrase(place.ref)}"
    elif place.kind == "relative":
        desc = _ref_phrase(place.ref)
        tail = {
            "left_of": f"on the left of {desc}",
            "right_of": f"on the right of {desc}",
            "above": f"above {desc}",
            "below": f"below {desc}",
        }[place.relation]
    elif place.kind == "region":
        tail = f"in the {place.region.display} area"
    elif place.kind == "in_bowl":
        ordinal = f"{_ordinal_word(place.ref.ordinal)} " if place.ref.ordinal else ""
        tail = f"in the {ordinal}{place.ref.color.value} bowl"
    elif place.kind == "in_zone":
        ordinal = f"{_ordinal_word(place.ref.ordinal)} " if place.ref.ordinal else ""
        tail = f"in the {ordinal}{place.ref.color.value} zone"
    else:
        raise ValueError(f"place target {place.kind!r} is not language-expressible")
    return f"Pick up {_ref_phrase(action.pick)} and place it {tail}"


def parse_instruction(text: str) -> Action:
    """Parse instruction text into an action (inverse of render_instruction;
    tolerant of a bounded synonym set). Raises ParseError on any mismatch."""
    m = _MAIN_RE.match(text) or _SHORT_RE.match(text)
    if m is None:
        raise ParseError(0, 'an instruction of the form "Pick up ... and place it ..."', text)
    pick_text = m.group("pick").strip().lower()
    place_text = m.group("place").strip().lower()

    pm = _PICK_RE.match(pick_text)
    if pm is None:
        raise ParseError(m.start("pick"), "a block description", text)
    pick = _ref_from_groups(pm.groupdict())

    place = _parse_place(place_text, m.start("place"), text)
    return Action(pick=pick, place=place)


def _parse_place(place_text: str, pos: int, full_text: str) -> PlaceTarget:
    m = _PLACE_RELATIVE_RE.match(place_text)
    if m:
        ref = _ref_from_groups(m.groupdict(), prefix="t_")
        relation = {"left": "left_of", "right": "right_of"}.get(m.group("side")) or m.group("vert")
        return PlaceTarget.relative(ref, relation)
    m = _PLACE_ON_RE.match(place_text)
    if m:
        return PlaceTarget.on_object(_ref_from_groups(m.groupdict(), prefix="t_"))
    if _PLACE_CENTER_RE.match(place_text):
        return PlaceTarget.in_region(Region.CENTER_MIDDLE)
    m = _PLACE_REGION_RE.match(place_text)
    if m:
        return PlaceTarget.in_region(Region((m.group("row"), m.group("col"))))
    m = _PLACE_BOWL_RE.match(place_text)
    if m:
        ref = ObjectRef(
            kind=Kind.BOWL,
            color=Color(m.group("color")),
            ordinal=_parse_ordinal(m.group("ordinal")) if m.group("ordinal") else None,
        )
        return PlaceTarget.in_bowl(ref)
    m = _PLACE_ZONE_RE.match(place_text)
    if m:
        ref = ObjectRef(
            kind=Kind.ZONE,
            color=Color(m.group("color")),
            ordinal=_parse_ordinal(m.group("ordinal")) if m.group("ordinal") else None,
        )
        return PlaceTarget.in_zone(ref)
    raise ParseError(pos, "a place target", full_text)


# ---------------------------------------------------------------------------
# Object naming (shared with planners: minimal unambiguous descriptors)
# ---------------------------------------------------------------------------


def minimal_ref(scene: Scene, obj_id: int) -> ObjectRef:
    """Smallest descriptor that uniquely picks out obj_id.

    Ladder: color; color+size when that resolves; otherwise color+ordinal in
    reading order (size is dropped again when it does not discriminate).
    """
    obj = scene.get(obj_id)
    ref = ObjectRef(kind=obj.kind, color=obj.color)
    matches = world.matching_objects(scene, ref)
    if len(matches) == 1:
        return ref
    if obj.size is not None:
        sized = ObjectRef(kind=obj.kind, color=obj.color, size=obj.size)
        if len(world.matching_objects(scene, sized)) == 1:
            return sized
    rank = [o.id for o in matches].index(obj_id) + 1
    return ObjectRef(kind=obj.kind, color=obj.color, ordinal=rank)


def object_name(scene: Scene, obj_id: int) -> str:
    """Readable unique name, e.g. "the first red block (top-left most)"."""
    ref = minimal_ref(scene, obj_id)
    obj = scene.get(obj_id)
    if obj.kind is not Kind.BLOCK:
        ordinal = f"{_ordinal_word(ref.ordinal)} " if ref.ordinal else ""
        return f"the {ordinal}{obj.color.value} {obj.kind.value}"
    name = _ref_phrase(ref)
    if ref.ordinal == 1:
        name += " (top-left most)"
    return name


# ---------------------------------------------------------------------------
# Scene and outcome captions
# ---------------------------------------------------------------------------


def _plural(n: int, word: str) -> str:
    return f"{n} {word}{'' if n == 1 else 's'}"


def _inventory_lines(scene: Scene) -> list[str]:
    lines = []
    groups: dict[tuple, int] = {}
    for o in sorted(scene.objects.values(), key=lambda o: o.id):
        key = (o.kind, o.color, o.size if o.kind is Kind.BLOCK else None)
        groups[key] = groups.get(key, 0) + 1
    order = lambda kv: (  # noqa: E731
        list(Kind).index(kv[0][0]),
        world.color_sort_key(kv[0][1]),
        -1 if kv[0][2] is None else list(SizeClass).index(kv[0][2]),
    )
    for (kind, color, size), count in sorted(groups.items(), key=order):
        size_word = f"{size.value} " if size is not None and _mixed_sizes(scene) else ""
        noun = f"{size_word}{color.value} {kind.value}"
        if count == 1:
            lines.append(f"There is a {noun}.")
        else:
            lines.append(f"There are {count} {noun}s.")
    return lines


def _mixed_sizes(scene: Scene) -> bool:
    sizes = {o.size for o in scene.blocks}
    return len(sizes) > 1


def _block_in_zone(block: SceneObject, zone: SceneObject) -> bool:
    return world.footprint_overlap(block, zone) >= ZONE_MATCH_THRESHOLD


def _stack_lines(scene: Scene) -> list[str]:
    lines = []
    seen: set[int] = set()
    for b in scene.blocks:
        if b.id in seen or b.support.kind == "on":
            continue
        chain = world.stack_of(scene, b.id)
        seen.update(chain)
        if len(chain) < 2:
            continue
        names = ", ".join(object_name(scene, i) for i in chain)
        lines.append(f"There is a stack, from bottom to top: {names}.")
    return lines


def _bowl_lines(scene: Scene) -> list[str]:
    lines = []
    for b in scene.blocks:
        name = object_name(scene, b.id)
        if b.support.kind == "in_bowl":
            bowl = scene.get(b.support.base)
            lines.append(f"{name.capitalize()} is in the {bowl.color.value} bowl.")
        else:
            lines.append(f"{name.capitalize()} is not in any bowl.")
    return lines


def _zone_lines(scene: Scene) -> list[str]:
    lines = []
    for zone in sorted(scene.zones, key=lambda z: world.color_sort_key(z.color)):
        members = [b for b in scene.blocks if b.color is zone.color]
        for b in members:
            where = "in" if _block_in_zone(b, zone) else "outside of"
            article = "an" if b.color.value[0] in "aeiou" else "a"
            lines.append(f"There is {article} {b.color.value} block {where} the {zone.color.value} zone.")
    return lines


def _region_lines(scene: Scene, regions: list[Region]) -> list[str]:
    lines = []
    for region in regions:
        members = [b for b in scene.blocks if world.region_of(b.pose) is region]
        if not members:
            lines.append(f"There are no blocks in the {region.display} area.")
        elif len(members) == 1:
            lines.append(f"There is 1 block in the {region.display} area.")
        else:
            lines.append(f"There are {len(members)} blocks in the {region.display} area.")
        for b in members:
            lines.append(f"{object_name(scene, b.id).capitalize()} is in the {region.display} area.")
    return lines


def _position_lines(scene: Scene) -> list[str]:
    lines = []
    for b in scene.blocks:
        cm = lambda v: round(v * 100.0, 1)  # noqa: E731
        lines.append(
            f"{object_name(scene, b.id).capitalize()} is at x={cm(b.pose.x)} y={cm(b.pose.y)} centimeters."
        )
    return lines


def _instruction_regions(instruction: str) -> list[Region]:
    found = []
    for m in re.finditer(rf"({_ROW_PAT})\s+({_COL_PAT})", instruction.lower()):
        found.append(Region((m.group(1), m.group(2))))
    return found


def describe_scene(scene: Scene, task: str, instruction: str) -> str:
    """Deterministic observation caption, restricted to task-relevant
    relations (bowl membership for bowl tasks, zone membership for zone
    tasks, region counts for region tasks, stacks for stacking tasks)."""
    lines = _inventory_lines(scene)
    if task in ("B", "F"):
        lines += _bowl_lines(scene)
    elif task in ("E", "I"):
        lines += _zone_lines(scene)
        if task == "I":
            lines += _stack_lines(scene)
    elif task in ("D", "J"):
        lines += _region_lines(scene, _instruction_regions(instruction))
        if task == "D":
            lines += _stack_lines(scene)
    elif task in ("C", "G", "H", "K", "L"):
        lines += _stack_lines(scene)
    elif task == "M":
        lines += _position_lines(scene)
    elif task == "A":
        lines += _primitive_lines(scene, instruction)
    return " ".join(lines)


def _primitive_lines(scene: Scene, instruction: str) -> list[str]:
    try:
        action = parse_instruction(instruction)
    except ParseError:
        return []
    try:
        picked = world.resolve_reference(scene, action.pick)
    except world.SimError:
        return []
    name = object_name(scene, picked).capitalize()
    place = action.place
    if place.kind == "on_object":
        try:
            base = world.resolve_reference(scene, place.ref)
        except world.SimError:
            return []
        on = scene.get(picked).support == world.Support.on(base)
        verb = "is" if on else "is not"
        return [f"{name} {verb} on {object_name(scene, base)}."]
    if place.kind == "region":
        inside = world.region_of(scene.get(picked).pose) is place.region
        verb = "is" if inside else "is not"
        return [f"{name} {verb} in the {place.region.display} area."]
    return []


_FAIL_TEXT = {
    ("pick_failed", "no_match"): "no block matches the description",
    ("pick_failed", "ambiguous"): "the description matches {n} blocks",
    ("pick_failed", "occluded"): "the block is covered by another block",
    ("place_failed", "no_match"): "no object matches the placement description",
    ("place_failed", "ambiguous"): "the placement description matches {n} objects",
}


def describe_outcome(action: Action, outcome: ExecutionOutcome) -> str:
    """Action-and-success-state feedback sentence for the last instruction."""
    rendered = render_instruction(action)
    if outcome.ok:
        return f'The last instruction "{rendered}" is executed successfully.'
    if outcome.status == "dropped":
        reason = "the block was dropped during transport"
    elif outcome.status == "toppled":
        reason = "the stack toppled and the block fell off"
    else:
        reason = _FAIL_TEXT[(outcome.status, outcome.reason)].format(n=outcome.detail)
    return f'The last instruction "{rendered}" failed: {reason}.'
