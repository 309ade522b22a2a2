"""Petri nets with a plain-text (TPN) codec.

The TPN dialect matches the output of the template transformer: all places
are listed first (the initial place annotated ``init 1``), then each
transition as a ``trans`` line followed by indented ``in``/``out`` place
lists.  Names of call-derived transitions are double-quoted; everything
else is bare.  Arc weights are always 1; ``init`` counts other than 1 are
accepted when parsing general nets.

Nets are immutable after construction and safe to share across threads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import TpnSyntaxError, UndeclaredPlaceError

Marking = dict  # place name -> token count (non-negative)


@dataclass
class Transition:
    """A transition keyed by ``uid``; names may repeat (helper transitions)."""

    uid: int
    name: str
    inputs: tuple
    outputs: tuple
    visible: bool = True
    quoted: bool = False


@dataclass
class PetriNet:
    places: list = field(default_factory=list)
    initial_marking: Marking = field(default_factory=dict)
    transitions: list = field(default_factory=list)
    final_markings: list = field(default_factory=list)

    def transition_by_uid(self, uid: int) -> Transition:
        return self.transitions[uid]


def validate_net(net: PetriNet) -> None:
    """Raise if arcs reference undeclared places or uids collide."""
    declared = set(net.places)
    if len(declared) != len(net.places):
        raise ValueError("duplicate place names")
    uids = set()
    for t in net.transitions:
        if t.uid in uids:
            raise ValueError(f"duplicate transition uid {t.uid}")
        uids.add(t.uid)
        for place in list(t.inputs) + list(t.outputs):
            if place not in declared:
                raise UndeclaredPlaceError(
                    f"transition {t.name!r} references undeclared place {place!r}"
                )
    for place, count in net.initial_marking.items():
        if place not in declared:
            raise UndeclaredPlaceError(f"initial marking on undeclared place {place!r}")
        if count < 0:
            raise ValueError("negative token count in initial marking")


def enabled_transitions(net: PetriNet, marking: Marking) -> list:
    """Transitions whose every input place holds a token."""
    return [
        t
        for t in net.transitions
        if all(marking.get(p, 0) >= 1 for p in t.inputs)
    ]


def fire(net: PetriNet, marking: Marking, transition: Transition) -> Marking:
    """Fire ``transition``, returning the successor marking."""
    result = dict(marking)
    for place in transition.inputs:
        if result.get(place, 0) < 1:
            raise ValueError(f"transition {transition.name!r} is not enabled")
        result[place] -= 1
        if result[place] == 0:
            del result[place]
    for place in transition.outputs:
        result[place] = result.get(place, 0) + 1
    return result


def emit_tpn(net: PetriNet) -> str:
    """Serialize a net to TPN text; byte-stable for identical inputs."""
    lines = []
    for place in net.places:
        count = net.initial_marking.get(place, 0)
        if count:
            lines.append(f"place {place} init {count};")
        else:
            lines.append(f"place {place};")
    for t in net.transitions:
        name = f'"{t.name}"' if t.quoted else t.name
        lines.append(f"trans {name}")
        lines.append("  in " + ", ".join(t.inputs) if t.inputs else "  in")
        lines.append(("  out " + ", ".join(t.outputs) if t.outputs else "  out") + ";")
    return "\n".join(lines) + "\n"


_PLACE_RE = re.compile(r"^place\s+(\S+?)(?:\s+init\s+(\d+))?\s*;$")
_TRANS_RE = re.compile(r'^trans\s+(?:"([^"]*)"|(\S+))\s*$')
_ARC_RE = re.compile(r"^(in|out)\b(.*)$")


def parse_tpn(text: str) -> PetriNet:
    """Parse TPN text produced by :func:`emit_tpn` (or the original tool).

    Both quoted and unquoted transition names are accepted, and the quoting
    is remembered so that a parse/emit round trip is byte-identical.
    Visibility and final markings are not part of the format; see
    :func:`shopmine.transform.finalize_net` for deriving them.
    """
    net = PetriNet()
    declared: set = set()
    current: Transition | None = None
    got_in = got_out = False

    def flush():
        nonlocal current, got_in, got_out
        if current is not None:
            net.transitions.append(current)
        current, got_in, got_out = None, False, False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("place"):
            flush()
            match = _PLACE_RE.match(line)
            if not match:
                raise TpnSyntaxError(f"bad place declaration: {raw!r}", lineno)
            name, init = match.group(1), match.group(2)
            if name in declared:
                raise TpnSyntaxError(f"place {name!r} declared twice", lineno)
            declared.add(name)
            net.places.append(name)
            if init is not None and int(init) > 0:
                net.initial_marking[name] = int(init)
            continue
        if line.startswith("trans"):
            flush()
            match = _TRANS_RE.match(line)
            if not match:
                raise TpnSyntaxError(f"bad transition declaration: {raw!r}", lineno)
            quoted_name, bare_name = match.group(1), match.group(2)
            current = Transition(
                uid=len(net.transitions),
                name=quoted_name if quoted_name is not None else bare_name,
                inputs=(),
                outputs=(),
                quoted=quoted_name is not None,
            )
            continue
        match = _ARC_RE.match(line)
        if match:
            if current is None:
                raise TpnSyntaxError(f"arc list outside a transition: {raw!r}", lineno)
            side, rest = match.group(1), match.group(2).strip().rstrip(";").strip()
            places = tuple(p.strip() for p in rest.split(",") if p.strip()) if rest else ()
            for place in places:
                if place not in declared:
                    raise UndeclaredPlaceError(
                        f"line {lineno}: transition {current.name!r} references "
                        f"undeclared place {place!r}"
                    )
            if side == "in":
                if got_in:
                    raise TpnSyntaxError("duplicate in-list for transition", lineno)
                current.inputs = places
                got_in = True
            else:
                if got_out:
                    raise TpnSyntaxError("duplicate out-list for transition", lineno)
                current.outputs = places
                got_out = True
            continue
        raise TpnSyntaxError(f"unrecognized line: {raw!r}", lineno)

    flush()
    validate_net(net)
    return net
