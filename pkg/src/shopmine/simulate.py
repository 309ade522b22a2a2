"""Tree interpreter: generates execution traces that conform to a template.

The interpreter walks the process tree directly (it never looks at the
Petri net), so simulated traces double as an independent check that the
net transformation preserves the template's language: every simulated
trace must replay on the transformed net at zero alignment cost.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import TreeError
from .template import TemplateDocument
from .tree import Call, Choose, Loop, Manipulate, Parallel, Terminate
from .xes import XesAttribute, XesEvent, XesTrace


@dataclass
class SimEvent:
    label: str
    node_id: str
    endpoint_url: str
    lifecycle: str  # "start" | "complete"
    cpee_lifecycle: str  # "activity/calling" | "activity/done"


class _Terminated(Exception):
    """Raised to unwind the walk when a terminate node fires."""


def simulate_trace(doc: TemplateDocument, rng, max_loop_repeats: int = 3) -> list:
    """Produce one conforming event sequence for the template.

    ``rng`` is a :class:`random.Random`-like source (``random``/``choice``
    methods).  Loops run once plus a random number of repeats, choices pick
    a uniform branch, and parallel branches are randomly interleaved.
    """
    events: list[SimEvent] = []
    try:
        events.extend(_run_sequence(doc, doc.tree.elements, rng, max_loop_repeats))
    except _Terminated as stop:
        events.extend(stop.args[0])
    return events


def _run_sequence(doc, nodes, rng, max_repeats):
    events: list[SimEvent] = []
    for node in nodes:
        try:
            events.extend(_run_node(doc, node, rng, max_repeats))
        except _Terminated as stop:
            raise _Terminated(events + stop.args[0])
    return events


def _run_node(doc, node, rng, max_repeats):
    if isinstance(node, Call):
        url = doc.endpoints.url(node.endpoint)
        return [
            SimEvent(node.label, node.id, url, "start", "activity/calling"),
            SimEvent(node.label, node.id, url, "complete", "activity/done"),
        ]
    if isinstance(node, Manipulate):
        return [SimEvent(node.label, node.id, "", "complete", "activity/done")]
    if isinstance(node, Terminate):
        raise _Terminated([])
    if isinstance(node, Loop):
        events = list(_run_sequence(doc, node.children, rng, max_repeats))
        repeats = 0
        while repeats < max_repeats and rng.random() < 0.5:
            events.extend(_run_sequence(doc, node.children, rng, max_repeats))
            repeats += 1
        return events
    if isinstance(node, Choose):
        branch = node.branches[rng.randrange(len(node.branches))]
        return _run_sequence(doc, branch.children, rng, max_repeats)
    if isinstance(node, Parallel):
        queues = []
        for branch in node.branches:
            try:
                queues.append(list(_run_sequence(doc, branch.children, rng, max_repeats)))
            except _Terminated:
                raise TreeError("terminate inside a parallel branch is not supported")
        return _interleave(queues, rng)
    raise TreeError(f"cannot simulate node type {type(node).__name__}")


def _interleave(queues, rng):
    """Uniform random interleaving that preserves each queue's order."""
    merged = []
    positions = [0] * len(queues)
    remaining = sum(len(q) for q in queues)
    while remaining:
        pick = rng.randrange(remaining)
        for index, queue in enumerate(queues):
            left = len(queue) - positions[index]
            if pick < left:
                merged.append(queue[positions[index]])
                positions[index] += 1
                break
            pick -= left
        remaining -= 1
    return merged


def events_to_xes_trace(events, name: str = "sim") -> XesTrace:
    """Wrap simulated events as an XES trace usable by the conformance layer."""
    trace = XesTrace(
        attributes=[
            XesAttribute("string", "concept:name", name),
            XesAttribute("string", "cpee:name", name),
            XesAttribute("string", "cpee:uuid", ""),
        ]
    )
    for position, event in enumerate(events):
        stamp = f"1990-02-17T{9 + position // 3600:02d}:{(position // 60) % 60:02d}:{position % 60:02d}.000+01:00"
        trace.events.append(
            XesEvent(
                attributes=[
                    XesAttribute("string", "concept:name", event.label),
                    XesAttribute("string", "cpee:endpoint", event.endpoint_url),
                    XesAttribute("string", "id:id", event.node_id),
                    XesAttribute("string", "lifecycle:transition", event.lifecycle),
                    XesAttribute("string", "cpee:lifecycle:transition", event.cpee_lifecycle),
                    XesAttribute("date", "time:timestamp", stamp),
                ]
            )
        )
    return trace
