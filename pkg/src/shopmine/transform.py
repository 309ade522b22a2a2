"""Transformation of process trees into Petri nets.

Rules, applied in document order while threading a single flow place:

* call      -> start/complete transition pair named
               ``<cleanLabel>_<id>_<endpointURL>_start|_complete`` with a
               place in between and one after
* manipulate-> one transition ``<cleanLabel>_<id>`` with a place after
* terminate -> ``x_termination`` leading to a place with no outgoing arcs
* loop      -> ``x_opening_loop`` / ``x_closing_loop`` pair; the closer
               feeds back to the body's first place (do-while: zero
               iterations do not fit the net)
* choose    -> per branch an ``x_alternative`` out of the shared split
               place and an ``x_closing_decision`` into the shared merge
               place; a branch ending in terminate gets no merge helper
* parallel  -> ``x_parallel`` fork, one ``x_parallel_branch`` per branch,
               ``x_closing_parallel`` join

Finalization marks every ``x_*`` transition invisible and derives one
final marking per sink place (the normal sink plus any terminate sinks).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TransformError
from .petri import PetriNet, Transition, validate_net
from .template import TemplateDocument, clean_label
from .tree import Call, Choose, Loop, Manipulate, Parallel, Terminate


@dataclass
class Origin:
    """Where a transition came from: a node id and a phase or helper kind."""

    node_id: str | None
    phase: str


@dataclass
class TransformResult:
    net: PetriNet
    transition_index: dict = field(default_factory=dict)


class _Builder:
    def __init__(self):
        self.net = PetriNet()
        self.index: dict[int, Origin] = {}

    def new_place(self) -> str:
        name = f"p{len(self.net.places)}"
        self.net.places.append(name)
        return name

    def add_transition(
        self,
        name: str,
        inputs,
        outputs,
        origin: Origin,
        quoted: bool = False,
    ) -> Transition:
        t = Transition(
            uid=len(self.net.transitions),
            name=name,
            inputs=tuple(inputs),
            outputs=tuple(outputs),
            quoted=quoted,
        )
        self.net.transitions.append(t)
        self.index[t.uid] = origin
        return t


def transform_to_net(doc: TemplateDocument) -> TransformResult:
    """Build the Petri net for a parsed template.

    The first place carries the single initial token.  Each construct
    consumes exactly one flow place and produces exactly one (or none if
    the flow terminates), so nested constructs compose.
    """
    builder = _Builder()
    start = builder.new_place()
    builder.net.initial_marking = {start: 1}
    _thread(builder, doc, doc.tree.elements, start, context="top")
    validate_net(builder.net)
    return TransformResult(net=builder.net, transition_index=builder.index)


def _thread(builder, doc, nodes, place, context):
    """Thread a sequence of nodes from ``place``; return the exit place.

    Returns ``None`` when the sequence ends the instance (terminate), which
    is only legal at the top level or in a choose branch.
    """
    current = place
    for position, node in enumerate(nodes):
        if current is None:
            raise TransformError("unreachable elements after a terminate")
        current = _transform_node(builder, doc, node, current, context)
    return current


def _transform_node(builder, doc, node, current, context):
    if isinstance(node, Call):
        url = doc.endpoints.url(node.endpoint)
        base = f"{clean_label(node.label)}_{node.id}_{url}"
        middle = builder.new_place()
        builder.add_transition(
            f"{base}_start", [current], [middle], Origin(node.id, "start"), quoted=True
        )
        after = builder.new_place()
        builder.add_transition(
            f"{base}_complete", [middle], [after], Origin(node.id, "complete"), quoted=True
        )
        return after

    if isinstance(node, Manipulate):
        after = builder.new_place()
        builder.add_transition(
            f"{clean_label(node.label)}_{node.id}",
            [current],
            [after],
            Origin(node.id, "single"),
        )
        return after

    if isinstance(node, Terminate):
        sink = builder.new_place()
        builder.add_transition(
            "x_termination", [current], [sink], Origin(None, "termination")
        )
        return None

    if isinstance(node, Loop):
        body_start = builder.new_place()
        builder.add_transition(
            "x_opening_loop", [current], [body_start], Origin(None, "loop_open")
        )
        body_end = _thread(builder, doc, node.children, body_start, context="loop")
        if body_end is None:
            raise TransformError("terminate inside a loop body is not supported")
        builder.add_transition(
            "x_closing_loop", [body_end], [body_start], Origin(None, "loop_close")
        )
        return body_end

    if isinstance(node, Choose):
        split = current
        branch_ends = []
        for branch in node.branches:
            branch_start = builder.new_place()
            builder.add_transition(
                "x_alternative", [split], [branch_start], Origin(None, "choice_branch")
            )
            branch_ends.append(
                _thread(builder, doc, branch.children, branch_start, context="choose")
            )
        surviving = [end for end in branch_ends if end is not None]
        if not surviving:
            return None
        merge = builder.new_place()
        for end in surviving:
            builder.add_transition(
                "x_closing_decision", [end], [merge], Origin(None, "choice_merge")
            )
        return merge

    if isinstance(node, Parallel):
        entries = [builder.new_place() for _ in node.branches]
        builder.add_transition(
            "x_parallel", [current], entries, Origin(None, "parallel_fork")
        )
        ends = []
        for branch, entry in zip(node.branches, entries):
            branch_start = builder.new_place()
            builder.add_transition(
                "x_parallel_branch",
                [entry],
                [branch_start],
                Origin(None, "parallel_branch"),
            )
            end = _thread(builder, doc, branch.children, branch_start, context="parallel")
            if end is None:
                raise TransformError(
                    "terminate inside a parallel branch is not supported"
                )
            ends.append(end)
        join = builder.new_place()
        builder.add_transition(
            "x_closing_parallel", ends, [join], Origin(None, "parallel_join")
        )
        return join

    raise TransformError(f"cannot transform node type {type(node).__name__}")


def finalize_net(result) -> PetriNet:
    """Mark helper transitions invisible and derive final markings.

    Accepts a :class:`TransformResult` or a bare :class:`PetriNet` (e.g.
    parsed from TPN text, where helpers are recognizable by their ``x_``
    prefix).  Final markings put a single token on each sink place: the
    normal end of the main flow plus one marking per terminate sink.
    """
    net = result.net if isinstance(result, TransformResult) else result
    consumed = set()
    for t in net.transitions:
        t.visible = not t.name.startswith("x_")
        consumed.update(t.inputs)
    sinks = [p for p in net.places if p not in consumed]
    if not sinks:
        raise TransformError("net has no sink place (cyclic end)")
    net.final_markings = [{sink: 1} for sink in sinks]
    return net
