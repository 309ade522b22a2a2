"""Alignment-based conformance checking of XES traces against Petri nets.

Events are mapped to transitions either by task label or by endpoint URL,
each combined with the start/complete phase.  Alignments are computed by
A* over the implicit synchronous product with unit model/log move costs,
zero-cost synchronous and invisible moves, and completion required in one
of the net's final markings (improper completion is never accepted).  Any
admissible heuristic yields the same optimal cost; here the heuristic is
the count of remaining events that no transition can explain.

Transition keys are recovered from the generated transition names
(``<label>_<id>_<url>_start|_complete`` for calls, ``<label>_<id>`` for
script tasks), which assumes labels and ids themselves contain no
underscores, as holds for the templates this toolkit targets.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ModelInfeasibleError, ShopmineError
from .petri import PetriNet
from .template import clean_label

_FLT_TOL = 1e-12

SYNC = "synchronous"
MODEL = "model"
LOG = "log"
INVISIBLE_MODEL = "invisible-model"

_CPEE_PHASE = {"activity/calling": "start", "activity/done": "complete"}


@dataclass
class MappingSpec:
    """How events are matched to transitions: by ``label`` or ``endpoint``."""

    kind: str = "label"

    def __post_init__(self):
        if self.kind not in ("label", "endpoint"):
            raise ValueError(f"unknown mapping kind {self.kind!r}")


def event_key(event, spec: MappingSpec) -> tuple:
    """The (identity, phase) pair an event carries under a mapping spec."""
    lifecycle = event.get("lifecycle:transition")
    cpee_lifecycle = event.get("cpee:lifecycle:transition")
    if spec.kind == "label":
        phase = lifecycle if lifecycle in ("start", "complete") else _CPEE_PHASE.get(cpee_lifecycle, lifecycle)
        return (clean_label(event.get("concept:name")), phase)
    phase = _CPEE_PHASE.get(cpee_lifecycle)
    if phase is None:
        phase = lifecycle if lifecycle in ("start", "complete") else cpee_lifecycle
    return (event.get("cpee:endpoint"), phase)


def transition_keys(transition, spec: MappingSpec) -> list:
    """All (identity, phase) pairs a transition can explain; [] for helpers."""
    if not transition.visible or transition.name.startswith("x_"):
        return []
    name = transition.name
    if transition.quoted:  # call-derived: <label>_<id>_<url>_<phase>
        for phase in ("start", "complete"):
            suffix = f"_{phase}"
            if name.endswith(suffix):
                base = name[: -len(suffix)]
                parts = base.split("_", 2)
                if spec.kind == "label":
                    return [(parts[0], phase)]
                url = parts[2] if len(parts) == 3 else ""
                return [(url, phase)]
        return []
    # script-task transition: <label>_<id>; its single log event may carry
    # either phase, so both are accepted
    label = name.rsplit("_", 1)[0] if "_" in name else name
    identity = label if spec.kind == "label" else ""
    return [(identity, "start"), (identity, "complete")]


@dataclass
class MappedEvent:
    event_index: int
    key: tuple
    candidates: frozenset


def map_trace(trace, spec: MappingSpec, net: PetriNet) -> list:
    """Map each event of an XES trace to the transitions matching its key.

    Unmapped events (empty candidate set) are retained; the alignment can
    only explain them with log moves.
    """
    by_key: dict[tuple, set] = {}
    for transition in net.transitions:
        for key in transition_keys(transition, spec):
            by_key.setdefault(key, set()).add(transition.uid)
    mapped = []
    for index, event in enumerate(trace.events):
        key = event_key(event, spec)
        mapped.append(
            MappedEvent(index, key, frozenset(by_key.get(key, frozenset())))
        )
    return mapped


@dataclass
class Move:
    kind: str  # synchronous | model | log | invisible-model
    transition_uid: int | None = None
    event_index: int | None = None


@dataclass
class Alignment:
    moves: list
    raw_cost: int


class AlignmentEngine:
    """Reusable A* alignment search over one finalized, immutable net."""

    def __init__(self, net: PetriNet, model_cost: int = 1, log_cost: int = 1,
                 state_limit: int = 1_000_000):
        if not net.final_markings:
            raise ValueError("net has no final markings; apply finalize_net first")
        self.net = net
        self.model_cost = model_cost
        self.log_cost = log_cost
        self.state_limit = state_limit
        self._place_index = {place: i for i, place in enumerate(net.places)}
        size = len(net.places)
        init = [0] * size
        for place, count in net.initial_marking.items():
            init[self._place_index[place]] = count
        self._initial = tuple(init)
        finals = set()
        for marking in net.final_markings:
            vec = [0] * size
            for place, count in marking.items():
                vec[self._place_index[place]] = count
            finals.add(tuple(vec))
        self._finals = finals
        self._compiled = [
            (
                t.uid,
                tuple(dict.fromkeys(self._place_index[p] for p in t.inputs)),
                tuple(self._place_index[p] for p in t.outputs),
                0 if not t.visible else model_cost,
                t.visible,
            )
            for t in net.transitions
        ]
        self._empty_cost: int | None = None

    def empty_completion_cost(self) -> int:
        """Cheapest all-model-move completion (the empty-trace alignment cost)."""
        if self._empty_cost is None:
            self._empty_cost = self.align([]).raw_cost
        return self._empty_cost

    def align(self, mapped) -> Alignment:
        n = len(mapped)
        suffix = [0] * (n + 1)
        for i in range(n - 1, -1, -1):
            suffix[i] = suffix[i + 1] + (0 if mapped[i].candidates else 1)

        start = (self._initial, 0)
        best = {start: 0}
        parents: dict = {}
        heap = [(suffix[0] * self.log_cost, 0, 0, start)]
        ticket = 1
        expanded = 0
        while heap:
            _, _, g, state = heapq.heappop(heap)
            if g > best.get(state, g):
                continue
            marking, pos = state
            if pos == n and marking in self._finals:
                return Alignment(moves=self._walk_back(parents, state), raw_cost=g)
            expanded += 1
            if expanded > self.state_limit:
                raise ShopmineError(
                    f"alignment search exceeded {self.state_limit} states"
                )

            def push(next_state, cost, move):
                nonlocal ticket
                next_g = g + cost
                if next_g < best.get(next_state, next_g + 1):
                    best[next_state] = next_g
                    parents[next_state] = (state, move)
                    f = next_g + suffix[next_state[1]] * self.log_cost
                    heapq.heappush(heap, (f, ticket, next_g, next_state))
                    ticket += 1

            if pos < n:
                push(
                    (marking, pos + 1),
                    self.log_cost,
                    Move(LOG, event_index=mapped[pos].event_index),
                )
            for uid, inputs, outputs, cost, visible in self._compiled:
                if any(marking[i] < 1 for i in inputs):
                    continue
                fired = list(marking)
                for i in inputs:
                    fired[i] -= 1
                for i in outputs:
                    fired[i] += 1
                fired = tuple(fired)
                push(
                    (fired, pos),
                    cost,
                    Move(MODEL if visible else INVISIBLE_MODEL, transition_uid=uid),
                )
                if pos < n and uid in mapped[pos].candidates:
                    push(
                        (fired, pos + 1),
                        0,
                        Move(SYNC, transition_uid=uid, event_index=mapped[pos].event_index),
                    )
        raise ModelInfeasibleError(
            "no final marking is reachable for this trace/net combination"
        )

    def _walk_back(self, parents, state):
        moves = []
        while state in parents:
            state, move = parents[state]
            moves.append(move)
        moves.reverse()
        return moves


def align(net: PetriNet, mapped, model_cost: int = 1, log_cost: int = 1) -> Alignment:
    """One-shot optimal alignment; see :class:`AlignmentEngine`."""
    return AlignmentEngine(net, model_cost, log_cost).align(mapped)


@dataclass
class FitnessTriple:
    move_model: float
    move_log: float
    trace: float


def fitness(alignment: Alignment, net: PetriNet, mapped,
            empty_completion_cost: int | None = None,
            model_cost: int = 1, log_cost: int = 1) -> FitnessTriple:
    """The three replay fitness values for one alignment.

    move-model = synchronous / all visible model-side moves,
    move-log = synchronous / all log-side moves, and trace fitness is one
    minus raw cost over the worst case (empty-trace completion plus one
    log move per event).  Invisible moves never enter any count, and an
    empty denominator yields 1.
    """
    sync = sum(1 for m in alignment.moves if m.kind == SYNC)
    visible_model = sum(1 for m in alignment.moves if m.kind == MODEL)
    log_moves = sum(1 for m in alignment.moves if m.kind == LOG)
    move_model = sync / (sync + visible_model) if sync + visible_model else 1.0
    move_log = sync / (sync + log_moves) if sync + log_moves else 1.0
    if empty_completion_cost is None:
        empty_completion_cost = AlignmentEngine(
            net, model_cost, log_cost
        ).empty_completion_cost()
    max_cost = empty_completion_cost + log_cost * len(mapped)
    trace = 1.0 - alignment.raw_cost / max_cost if max_cost > 0 else 1.0
    return FitnessTriple(move_model, move_log, trace)


@dataclass
class FitnessRow:
    group_id: str
    multiplicity: int
    cells: list  # FitnessTriple | None per template (None = model-infeasible)
    max_flags: dict = field(default_factory=dict)  # metric -> set of template indices


@dataclass
class FitnessTable:
    template_names: list
    rows: list = field(default_factory=list)


_METRICS = ("move_model", "move_log", "trace")


def _argmax_templates(cells, metric) -> set:
    values = [
        (index, getattr(cell, metric)) for index, cell in enumerate(cells) if cell is not None
    ]
    if not values:
        return set()
    top = max(v for _, v in values)
    return {index for index, v in values if v >= top - _FLT_TOL}


def build_fitness_table(xes_doc, templates, spec: MappingSpec,
                        template_names=None, jobs: int = 1) -> FitnessTable:
    """Fitness of every distinct mapped trace against every template.

    Traces with identical event-key sequences collapse into one row with a
    multiplicity.  A template whose final marking is unreachable for a
    trace contributes a missing cell rather than failing the table.
    """
    if template_names is None:
        template_names = [f"template{i}" for i in range(len(templates))]

    groups: dict[tuple, dict] = {}
    for trace in xes_doc.traces:
        keys = tuple(event_key(event, spec) for event in trace.events)
        entry = groups.setdefault(
            keys, {"trace": trace, "id": trace.get("concept:name"), "count": 0}
        )
        entry["count"] += 1

    engines = [AlignmentEngine(net) for net in templates]
    empty_costs: list[int | None] = []
    for engine in engines:
        try:
            empty_costs.append(engine.empty_completion_cost())
        except ModelInfeasibleError:
            empty_costs.append(None)

    group_list = list(groups.values())

    def cell(group_index: int, template_index: int):
        if empty_costs[template_index] is None:
            return None
        trace = group_list[group_index]["trace"]
        mapped = map_trace(trace, spec, templates[template_index])
        try:
            alignment = engines[template_index].align(mapped)
        except ModelInfeasibleError:
            return None
        return fitness(
            alignment,
            templates[template_index],
            mapped,
            empty_completion_cost=empty_costs[template_index],
        )

    pairs = [(g, t) for g in range(len(group_list)) for t in range(len(templates))]
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda p: cell(*p), pairs))
    else:
        results = [cell(*pair) for pair in pairs]
    cells_by_group: dict[int, list] = {g: [None] * len(templates) for g in range(len(group_list))}
    for (g, t), value in zip(pairs, results):
        cells_by_group[g][t] = value

    table = FitnessTable(template_names=list(template_names))
    for index, group in enumerate(group_list):
        cells = cells_by_group[index]
        row = FitnessRow(
            group_id=group["id"],
            multiplicity=group["count"],
            cells=cells,
            max_flags={metric: _argmax_templates(cells, metric) for metric in _METRICS},
        )
        table.rows.append(row)
    return table


@dataclass
class Assignment:
    template_index: int
    conflict: bool
    tied: bool


def assign_template(row: FitnessRow) -> Assignment:
    """Pick the template a trace group belongs to.

    Decision is based on move-log and trace fitness jointly; when their
    argmax sets are disjoint the row is flagged as a conflict and the
    trace-fitness winner is reported.  Ties break toward the lower
    template index and are reported.
    """
    if all(cell is None for cell in row.cells):
        raise ShopmineError(f"row {row.group_id!r} has no computable fitness cells")
    move_log_best = _argmax_templates(row.cells, "move_log")
    trace_best = _argmax_templates(row.cells, "trace")
    joint = move_log_best & trace_best
    if joint:
        return Assignment(min(joint), conflict=False, tied=len(joint) > 1)
    return Assignment(min(trace_best), conflict=True, tied=len(trace_best) > 1)


def fitness_table_csv(table: FitnessTable) -> str:
    """Plot-ready CSV: one row per trace group, argmax flags, conflict bit."""
    import csv
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = ["group", "multiplicity"]
    for name in table.template_names:
        header += [f"{name}_move_model", f"{name}_move_log", f"{name}_trace"]
    header += ["argmax_move_model", "argmax_move_log", "argmax_trace", "conflict"]
    writer.writerow(header)
    for row in table.rows:
        record = [row.group_id, row.multiplicity]
        for cell in row.cells:
            if cell is None:
                record += ["", "", ""]
            else:
                record += [
                    f"{cell.move_model:.6f}",
                    f"{cell.move_log:.6f}",
                    f"{cell.trace:.6f}",
                ]
        for metric in _METRICS:
            record.append(
                "|".join(table.template_names[i] for i in sorted(row.max_flags[metric]))
            )
        try:
            record.append(str(assign_template(row).conflict).lower())
        except ShopmineError:
            record.append("")
        writer.writerow(record)
    return buffer.getvalue()
