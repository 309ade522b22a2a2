"""Parsing of workflow-engine execution logs (multi-document YAML).

Each log file holds one ``log`` document (trace attributes and header
defaults) plus a stream of ``event`` documents.  From these we extract
machining sensor rows (star-delimited CSV, one file per trace) and
parent/child links between process instances spawned as subprocesses.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import LogFormatError

log = logging.getLogger(__name__)

MACHINING_CSV_HEADER = (
    "Id",
    "source",
    "name",
    "description",
    "path",
    "value",
    "timestamp",
    "StatusCode",
    "ServerTimestamp",
    "VariantType",
    "ClientHandle",
)


@dataclass
class EventRecord:
    concept_name: str
    endpoint: str
    id: str
    lifecycle: str
    cpee_lifecycle: str
    timestamp: str
    payload: object = None  # raw 'list' subtree when present


@dataclass
class TraceRecord:
    concept_name: str
    cpee_name: str
    uuid: str
    events: list = field(default_factory=list)
    header: dict | None = None  # raw 'log' document body (extension/global defaults)


def read_path_list(path) -> list:
    """Read a text file of log paths, one per line, whitespace-stripped."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [line.strip() for line in lines if line.strip()]


def parse_yaml_trace(stream) -> TraceRecord:
    """Parse one multi-document YAML log into a :class:`TraceRecord`.

    ``stream`` may be text or a file object.  Raises
    :class:`LogFormatError` when the ``log`` document is missing or the
    YAML cannot be parsed.
    """
    try:
        documents = list(yaml.safe_load_all(stream))
    except yaml.YAMLError as exc:
        raise LogFormatError(f"YAML syntax error: {exc}") from exc

    record: TraceRecord | None = None
    events: list[EventRecord] = []
    for document in documents:
        if not isinstance(document, dict):
            continue
        if "log" in document:
            body = document["log"] or {}
            trace_attrs = (body.get("trace") or {}) if isinstance(body, dict) else {}
            attrs = {
                "concept_name": str(trace_attrs.get("concept:name", "")),
                "cpee_name": str(trace_attrs.get("cpee:name", "")),
                "uuid": str(trace_attrs.get("cpee:uuid", "")),
            }
            if record is None:
                record = TraceRecord(**attrs, header=body if isinstance(body, dict) else None)
            else:  # later log documents override the trace attributes
                record.concept_name = attrs["concept_name"]
                record.cpee_name = attrs["cpee_name"]
                record.uuid = attrs["uuid"]
        elif "event" in document:
            body = document["event"] or {}
            if not isinstance(body, dict):
                raise LogFormatError("event document is not a mapping")
            cpee_lifecycle = body.get("cpee:lifecycle:transition")
            if not cpee_lifecycle:
                raise LogFormatError("event without cpee:lifecycle:transition")
            events.append(
                EventRecord(
                    concept_name=str(body.get("concept:name", "")),
                    endpoint=str(body.get("concept:endpoint", "") or ""),
                    id=str(body.get("id:id", "")),
                    lifecycle=str(body.get("lifecycle:transition", "")),
                    cpee_lifecycle=str(cpee_lifecycle),
                    timestamp=str(body.get("time:timestamp", "")),
                    payload=body.get("list"),
                )
            )

    if record is None:
        raise LogFormatError("log stream contains no 'log' document")
    if not record.concept_name:
        raise LogFormatError("log document has no trace concept:name")
    record.events = events
    return record


def parse_yaml_file(path) -> TraceRecord:
    with open(path, "r", encoding="utf-8") as handle:
        record = parse_yaml_trace(handle)
    return record


@dataclass
class MachiningRow:
    """One sensor data item; all fields are text, ``value`` end-trimmed."""

    Id: str = ""
    source: str = ""
    name: str = ""
    description: str = ""
    path: str = ""
    value: str = ""
    timestamp: str = ""
    StatusCode: str = ""
    ServerTimestamp: str = ""
    VariantType: str = ""
    ClientHandle: str = ""

    def as_list(self) -> list:
        return [getattr(self, column) for column in MACHINING_CSV_HEADER]


def extract_machining_rows(trace: TraceRecord) -> list:
    """Collect sensor rows from Fetch tasks in their receiving phase.

    One row per data item under each ``data_receiver`` entry; a qualifying
    event without a payload list contributes a single row carrying only
    the event timestamp.
    """
    rows: list[MachiningRow] = []
    for event in trace.events:
        if event.concept_name != "Fetch" or event.cpee_lifecycle != "activity/receiving":
            continue
        if event.payload is None:
            rows.append(MachiningRow(timestamp=event.timestamp))
            continue
        payload = event.payload if isinstance(event.payload, dict) else {}
        for receiver in payload.get("data_receiver") or []:
            if not isinstance(receiver, dict):
                continue
            for data in receiver.get("data") or []:
                if not isinstance(data, dict):
                    continue
                meta = data.get("meta") or {}
                rows.append(
                    MachiningRow(
                        Id=str(data.get("ID", "")),
                        source=str(data.get("source", "")),
                        name=str(data.get("name", "")),
                        description=str(data.get("description", "")),
                        path=str(data.get("path", "")),
                        value=str(data.get("value", "")).rstrip() if "value" in data else "",
                        timestamp=str(data.get("timestamp", "")),
                        StatusCode=str(meta.get("StatusCode", "")),
                        ServerTimestamp=str(meta.get("ServerTimestamp", "")),
                        VariantType=str(meta.get("VariantType", "")),
                        ClientHandle=str(meta.get("ClientHandle", "")),
                    )
                )
    return rows


def machining_csv_text(rows) -> str:
    """Star-delimited CSV text; rows containing ``*`` are dropped with a warning."""
    lines = ["*".join(MACHINING_CSV_HEADER)]
    for row in rows:
        fields = row.as_list()
        if any("*" in value for value in fields):
            log.warning("dropping machining row with '*' in a value: %r", fields)
            continue
        lines.append("*".join(fields))
    return "\n".join(lines) + "\n"


def write_machining_csv(rows, trace_name: str, outdir) -> Path:
    """Write ``log<trace_name>.csv`` under ``outdir``; returns the path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"log{trace_name}.csv"
    path.write_text(machining_csv_text(rows), encoding="utf-8")
    return path


@dataclass
class InstanceNode:
    trace: TraceRecord
    children: list = field(default_factory=list)


@dataclass
class InstanceForest:
    roots: list = field(default_factory=list)
    by_name: dict = field(default_factory=dict)


def _iter_scalars(value):
    if isinstance(value, dict):
        for sub in value.values():
            yield from _iter_scalars(sub)
    elif isinstance(value, (list, tuple)):
        for sub in value:
            yield from _iter_scalars(sub)
    elif value is not None:
        yield str(value)


def _iter_link_values(value, link_keys):
    """Scalars under any dict key named in ``link_keys``."""
    if isinstance(value, dict):
        for key, sub in value.items():
            if key in link_keys:
                yield from _iter_scalars(sub)
            else:
                yield from _iter_link_values(sub, link_keys)
    elif isinstance(value, (list, tuple)):
        for sub in value:
            yield from _iter_link_values(sub, link_keys)


def link_subprocesses(traces, link_keys=None) -> InstanceForest:
    """Build the spawn forest over the given traces.

    A trace becomes a child of the first trace whose event payloads
    reference its concept:name or uuid (restricted to the dict keys in
    ``link_keys`` when given).  Children keep spawn order; a doubly
    referenced child stays with its first parent; configured references
    that match no known trace are reported and ignored.
    """
    nodes = {}
    identity = {}
    for trace in traces:
        node = InstanceNode(trace=trace)
        nodes[trace.concept_name] = node
        identity[trace.concept_name] = trace.concept_name
        if trace.uuid:
            identity[trace.uuid] = trace.concept_name

    parent_of: dict[str, str] = {}
    for trace in traces:
        own = {trace.concept_name, trace.uuid}
        for event in trace.events:
            if event.payload is None:
                continue
            if link_keys is None:
                values = _iter_scalars(event.payload)
            else:
                values = _iter_link_values(event.payload, set(link_keys))
            for value in values:
                if link_keys is not None and value not in identity:
                    log.warning(
                        "trace %s references unknown subprocess %r; treated as a root",
                        trace.concept_name,
                        value,
                    )
                    continue
                child = identity.get(value)
                if child is None or child in own:
                    continue
                if child in parent_of:
                    if parent_of[child] != trace.concept_name:
                        log.warning(
                            "subprocess %s already linked to %s; ignoring link from %s",
                            child,
                            parent_of[child],
                            trace.concept_name,
                        )
                    continue
                parent_of[child] = trace.concept_name
                nodes[trace.concept_name].children.append(nodes[child])

    forest = InstanceForest(by_name=nodes)
    forest.roots = [
        nodes[trace.concept_name]
        for trace in traces
        if trace.concept_name not in parent_of
    ]
    return forest


def labels_last_spawned(forest: InstanceForest) -> dict:
    """Per child trace: True iff it is the last subprocess its parent spawned."""
    labels: dict[str, bool] = {}

    def visit(node: InstanceNode):
        for position, child in enumerate(node.children):
            labels[child.trace.concept_name] = position == len(node.children) - 1
            visit(child)

    for root in forest.roots:
        visit(root)
    return labels
