"""XES event-log documents: building from parsed YAML traces, XML codec.

The header layout is fixed: four standard extensions, two global trace
attributes, six global event attributes, and six classifiers (including
"CPEE Endpoint", which keys events by endpoint plus engine lifecycle).
Only events whose engine lifecycle is ``activity/calling`` or
``activity/done`` enter the document; they represent task start and end.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import LogFormatError

XES_LIFECYCLES = ("activity/calling", "activity/done")

DEFAULT_TIMESTAMP = "1990-02-17T09:45:00.000+01:00"

STANDARD_EXTENSION_URIS = {
    "time": "http://www.xes-standard.org/time.xesext",
    "concept": "http://www.xes-standard.org/concept.xesext",
    "organisational": "http://www.xes-standard.org/org.xesext",
    "lifecycle": "http://www.xes-standard.org/lifecycle.xesext",
}


@dataclass
class XesAttribute:
    type: str  # "string" or "date"
    key: str
    value: str


@dataclass
class XesExtension:
    name: str
    prefix: str
    uri: str


@dataclass
class XesClassifier:
    name: str
    keys: str  # space-separated attribute keys


@dataclass
class XesEvent:
    attributes: list = field(default_factory=list)

    def get(self, key: str, default: str = "") -> str:
        for attribute in self.attributes:
            if attribute.key == key:
                return attribute.value
        return default


@dataclass
class XesTrace:
    attributes: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def get(self, key: str, default: str = "") -> str:
        for attribute in self.attributes:
            if attribute.key == key:
                return attribute.value
        return default


@dataclass
class XesDocument:
    extensions: list = field(default_factory=list)
    global_trace_attributes: list = field(default_factory=list)
    global_event_attributes: list = field(default_factory=list)
    classifiers: list = field(default_factory=list)
    traces: list = field(default_factory=list)


def _standard_header(header: dict | None) -> XesDocument:
    """Header populated from the first log document, with fixed fallbacks.

    The global event timestamp default is pinned rather than read from the
    log, and the endpoint global is sourced from ``concept:endpoint``.
    """
    header = header or {}
    extension_uris = header.get("extension") or {}
    global_trace = (header.get("global") or {}).get("trace") or {}
    global_event = (header.get("global") or {}).get("event") or {}

    doc = XesDocument()
    doc.extensions = [
        XesExtension("Time", "time", extension_uris.get("time", STANDARD_EXTENSION_URIS["time"])),
        XesExtension(
            "Concept", "concept", extension_uris.get("concept", STANDARD_EXTENSION_URIS["concept"])
        ),
        XesExtension(
            "Organizational",
            "org",
            extension_uris.get("organisational", STANDARD_EXTENSION_URIS["organisational"]),
        ),
        XesExtension(
            "Lifecycle",
            "lifecycle",
            extension_uris.get("lifecycle", STANDARD_EXTENSION_URIS["lifecycle"]),
        ),
    ]
    doc.global_trace_attributes = [
        XesAttribute("string", "concept:name", str(global_trace.get("concept:name", ""))),
        XesAttribute("string", "cpee:name", str(global_trace.get("cpee:name", ""))),
    ]
    doc.global_event_attributes = [
        XesAttribute("string", "concept:name", str(global_event.get("concept:name", ""))),
        XesAttribute("string", "cpee:endpoint", str(global_event.get("concept:endpoint", ""))),
        XesAttribute("string", "id:id", str(global_event.get("id:id", ""))),
        XesAttribute(
            "string", "lifecycle:transition", str(global_event.get("lifecycle:transition", ""))
        ),
        XesAttribute(
            "string",
            "cpee:lifecycle:transition",
            str(global_event.get("cpee:lifecycle:transition", "")),
        ),
        XesAttribute("date", "time:timestamp", DEFAULT_TIMESTAMP),
    ]
    doc.classifiers = [
        XesClassifier("Event ID Transition Classifier", "id:id lifecycle:transition"),
        XesClassifier("MXML Legacy Classifier", "concept:name lifecycle:transition"),
        XesClassifier("Event Name", "concept:name"),
        XesClassifier("Event ID", "id:id"),
        XesClassifier("CPEE Classifier", "concept:name cpee:lifecycle:transition"),
        XesClassifier("CPEE Endpoint", "cpee:endpoint cpee:lifecycle:transition"),
    ]
    return doc


def build_xes(traces) -> XesDocument:
    """Assemble an XES document from parsed trace records.

    One XES trace per input trace, in input order; only start/end events
    (engine lifecycle ``activity/calling``/``activity/done``) are kept.
    """
    header = None
    for record in traces:
        if getattr(record, "header", None):
            header = record.header
            break
    doc = _standard_header(header)
    for record in traces:
        trace = XesTrace(
            attributes=[
                XesAttribute("string", "concept:name", record.concept_name),
                XesAttribute("string", "cpee:name", record.cpee_name),
                XesAttribute("string", "cpee:uuid", record.uuid),
            ]
        )
        for event in record.events:
            if event.cpee_lifecycle not in XES_LIFECYCLES:
                continue
            trace.events.append(
                XesEvent(
                    attributes=[
                        XesAttribute("string", "concept:name", event.concept_name),
                        XesAttribute("string", "cpee:endpoint", event.endpoint),
                        XesAttribute("string", "id:id", event.id),
                        XesAttribute("string", "lifecycle:transition", event.lifecycle),
                        XesAttribute(
                            "string", "cpee:lifecycle:transition", event.cpee_lifecycle
                        ),
                        XesAttribute("date", "time:timestamp", event.timestamp),
                    ]
                )
            )
        doc.traces.append(trace)
    return doc


def _attribute_element(attribute: XesAttribute) -> ET.Element:
    return ET.Element(attribute.type, key=attribute.key, value=attribute.value)


def serialize_xes(doc: XesDocument) -> str:
    """Render the document as XES XML (UTF-8 text, deterministic bytes)."""
    root = ET.Element(
        "log",
        {"xes.version": "1.0", "xes.features": "nested-attributes", "xmlns": "http://www.xes-standard.org/"},
    )
    for extension in doc.extensions:
        ET.SubElement(
            root, "extension", name=extension.name, prefix=extension.prefix, uri=extension.uri
        )
    global_trace = ET.SubElement(root, "global", scope="trace")
    for attribute in doc.global_trace_attributes:
        global_trace.append(_attribute_element(attribute))
    global_event = ET.SubElement(root, "global", scope="event")
    for attribute in doc.global_event_attributes:
        global_event.append(_attribute_element(attribute))
    for classifier in doc.classifiers:
        ET.SubElement(root, "classifier", name=classifier.name, keys=classifier.keys)
    for trace in doc.traces:
        trace_el = ET.SubElement(root, "trace")
        for attribute in trace.attributes:
            trace_el.append(_attribute_element(attribute))
        for event in trace.events:
            event_el = ET.SubElement(trace_el, "event")
            for attribute in event.attributes:
                event_el.append(_attribute_element(attribute))
    ET.indent(root)
    return '<?xml version="1.0" encoding="UTF-8"?>\n' + ET.tostring(root, encoding="unicode") + "\n"


def _local(tag: str) -> str:
    return tag.split("}", 1)[1] if tag.startswith("{") else tag


def _parse_attribute(element: ET.Element) -> XesAttribute:
    return XesAttribute(
        type=_local(element.tag),
        key=element.attrib.get("key", ""),
        value=element.attrib.get("value", ""),
    )


def parse_xes(text: str) -> XesDocument:
    """Parse XES XML back into a document (inverse of :func:`serialize_xes`)."""
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        raise LogFormatError(f"malformed XES XML: {exc}") from exc
    if _local(root.tag) != "log":
        raise LogFormatError(f"expected <log> root, found <{_local(root.tag)}>")
    doc = XesDocument()
    for child in root:
        kind = _local(child.tag)
        if kind == "extension":
            doc.extensions.append(
                XesExtension(
                    child.attrib.get("name", ""),
                    child.attrib.get("prefix", ""),
                    child.attrib.get("uri", ""),
                )
            )
        elif kind == "global":
            target = (
                doc.global_trace_attributes
                if child.attrib.get("scope") == "trace"
                else doc.global_event_attributes
            )
            target.extend(_parse_attribute(sub) for sub in child)
        elif kind == "classifier":
            doc.classifiers.append(
                XesClassifier(child.attrib.get("name", ""), child.attrib.get("keys", ""))
            )
        elif kind == "trace":
            trace = XesTrace()
            for sub in child:
                if _local(sub.tag) == "event":
                    trace.events.append(
                        XesEvent(attributes=[_parse_attribute(a) for a in sub])
                    )
                else:
                    trace.attributes.append(_parse_attribute(sub))
            doc.traces.append(trace)
    return doc
