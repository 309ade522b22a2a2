"""Parsing of CPEE-style workflow-template XML into process trees.

Templates are ``<testset>`` documents: the flow lives under the nested
``description/description`` element, service endpoints under ``endpoints``.
Element tags may carry XML namespaces; matching is done on the exact
local name so that e.g. ``parallel`` never swallows ``parallel_branch``.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from .errors import TemplateError
from .tree import (
    Branch,
    Call,
    Choose,
    Loop,
    Manipulate,
    Parallel,
    ParallelBranch,
    ProcessTree,
    Terminate,
    validate_tree,
)

FLOW_KINDS = frozenset(
    ["call", "manipulate", "terminate", "loop", "choose", "parallel"]
)


def clean_label(label: str) -> str:
    """Strip spaces and question marks from a task label.

    This is how labels are folded into Petri-net transition names, so the
    same folding must be applied when matching log events against them.
    """
    return label.replace(" ", "").replace("?", "")


@dataclass
class EndpointMap:
    """Mapping of endpoint names to service URLs."""

    entries: dict = field(default_factory=dict)

    def url(self, name: str) -> str:
        if name not in self.entries:
            raise TemplateError(f"call references undeclared endpoint {name!r}")
        return self.entries[name]


@dataclass
class TemplateDocument:
    """A parsed template: process tree plus its endpoint table."""

    tree: ProcessTree
    endpoints: EndpointMap
    source_path: str = ""


def _local_name(tag: str) -> str:
    """Tag without its ``{namespace}`` prefix."""
    if tag.startswith("{"):
        return tag.split("}", 1)[1]
    return tag


def _find_label_text(element: ET.Element) -> str:
    for sub in element.iter():
        if _local_name(sub.tag) == "label":
            return sub.text or ""
    raise TemplateError(
        f"call {element.attrib.get('id', '?')!r} has no nested label element"
    )


def _require_attr(element: ET.Element, name: str) -> str:
    if name not in element.attrib:
        kind = _local_name(element.tag)
        raise TemplateError(f"{kind} element is missing required attribute {name!r}")
    return element.attrib[name]


def _parse_flow(element: ET.Element):
    kind = _local_name(element.tag)
    if kind == "call":
        return Call(
            id=_require_attr(element, "id"),
            label=_find_label_text(element),
            endpoint=_require_attr(element, "endpoint"),
        )
    if kind == "manipulate":
        return Manipulate(
            id=_require_attr(element, "id"),
            label=_require_attr(element, "label"),
        )
    if kind == "terminate":
        return Terminate()
    if kind == "loop":
        children = [_parse_flow(child) for child in element]
        if not children:
            raise TemplateError("loop element with no children")
        return Loop(children=children)
    if kind == "choose":
        branches = []
        for child in element:
            child_kind = _local_name(child.tag)
            if child_kind not in ("alternative", "otherwise"):
                raise TemplateError(
                    f"unexpected element {child_kind!r} inside choose"
                )
            branches.append(
                Branch(kind=child_kind, children=[_parse_flow(sub) for sub in child])
            )
        if not branches:
            raise TemplateError("choose element with no branches")
        return Choose(branches=branches)
    if kind == "parallel":
        branches = []
        for child in element:
            child_kind = _local_name(child.tag)
            if child_kind != "parallel_branch":
                raise TemplateError(
                    f"unexpected element {child_kind!r} inside parallel"
                )
            branches.append(
                ParallelBranch(children=[_parse_flow(sub) for sub in child])
            )
        if not branches:
            raise TemplateError("parallel element with no branches")
        return Parallel(branches=branches)
    raise TemplateError(f"unknown element kind {kind!r} in process description")


def parse_template(xml: str, source_path: str = "") -> TemplateDocument:
    """Parse template XML into a :class:`TemplateDocument`.

    Requires the nested ``description/description`` flow container and
    resolves every call endpoint against the ``endpoints`` section.
    """
    try:
        root = ET.fromstring(xml)
    except ET.ParseError as exc:
        raise TemplateError(f"malformed XML: {exc}") from exc

    description = None
    endpoints = EndpointMap()
    for child in root:
        name = _local_name(child.tag)
        if name == "description" and description is None:
            inner = list(child)
            if not inner:
                raise TemplateError("description element has no nested description")
            description = inner[0]
        elif name == "endpoints":
            for endpoint in child:
                endpoints.entries[_local_name(endpoint.tag)] = endpoint.text or ""

    if description is None:
        raise TemplateError("template has no description/description element")

    elements = [_parse_flow(child) for child in description]
    tree = ProcessTree(elements=elements)
    validate_tree(tree)

    for node in _iter_calls(tree):
        endpoints.url(node.endpoint)

    return TemplateDocument(tree=tree, endpoints=endpoints, source_path=source_path)


def _iter_calls(tree: ProcessTree):
    from .tree import iter_nodes

    for node in iter_nodes(tree):
        if isinstance(node, Call):
            yield node


def serialize_template(doc: TemplateDocument) -> str:
    """Render a document back to canonical (namespace-free) template XML.

    ``parse_template(serialize_template(doc))`` yields an equal tree, which
    is the losslessness guarantee for the element kinds in scope.
    """
    root = ET.Element("testset")
    outer = ET.SubElement(root, "description")
    inner = ET.SubElement(outer, "description")
    for node in doc.tree.elements:
        inner.append(_flow_to_xml(node))
    endpoints = ET.SubElement(root, "endpoints")
    for name, url in doc.endpoints.entries.items():
        entry = ET.SubElement(endpoints, name)
        entry.text = url
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _flow_to_xml(node) -> ET.Element:
    if isinstance(node, Call):
        element = ET.Element("call", id=node.id, endpoint=node.endpoint)
        parameters = ET.SubElement(element, "parameters")
        label = ET.SubElement(parameters, "label")
        label.text = node.label
        return element
    if isinstance(node, Manipulate):
        return ET.Element("manipulate", id=node.id, label=node.label)
    if isinstance(node, Terminate):
        return ET.Element("terminate")
    if isinstance(node, Loop):
        element = ET.Element("loop")
        for child in node.children:
            element.append(_flow_to_xml(child))
        return element
    if isinstance(node, Choose):
        element = ET.Element("choose")
        for branch in node.branches:
            branch_el = ET.SubElement(element, branch.kind)
            for child in branch.children:
                branch_el.append(_flow_to_xml(child))
        return element
    if isinstance(node, Parallel):
        element = ET.Element("parallel")
        for branch in node.branches:
            branch_el = ET.SubElement(element, "parallel_branch")
            for child in branch.children:
                branch_el.append(_flow_to_xml(child))
        return element
    raise TemplateError(f"cannot serialize node type {type(node).__name__}")
