"""Process-tree representation of workflow templates.

A template is an ordered sequence of nodes; container nodes (loop, choose,
parallel) nest further sequences.  Instances are treated as immutable after
construction and may be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import TreeError


@dataclass
class Call:
    """A task executed against a named service endpoint.

    Appears in logs as two events (start and complete).
    """

    id: str
    label: str
    endpoint: str


@dataclass
class Manipulate:
    """A script task; appears in logs as a single event."""

    id: str
    label: str


@dataclass
class Terminate:
    """Ends the process instance immediately."""


@dataclass
class Loop:
    """Do-while block: children run at least once."""

    children: list = field(default_factory=list)


@dataclass
class Branch:
    """One arm of a Choose; ``kind`` is ``alternative`` or ``otherwise``."""

    kind: str
    children: list = field(default_factory=list)


@dataclass
class Choose:
    """Exclusive choice over branches."""

    branches: list = field(default_factory=list)


@dataclass
class ParallelBranch:
    """One concurrent arm of a Parallel block."""

    children: list = field(default_factory=list)


@dataclass
class Parallel:
    """Concurrent execution of all branches, joined at the end."""

    branches: list = field(default_factory=list)


Node = Call | Manipulate | Terminate | Loop | Choose | Parallel


@dataclass
class ProcessTree:
    """Ordered top-level elements of a template (the implicit root sequence)."""

    elements: list = field(default_factory=list)


def iter_nodes(tree: ProcessTree):
    """Yield every node in document order, including branch containers."""

    def walk(nodes):
        for node in nodes:
            yield node
            if isinstance(node, Loop):
                yield from walk(node.children)
            elif isinstance(node, Choose):
                for branch in node.branches:
                    yield branch
                    yield from walk(branch.children)
            elif isinstance(node, Parallel):
                for branch in node.branches:
                    yield branch
                    yield from walk(branch.children)

    yield from walk(tree.elements)


def validate_tree(tree: ProcessTree) -> None:
    """Check structural invariants, raising :class:`TreeError` on violation.

    Enforced: unique Call/Manipulate ids, at most one ``otherwise`` per
    Choose, Parallel children are all ParallelBranch nodes, non-empty loops
    and chooses, and branch containers appearing only under their parents.
    """
    seen_ids: set[str] = set()
    for node in iter_nodes(tree):
        if isinstance(node, (Call, Manipulate)):
            if not node.id:
                raise TreeError(f"node with label {node.label!r} has an empty id")
            if node.id in seen_ids:
                raise TreeError(f"duplicate node id {node.id!r}")
            seen_ids.add(node.id)
        elif isinstance(node, Loop):
            if not node.children:
                raise TreeError("loop with no children")
        elif isinstance(node, Choose):
            if not node.branches:
                raise TreeError("choose with no branches")
            otherwise = [b for b in node.branches if isinstance(b, Branch) and b.kind == "otherwise"]
            if len(otherwise) > 1:
                raise TreeError("choose with more than one otherwise branch")
            for branch in node.branches:
                if not isinstance(branch, Branch):
                    raise TreeError(f"choose child {type(branch).__name__} is not a Branch")
                if branch.kind not in ("alternative", "otherwise"):
                    raise TreeError(f"unknown branch kind {branch.kind!r}")
        elif isinstance(node, Parallel):
            if not node.branches:
                raise TreeError("parallel with no branches")
            for branch in node.branches:
                if not isinstance(branch, ParallelBranch):
                    raise TreeError(
                        f"parallel child {type(branch).__name__} is not a ParallelBranch"
                    )
        elif isinstance(node, (Branch, ParallelBranch, Terminate)):
            pass
        else:
            raise TreeError(f"unknown node type {type(node).__name__}")

    def check_free(nodes):
        for node in nodes:
            if isinstance(node, (Branch, ParallelBranch)):
                raise TreeError(f"{type(node).__name__} outside its container")
            if isinstance(node, Loop):
                check_free(node.children)
            elif isinstance(node, Choose):
                for branch in node.branches:
                    check_free(branch.children)
            elif isinstance(node, Parallel):
                for branch in node.branches:
                    check_free(branch.children)

    check_free(tree.elements)


def count_kinds(tree: ProcessTree) -> dict:
    """Count nodes per kind name; used for transformation bookkeeping."""
    counts: dict[str, int] = {}
    for node in iter_nodes(tree):
        name = type(node).__name__
        counts[name] = counts.get(name, 0) + 1
    return counts
