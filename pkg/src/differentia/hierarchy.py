"""Genus-differentia label hierarchies: parsing, validation and queries.

A hierarchy is a single-rooted tree of labeled concepts. Each node carries a
word sense (sense id, synset, gloss), a preferred category label, and a
differentia: the text of the property that distinguishes it from its
siblings. The genus of a node is not stored as text; it is the parent node,
and the full definition of any node can be reconstructed by walking the root
path (see :func:`reconstruct_definition`). Only the root stores a free-text
genus term, because its genus lies outside the tree.

Hierarchies are immutable after loading and safe to share across threads.
"""

from __future__ import annotations

import hashlib
import json
import string
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

from .errors import HierarchyFormatError, UnknownNodeError

# Words dropped from the front of a gloss remainder when splitting off the
# differentia ("...instrument that is played by depressing keys").
_GLOSS_CONNECTIVES = frozenset({"that", "which", "is", "played", "by"})

_NEGATION_WORDS = ("no", "without")

_PUNCT_TABLE = str.maketrans("", "", string.punctuation)


@dataclass(frozen=True)
class Sense:
    """One word sense: an opaque unique id, its synonym set and its gloss."""

    sense_id: str
    synset: tuple[str, ...]
    gloss: str


@dataclass(frozen=True)
class HierarchyNode:
    node_id: str
    sense: Sense
    category_label: str
    differentia: str
    parent: str | None  # None only at the root
    visually_checkable: bool
    ordinal: int  # position among siblings, document order


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding. Errors make a hierarchy unusable for campaigns."""

    severity: str  # "error" | "warning"
    code: str
    node_id: str | None
    message: str


@dataclass(frozen=True)
class Hierarchy:
    nodes: dict[str, HierarchyNode]  # insertion order = document order
    root_id: str
    root_genus_term: str
    _children: dict[str, tuple[str, ...]] = field(compare=False, repr=False, default_factory=dict)

    def node(self, node_id: str) -> HierarchyNode:
        try:
            return self.nodes[node_id]
        except KeyError:
            raise UnknownNodeError(f"unknown node id: {node_id!r}") from None

    def __len__(self) -> int:
        return len(self.nodes)

    def __contains__(self, node_id: str) -> bool:
        return node_id in self.nodes


def _bad(code: str, message: str) -> HierarchyFormatError:
    return HierarchyFormatError(message, code=code)


def _require(mapping: dict, key: str, kind: type, where: str) -> Any:
    if key not in mapping:
        raise _bad("invalid-document", f"{where}: missing required field {key!r}")
    value = mapping[key]
    if not isinstance(value, kind):
        raise _bad("invalid-document", f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _parse_sense(entry: dict, where: str) -> Sense:
    sense_id = _require(entry, "sense_id", str, where)
    if not sense_id:
        raise _bad("invalid-document", f"{where}: sense_id must be non-empty")
    synset = _require(entry, "synset", list, where)
    if not synset or not all(isinstance(w, str) and w for w in synset):
        raise _bad("invalid-document", f"{where}: synset must be a non-empty list of lemmas")
    folded = [w.casefold() for w in synset]
    if len(set(folded)) != len(folded):
        raise _bad("invalid-document", f"{where}: synset lemmas must be distinct (case-folded)")
    gloss = _require(entry, "gloss", str, where)
    return Sense(sense_id=sense_id, synset=tuple(synset), gloss=gloss)


def load_hierarchy(source: str | bytes | dict | Path) -> Hierarchy:
    """Parse a hierarchy interchange document into a :class:`Hierarchy`.

    ``source`` may be a parsed document (dict), JSON text/bytes, or a path to
    a JSON file. Node array order defines sibling ordinals.

    Raises :class:`HierarchyFormatError` with code ``syntax-error`` (with
    position), ``invalid-document``, ``duplicate-node-id``,
    ``dangling-parent``, ``multiple-roots`` or ``cycle-detected``.
    """
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise _bad(
                "syntax-error",
                f"hierarchy document is not valid JSON: {exc.msg} at line {exc.lineno} column {exc.colno}",
            ) from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise _bad("invalid-document", "top level must be an object")

    declared_root = _require(doc, "root", str, "document")
    entries = _require(doc, "nodes", list, "document")
    if not entries:
        raise _bad("invalid-document", "document contains no nodes")

    nodes: dict[str, HierarchyNode] = {}
    sibling_counts: dict[str | None, int] = {}
    root_genus_term = ""
    for i, entry in enumerate(entries):
        where = f"nodes[{i}]"
        if not isinstance(entry, dict):
            raise _bad("invalid-document", f"{where}: node entries must be objects")
        node_id = _require(entry, "id", str, where)
        if not node_id:
            raise _bad("invalid-document", f"{where}: id must be non-empty")
        if node_id in nodes:
            raise _bad("duplicate-node-id", f"{where}: duplicate node id {node_id!r}")
        parent = entry.get("parent")
        if parent is not None and not isinstance(parent, str):
            raise _bad("invalid-document", f"{where}: parent must be a node id or null")
        if parent == node_id:
            raise _bad("cycle-detected", f"{where}: node {node_id!r} is its own parent")
        differentia = _require(entry, "differentia", str, where)
        if not differentia.strip():
            raise _bad("invalid-document", f"{where}: differentia must be non-empty")
        category_label = _require(entry, "category_label", str, where)
        visually_checkable = _require(entry, "visually_checkable", bool, where)
        sense = _parse_sense(entry, where)
        if parent is None:
            term = entry.get("root_genus_term")
            if not isinstance(term, str) or not term.strip():
                raise _bad("invalid-document", f"{where}: root node must carry a root_genus_term")
            root_genus_term = term
        ordinal = sibling_counts.get(parent, 0)
        sibling_counts[parent] = ordinal + 1
        nodes[node_id] = HierarchyNode(
            node_id=node_id,
            sense=sense,
            category_label=category_label,
            differentia=differentia,
            parent=parent,
            visually_checkable=visually_checkable,
            ordinal=ordinal,
        )

    roots = [n.node_id for n in nodes.values() if n.parent is None]
    if len(roots) > 1:
        raise _bad("multiple-roots", f"document declares multiple roots: {', '.join(roots)}")
    for node in nodes.values():
        if node.parent is not None and node.parent not in nodes:
            raise _bad(
                "dangling-parent",
                f"node {node.node_id!r} names parent {node.parent!r} which does not exist",
            )
    if not roots:
        # Every parent reference resolves, so some chain must loop.
        raise _bad("cycle-detected", "no root node: parent links form a cycle")
    root_id = roots[0]
    if declared_root != root_id:
        raise _bad(
            "invalid-document",
            f"declared root {declared_root!r} does not match parentless node {root_id!r}",
        )

    # Walk every parent chain; a chain longer than |nodes| means a cycle.
    limit = len(nodes)
    for node in nodes.values():
        cursor, steps = node.parent, 0
        while cursor is not None:
            steps += 1
            if steps > limit:
                raise _bad("cycle-detected", f"parent chain of {node.node_id!r} does not reach the root")
            cursor = nodes[cursor].parent

    children: dict[str, list[str]] = {nid: [] for nid in nodes}
    for node in nodes.values():
        if node.parent is not None:
            children[node.parent].append(node.node_id)
    index = {
        nid: tuple(sorted(kids, key=lambda k: nodes[k].ordinal)) for nid, kids in children.items()
    }
    return Hierarchy(nodes=nodes, root_id=root_id, root_genus_term=root_genus_term, _children=index)


def dump_hierarchy(h: Hierarchy) -> dict:
    """Serialize back to the interchange document shape (document order kept)."""
    entries = []
    for node in h.nodes.values():
        entry: dict[str, Any] = {
            "id": node.node_id,
            "parent": node.parent,
            "sense_id": node.sense.sense_id,
            "synset": list(node.sense.synset),
            "category_label": node.category_label,
            "gloss": node.sense.gloss,
            "differentia": node.differentia,
            "visually_checkable": node.visually_checkable,
        }
        if node.parent is None:
            entry["root_genus_term"] = h.root_genus_term
        entries.append(entry)
    return {"root": h.root_id, "nodes": entries}


def fingerprint(h: Hierarchy) -> str:
    """Content hash of the hierarchy, used as its frozen version id."""
    canonical = json.dumps(dump_hierarchy(h), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def children(h: Hierarchy, node_id: str) -> list[HierarchyNode]:
    """Children of ``node_id`` sorted by ordinal; empty at leaves."""
    h.node(node_id)
    return [h.nodes[k] for k in h._children.get(node_id, ())]


def root_path(h: Hierarchy, node_id: str) -> list[str]:
    """Node ids from the root down to ``node_id`` inclusive."""
    path = []
    cursor: str | None = h.node(node_id).node_id
    while cursor is not None:
        path.append(cursor)
        cursor = h.nodes[cursor].parent
    path.reverse()
    return path


def depth(h: Hierarchy, node_id: str) -> int:
    """Root is at depth 0."""
    return len(root_path(h, node_id)) - 1


def reconstruct_definition(h: Hierarchy, node_id: str) -> list[str]:
    """Root genus term followed by the differentiae along the root path.

    Concatenating the result reads as the recursive genus-differentia
    definition of the node, e.g. ["Device", "with Sound Mechanism",
    "with Taut Strings"] for a stringed instrument.
    """
    return [h.root_genus_term] + [h.nodes[nid].differentia for nid in root_path(h, node_id)]


def relation(h: Hierarchy, a: str, b: str) -> str:
    """Tree relation of ``a`` to ``b``: equal, ancestor, descendant or unrelated.

    "ancestor" means ``a`` is a strict ancestor of ``b``.
    """
    path_a = root_path(h, a)
    path_b = root_path(h, b)
    if a == b:
        return "equal"
    if len(path_a) < len(path_b) and path_b[len(path_a) - 1] == a:
        return "ancestor"
    if len(path_b) < len(path_a) and path_a[len(path_b) - 1] == b:
        return "descendant"
    return "unrelated"


def normalize_differentia(text: str) -> str:
    """Lowercase, strip punctuation and collapse whitespace.

    Differentia uniqueness is a semantic requirement; this lexical
    normalization is the testable proxy used by :func:`validate`.
    """
    return " ".join(text.translate(_PUNCT_TABLE).casefold().split())


def _negation_tokens(norm: str) -> list[str]:
    tokens = norm.split()
    if tokens and tokens[0] == "with":
        tokens = tokens[1:]
    return tokens


def is_negation_pair(differentia_a: str, differentia_b: str) -> bool:
    """True when one differentia is the negative form of the other.

    Checks, after normalization and dropping an optional leading "with",
    whether one side starts with "no"/"without" and the remainder equals the
    other side. Such a sibling pair logically empties the parent: everything
    under the parent falls into one of the two.
    """
    ta = _negation_tokens(normalize_differentia(differentia_a))
    tb = _negation_tokens(normalize_differentia(differentia_b))
    for neg, pos in ((ta, tb), (tb, ta)):
        if neg and neg[0] in _NEGATION_WORDS and neg[1:] == pos:
            return True
    return False


def validate(h: Hierarchy) -> list[Diagnostic]:
    """Check authoring-level rules and return diagnostics.

    Errors (hierarchy unusable for campaigns):
      * sibling-differentia-collision: two siblings share a normalized
        differentia, so answering questions cannot tell them apart.
      * duplicate-sense-id: two nodes claim the same word sense.

    Warnings:
      * not-visually-checkable: the node's differentia cannot be decided by
        looking at the image.
      * parent-emptying-differentia: a sibling pair phrased as property vs.
        negated property, which leaves nothing classified at the parent.
    """
    diagnostics: list[Diagnostic] = []

    seen_senses: dict[str, str] = {}
    for node in h.nodes.values():
        sid = node.sense.sense_id
        if sid in seen_senses:
            diagnostics.append(
                Diagnostic(
                    severity="error",
                    code="duplicate-sense-id",
                    node_id=node.node_id,
                    message=f"sense id {sid!r} already used by node {seen_senses[sid]!r}",
                )
            )
        else:
            seen_senses[sid] = node.node_id

    for parent_id in h.nodes:
        kids = children(h, parent_id)
        seen_diff: dict[str, str] = {}
        for kid in kids:
            norm = normalize_differentia(kid.differentia)
            if norm in seen_diff:
                diagnostics.append(
                    Diagnostic(
                        severity="error",
                        code="sibling-differentia-collision",
                        node_id=kid.node_id,
                        message=(
                            f"differentia {kid.differentia!r} collides with sibling "
                            f"{seen_diff[norm]!r} under {parent_id!r}"
                        ),
                    )
                )
            else:
                seen_diff[norm] = kid.node_id
        for i, first in enumerate(kids):
            for second in kids[i + 1 :]:
                if is_negation_pair(first.differentia, second.differentia):
                    diagnostics.append(
                        Diagnostic(
                            severity="warning",
                            code="parent-emptying-differentia",
                            node_id=first.node_id,
                            message=(
                                f"differentia {first.differentia!r} and sibling "
                                f"{second.node_id}'s {second.differentia!r} are a negation pair; "
                                f"together they empty parent {parent_id!r}"
                            ),
                        )
                    )

    for node in h.nodes.values():
        if not node.visually_checkable:
            diagnostics.append(
                Diagnostic(
                    severity="warning",
                    code="not-visually-checkable",
                    node_id=node.node_id,
                    message=f"differentia {node.differentia!r} is not recognizable visually",
                )
            )

    order = {nid: i for i, nid in enumerate(h.nodes)}
    diagnostics.sort(key=lambda d: (0 if d.severity == "error" else 1, order.get(d.node_id, -1), d.code))
    return diagnostics


def has_errors(diagnostics: Iterable[Diagnostic]) -> bool:
    return any(d.severity == "error" for d in diagnostics)


def split_gloss(gloss: str, genus_label: str) -> tuple[str, str] | None:
    """Best-effort split of a gloss into (genus, differentia).

    Finds the first case-insensitive occurrence of ``genus_label`` in
    ``gloss``; the differentia is the remainder with leading connective words
    stripped. Returns None when the genus label does not occur. An authoring
    aid only; callers fall back to manual entry.
    """
    if not gloss or not genus_label:
        raise ValueError("gloss and genus_label must be non-empty")
    at = gloss.casefold().find(genus_label.casefold())
    if at < 0:
        return None
    genus = gloss[at : at + len(genus_label)]
    rest = gloss[at + len(genus_label) :]
    words = rest.replace(",", " ").replace(";", " ").split()
    while words and words[0].casefold() in _GLOSS_CONNECTIVES:
        words.pop(0)
    return genus, " ".join(words)
