"""Core data structures and editing operations for causal models.

A model document holds typed factor nodes and signed causal links; each
link owns an ordered list of evidence items (assumptions, references,
experiential input). Every successful mutation bumps the document's
revision counter by exactly one, and :func:`validate` checks the full
set of structural invariants.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum

from . import ids
from .errors import ConflictError, NotFoundError, ValidationError

SCHEMA_VERSION = "dreams/1"


class ModelKind(str, Enum):
    REFERENCE_MODEL = "reference_model"
    IMPACT_MODEL = "impact_model"


class NodeKind(str, Enum):
    INFLUENCING_FACTOR = "influencing_factor"
    SUCCESS_FACTOR = "success_factor"
    KEY_FACTOR = "key_factor"
    ASSUMPTION_NODE = "assumption_node"


class Polarity(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


class EvidenceKind(str, Enum):
    ASSUMPTION = "assumption"
    REFERENCE = "reference"
    EXPERIENCE = "experience"


@dataclass
class FactorNode:
    id: str
    kind: NodeKind
    label: str
    notes: str | None = None
    tags: list[str] = field(default_factory=list)


@dataclass
class EvidenceItem:
    id: str
    kind: EvidenceKind
    text: str
    locator: str | None = None
    created_at: datetime = field(default_factory=ids.utc_now)


@dataclass
class CausalLink:
    id: str
    source: str
    target: str
    polarity: Polarity
    evidence: list[EvidenceItem] = field(default_factory=list)
    notes: str | None = None


@dataclass
class ModelDocument:
    id: str
    kind: ModelKind
    title: str
    nodes: list[FactorNode] = field(default_factory=list)
    links: list[CausalLink] = field(default_factory=list)
    revision: int = 0
    schema_version: str = SCHEMA_VERSION

    def node(self, node_id: str) -> FactorNode:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise NotFoundError(f"no node with id {node_id!r}", offending_id=node_id)

    def link(self, link_id: str) -> CausalLink:
        for l in self.links:
            if l.id == link_id:
                return l
        raise NotFoundError(f"no link with id {link_id!r}", offending_id=link_id)


@dataclass(frozen=True)
class Violation:
    rule: str
    offending_id: str | None
    message: str

    def __str__(self) -> str:
        return f"{self.rule}: {self.message}"


def _require_label(text: str, what: str) -> str:
    cleaned = text.strip()
    if not cleaned:
        raise ValidationError(f"{what} must be non-empty")
    return cleaned


def create_model(kind: ModelKind, title: str) -> ModelDocument:
    """Create an empty document at revision 0."""
    return ModelDocument(id=ids.new_id(), kind=ModelKind(kind), title=_require_label(title, "title"))


def add_node(
    model: ModelDocument,
    kind: NodeKind,
    label: str,
    notes: str | None = None,
    tags: list[str] | None = None,
) -> str:
    label = _require_label(label, "node label")
    node = FactorNode(id=ids.new_id(), kind=NodeKind(kind), label=label, notes=notes, tags=list(tags or []))
    model.nodes.append(node)
    model.revision += 1
    return node.id


def add_link(model: ModelDocument, source_id: str, target_id: str, polarity: Polarity) -> str:
    model.node(source_id)
    model.node(target_id)
    if source_id == target_id:
        raise ValidationError("self-loops are not allowed", offending_id=source_id)
    for l in model.links:
        if l.source == source_id and l.target == target_id:
            raise ConflictError(
                f"a link {source_id!r} -> {target_id!r} already exists", offending_id=l.id
            )
    link = CausalLink(id=ids.new_id(), source=source_id, target=target_id, polarity=Polarity(polarity))
    model.links.append(link)
    model.revision += 1
    return link.id


def attach_evidence(
    model: ModelDocument,
    link_id: str,
    kind: EvidenceKind,
    text: str,
    locator: str | None = None,
) -> str:
    link = model.link(link_id)
    text = _require_label(text, "evidence text")
    item = EvidenceItem(id=ids.new_id(), kind=EvidenceKind(kind), text=text, locator=locator)
    link.evidence.append(item)
    model.revision += 1
    return item.id


def detach_evidence(model: ModelDocument, link_id: str, evidence_id: str) -> None:
    link = model.link(link_id)
    for i, item in enumerate(link.evidence):
        if item.id == evidence_id:
            del link.evidence[i]
            model.revision += 1
            return
    raise NotFoundError(f"no evidence with id {evidence_id!r} on link {link_id!r}", offending_id=evidence_id)


def remove_node(model: ModelDocument, node_id: str) -> list[str]:
    """Remove a node and cascade-remove its incident links. Returns removed link ids."""
    node = model.node(node_id)
    removed = [l.id for l in model.links if node_id in (l.source, l.target)]
    model.links = [l for l in model.links if l.id not in removed]
    model.nodes.remove(node)
    model.revision += 1
    return removed


def remove_link(model: ModelDocument, link_id: str) -> None:
    link = model.link(link_id)
    model.links.remove(link)
    model.revision += 1


def update_node(
    model: ModelDocument,
    node_id: str,
    label: str | None = None,
    kind: NodeKind | None = None,
    notes: str | None = None,
    tags: list[str] | None = None,
) -> None:
    node = model.node(node_id)
    if label is not None:
        node.label = _require_label(label, "node label")
    if kind is not None:
        node.kind = NodeKind(kind)
    if notes is not None:
        node.notes = notes or None
    if tags is not None:
        node.tags = list(tags)
    model.revision += 1


def update_link_polarity(model: ModelDocument, link_id: str, polarity: Polarity) -> None:
    model.link(link_id).polarity = Polarity(polarity)
    model.revision += 1


def update_link_notes(model: ModelDocument, link_id: str, notes: str | None) -> None:
    model.link(link_id).notes = notes or None
    model.revision += 1


def validate(model: ModelDocument) -> list[Violation]:
    """Check every document invariant; an empty list means the model is valid."""
    violations: list[Violation] = []

    def bad(rule: str, offending_id: str | None, message: str) -> None:
        violations.append(Violation(rule, offending_id, message))

    if model.schema_version != SCHEMA_VERSION:
        bad("schema_version", model.id, f"expected {SCHEMA_VERSION!r}, found {model.schema_version!r}")
    if model.revision < 0:
        bad("revision", model.id, f"revision must be non-negative, found {model.revision}")
    if not model.title.strip():
        bad("title", model.id, "title must be non-empty")

    seen: set[str] = set()
    every_id = [model.id]
    every_id += [n.id for n in model.nodes]
    for l in model.links:
        every_id.append(l.id)
        every_id += [e.id for e in l.evidence]
    for item_id in every_id:
        if item_id in seen:
            bad("unique_id", item_id, f"id {item_id!r} occurs more than once")
        seen.add(item_id)

    node_ids = {n.id for n in model.nodes}
    for n in model.nodes:
        if not n.label.strip():
            bad("node_label", n.id, f"node {n.id!r} has an empty label")

    pairs: set[tuple[str, str]] = set()
    for l in model.links:
        for endpoint in (l.source, l.target):
            if endpoint not in node_ids:
                bad("referential_integrity", l.id, f"link {l.id!r} references missing node {endpoint!r}")
        if l.source == l.target:
            bad("self_loop", l.id, f"link {l.id!r} is a self-loop on {l.source!r}")
        if (l.source, l.target) in pairs:
            bad("duplicate_pair", l.id, f"more than one link from {l.source!r} to {l.target!r}")
        pairs.add((l.source, l.target))
        for e in l.evidence:
            if not e.text.strip():
                bad("evidence_text", e.id, f"evidence {e.id!r} has empty text")

    return violations
