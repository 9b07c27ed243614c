"""Token index over model content and filtered prefix queries.

Indexes node labels, notes, and tags, link notes, and evidence text and
locators. Tokens are split on non-alphanumeric characters and case-folded;
a query hit requires every query token to prefix-match some token of the
item, and all set filters to pass. Scores sum one field weight per query
token (the best field that token matched), so elements outrank their
annotations: label 3.0, evidence text 2.0, tag 1.5, everything else 1.0.
"""

from __future__ import annotations

import re
from bisect import bisect_left
from dataclasses import dataclass, field

from .errors import StaleIndexError
from .model import EvidenceKind, ModelDocument, NodeKind, Polarity

FIELD_WEIGHTS = {
    "label": 3.0,
    "evidence_text": 2.0,
    "tag": 1.5,
    "notes": 1.0,
    "link_notes": 1.0,
    "locator": 1.0,
}

_PRIMARY_FIELD = {"node": "label", "link": "link_notes", "evidence": "evidence_text"}

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[tuple[str, int, int]]:
    """Case-folded tokens with their (start, end) offsets in the original text."""
    return [(m.group(0).casefold(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


@dataclass(frozen=True)
class SearchQuery:
    text: str = ""
    kind_filter: NodeKind | None = None
    polarity_filter: Polarity | None = None
    evidence_filter: EvidenceKind | None = None
    limit: int = 20

    def __post_init__(self) -> None:
        if self.limit < 1:
            raise ValueError("limit must be at least 1")


@dataclass(frozen=True)
class Snippet:
    text: str
    spans: tuple[tuple[int, int], ...]

    def to_dict(self) -> dict:
        return {"text": self.text, "spans": [[a, b] for a, b in self.spans]}


@dataclass(frozen=True)
class SearchHit:
    target: str
    target_type: str  # node | link | evidence
    owner_path: tuple[str, ...]
    matched_field: str
    score: float
    snippet: Snippet

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "target_type": self.target_type,
            "owner_path": list(self.owner_path),
            "matched_field": self.matched_field,
            "score": self.score,
            "snippet": self.snippet.to_dict(),
        }


@dataclass
class _Item:
    target: str
    target_type: str
    owner_path: tuple[str, ...]
    node_kind: NodeKind | None = None
    polarity: Polarity | None = None
    evidence_kind: EvidenceKind | None = None
    # field name -> source texts (tags contribute several)
    fields: dict[str, list[str]] = field(default_factory=dict)

    def add_field(self, name: str, text: str | None) -> None:
        if text:
            self.fields.setdefault(name, []).append(text)


@dataclass
class SearchIndex:
    model_id: str
    revision: int
    items: list[_Item]
    tokens: list[str]  # sorted unique tokens
    postings: dict[str, dict[int, set[str]]]  # token -> item index -> fields


def build_index(model: ModelDocument) -> SearchIndex:
    """Index every searchable text in the model, keyed to its owning item."""
    items: list[_Item] = []

    for n in model.nodes:
        item = _Item(n.id, "node", (model.id, n.id), node_kind=n.kind)
        item.add_field("label", n.label)
        item.add_field("notes", n.notes)
        for t in n.tags:
            item.add_field("tag", t)
        items.append(item)

    for l in model.links:
        link_item = _Item(l.id, "link", (model.id, l.id), polarity=l.polarity)
        link_item.add_field("link_notes", l.notes)
        items.append(link_item)
        for e in l.evidence:
            ev = _Item(e.id, "evidence", (model.id, l.id, e.id), evidence_kind=e.kind)
            ev.add_field("evidence_text", e.text)
            ev.add_field("locator", e.locator)
            items.append(ev)

    postings: dict[str, dict[int, set[str]]] = {}
    for idx, item in enumerate(items):
        for fname, texts in item.fields.items():
            for text in texts:
                for token, _, _ in tokenize(text):
                    postings.setdefault(token, {}).setdefault(idx, set()).add(fname)

    return SearchIndex(
        model_id=model.id,
        revision=model.revision,
        items=items,
        tokens=sorted(postings),
        postings=postings,
    )


def _prefix_matches(index: SearchIndex, prefix: str) -> dict[int, set[str]]:
    """Union of postings over all indexed tokens starting with the prefix."""
    merged: dict[int, set[str]] = {}
    i = bisect_left(index.tokens, prefix)
    while i < len(index.tokens) and index.tokens[i].startswith(prefix):
        for idx, fields in index.postings[index.tokens[i]].items():
            merged.setdefault(idx, set()).update(fields)
        i += 1
    return merged


def _passes_filters(item: _Item, query: SearchQuery) -> bool:
    if query.kind_filter is not None and item.node_kind != query.kind_filter:
        return False
    if query.polarity_filter is not None and item.polarity != query.polarity_filter:
        return False
    if query.evidence_filter is not None and item.evidence_kind != query.evidence_filter:
        return False
    return True


def _best_field(fields: set[str]) -> str:
    return max(fields, key=lambda f: (FIELD_WEIGHTS[f], f))


def _make_snippet(item: _Item, fname: str, query_tokens: list[str]) -> Snippet:
    texts = item.fields.get(fname) or [""]
    for text in texts:
        spans = []
        for qt in query_tokens:
            for token, start, _ in tokenize(text):
                if token.startswith(qt):
                    spans.append((start, start + len(qt)))
                    break
        if spans or not query_tokens:
            return Snippet(text=text, spans=tuple(sorted(set(spans))))
    return Snippet(text=texts[0], spans=())


def query(index: SearchIndex, model: ModelDocument, q: SearchQuery) -> list[SearchHit]:
    """Ranked hits for a query; requires an index built from this model revision."""
    if index.model_id != model.id or index.revision != model.revision:
        raise StaleIndexError(
            f"index is for {index.model_id!r}@{index.revision}, "
            f"model is {model.id!r}@{model.revision}"
        )

    query_tokens = [t for t, _, _ in tokenize(q.text)]

    if query_tokens:
        per_token = [_prefix_matches(index, qt) for qt in query_tokens]
        candidates = set(per_token[0])
        for matches in per_token[1:]:
            candidates &= set(matches)
    else:
        per_token = []
        candidates = set(range(len(index.items)))

    hits: list[SearchHit] = []
    for idx in candidates:
        item = index.items[idx]
        if not _passes_filters(item, q):
            continue
        if query_tokens:
            score = 0.0
            all_fields: set[str] = set()
            for matches in per_token:
                fields = matches[idx]
                score += max(FIELD_WEIGHTS[f] for f in fields)
                all_fields |= fields
            matched_field = _best_field(all_fields)
        else:
            score = 1.0
            matched_field = _PRIMARY_FIELD[item.target_type]
        hits.append(
            SearchHit(
                target=item.target,
                target_type=item.target_type,
                owner_path=item.owner_path,
                matched_field=matched_field,
                score=score,
                snippet=_make_snippet(item, matched_field, query_tokens),
            )
        )

    hits.sort(key=lambda h: (-h.score, h.target))
    return hits[: q.limit]
