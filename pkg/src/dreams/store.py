"""Document persistence and interchange: canonical JSON, DOT, and SVG.

The on-disk format is UTF-8 JSON with sorted keys, two-space indentation,
arrays in insertion order, and a trailing newline, so identical documents
always serialize to identical bytes. Parsing is strict: unknown fields
anywhere in the file are rejected, and every model invariant is
re-checked on load.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Mapping

from .errors import ParseError, UnsupportedVersionError, ValidationError
from .layout import LayeredLayout
from .model import (
    SCHEMA_VERSION,
    CausalLink,
    EvidenceItem,
    EvidenceKind,
    FactorNode,
    ModelDocument,
    ModelKind,
    NodeKind,
    Polarity,
    validate,
)

FILE_EXTENSION = ".dreams.json"

_TIMESTAMP_RE = re.compile(r"^\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(Z|\+00:00)$")


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).replace(microsecond=0).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_timestamp(value: str, path: str) -> datetime:
    if not isinstance(value, str) or not _TIMESTAMP_RE.match(value):
        raise ValidationError(f"{path}: expected an ISO-8601 UTC timestamp, got {value!r}")
    return datetime.strptime(value[:19], "%Y-%m-%dT%H:%M:%S").replace(tzinfo=timezone.utc)


def document_to_dict(model: ModelDocument) -> dict[str, Any]:
    return {
        "schema_version": model.schema_version,
        "model": {
            "id": model.id,
            "kind": model.kind.value,
            "title": model.title,
            "revision": model.revision,
        },
        "nodes": [
            {
                "id": n.id,
                "kind": n.kind.value,
                "label": n.label,
                "notes": n.notes,
                "tags": list(n.tags),
            }
            for n in model.nodes
        ],
        "links": [
            {
                "id": l.id,
                "source": l.source,
                "target": l.target,
                "polarity": l.polarity.value,
                "notes": l.notes,
                "evidence": [
                    {
                        "id": e.id,
                        "kind": e.kind.value,
                        "text": e.text,
                        "locator": e.locator,
                        "created_at": format_timestamp(e.created_at),
                    }
                    for e in l.evidence
                ],
            }
            for l in model.links
        ],
    }


def serialize(model: ModelDocument) -> str:
    """Canonical document text; refuses to write an invalid model."""
    violations = validate(model)
    if violations:
        raise ValidationError(
            "cannot serialize an invalid model: " + "; ".join(str(v) for v in violations),
            offending_id=violations[0].offending_id,
        )
    return json.dumps(document_to_dict(model), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _expect_object(
    value: object, path: str, required: set[str], optional: set[str] = frozenset()
) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ValidationError(f"{path}: expected an object, got {type(value).__name__}")
    unknown = set(value) - required - optional
    if unknown:
        raise ValidationError(f"{path}: unknown fields {sorted(unknown)!r}")
    missing = required - set(value)
    if missing:
        raise ValidationError(f"{path}: missing fields {sorted(missing)!r}")
    return value


def _expect_str(obj: Mapping[str, Any], key: str, path: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise ValidationError(f"{path}.{key}: expected a string, got {type(value).__name__}")
    return value


def _expect_opt_str(obj: Mapping[str, Any], key: str, path: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValidationError(f"{path}.{key}: expected a string or null")
    return value


def _parse_enum(enum_cls: type, value: object, path: str):
    try:
        return enum_cls(value)
    except ValueError:
        allowed = [m.value for m in enum_cls]
        raise ValidationError(f"{path}: {value!r} is not one of {allowed}") from None


def deserialize(text: str, check: bool = True) -> ModelDocument:
    """Parse document text, re-checking every model invariant.

    check=False skips the final invariant pass so callers (the validate
    command) can collect violations themselves instead of failing fast.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from None

    top = _expect_object(data, "document", {"schema_version", "model", "nodes", "links"})
    version = top["schema_version"]
    if version != SCHEMA_VERSION:
        raise UnsupportedVersionError(f"unsupported schema_version {version!r}, expected {SCHEMA_VERSION!r}")

    meta = _expect_object(top["model"], "model", {"id", "kind", "title", "revision"})
    revision = meta["revision"]
    if not isinstance(revision, int) or isinstance(revision, bool):
        raise ValidationError("model.revision: expected an integer")

    nodes: list[FactorNode] = []
    if not isinstance(top["nodes"], list):
        raise ValidationError("nodes: expected an array")
    for i, raw in enumerate(top["nodes"]):
        path = f"nodes[{i}]"
        obj = _expect_object(raw, path, {"id", "kind", "label"}, {"notes", "tags"})
        tags = obj.get("tags", [])
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise ValidationError(f"{path}.tags: expected an array of strings")
        nodes.append(
            FactorNode(
                id=_expect_str(obj, "id", path),
                kind=_parse_enum(NodeKind, obj["kind"], f"{path}.kind"),
                label=_expect_str(obj, "label", path),
                notes=_expect_opt_str(obj, "notes", path),
                tags=list(tags),
            )
        )

    links: list[CausalLink] = []
    if not isinstance(top["links"], list):
        raise ValidationError("links: expected an array")
    for i, raw in enumerate(top["links"]):
        path = f"links[{i}]"
        obj = _expect_object(raw, path, {"id", "source", "target", "polarity"}, {"notes", "evidence"})
        evidence: list[EvidenceItem] = []
        for j, raw_e in enumerate(obj.get("evidence", [])):
            e_path = f"{path}.evidence[{j}]"
            e = _expect_object(raw_e, e_path, {"id", "kind", "text", "created_at"}, {"locator"})
            evidence.append(
                EvidenceItem(
                    id=_expect_str(e, "id", e_path),
                    kind=_parse_enum(EvidenceKind, e["kind"], f"{e_path}.kind"),
                    text=_expect_str(e, "text", e_path),
                    locator=_expect_opt_str(e, "locator", e_path),
                    created_at=parse_timestamp(e["created_at"], f"{e_path}.created_at"),
                )
            )
        links.append(
            CausalLink(
                id=_expect_str(obj, "id", path),
                source=_expect_str(obj, "source", path),
                target=_expect_str(obj, "target", path),
                polarity=_parse_enum(Polarity, obj["polarity"], f"{path}.polarity"),
                evidence=evidence,
                notes=_expect_opt_str(obj, "notes", path),
            )
        )

    model = ModelDocument(
        id=_expect_str(meta, "id", "model"),
        kind=_parse_enum(ModelKind, meta["kind"], "model.kind"),
        title=_expect_str(meta, "title", "model"),
        nodes=nodes,
        links=links,
        revision=revision,
    )
    if not check:
        return model
    violations = validate(model)
    if violations:
        raise ValidationError(
            "document violates model invariants: " + "; ".join(str(v) for v in violations),
            offending_id=violations[0].offending_id,
        )
    return model


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write via a same-directory temp file and rename, so readers never see a torn file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def save_document(model: ModelDocument, path: str | Path) -> None:
    atomic_write_text(path, serialize(model))


def load_document(path: str | Path) -> ModelDocument:
    return deserialize(Path(path).read_text(encoding="utf-8"))


# --- DOT export ---------------------------------------------------------

_DOT_NODE_ATTRS = {
    NodeKind.INFLUENCING_FACTOR: 'shape=box, fillcolor="#cfe2f3"',
    NodeKind.SUCCESS_FACTOR: 'shape=ellipse, fillcolor="#d9ead3"',
    NodeKind.KEY_FACTOR: 'shape=box, peripheries=2, fillcolor="#ffe599"',
    NodeKind.ASSUMPTION_NODE: 'shape=note, fillcolor="#fff2cc"',
}

POSITIVE_GLYPH = "+"
NEGATIVE_GLYPH = "\u2212"


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def export_dot(model: ModelDocument) -> str:
    """Graph description in DOT: kinds as shapes/fills, polarity as label and line style."""
    lines = [f"digraph {_dot_quote(model.title)} {{"]
    lines.append("  rankdir=TB;")
    lines.append("  node [style=filled];")
    for n in model.nodes:
        lines.append(f"  {_dot_quote(n.id)} [label={_dot_quote(n.label)}, {_DOT_NODE_ATTRS[n.kind]}];")
    for l in model.links:
        glyph = POSITIVE_GLYPH if l.polarity is Polarity.POSITIVE else NEGATIVE_GLYPH
        style = "solid" if l.polarity is Polarity.POSITIVE else "dashed"
        lines.append(
            f"  {_dot_quote(l.source)} -> {_dot_quote(l.target)} "
            f"[id={_dot_quote(l.id)}, label={_dot_quote(glyph)}, style={style}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


# --- SVG rendering ------------------------------------------------------

_NODE_FILL = {
    NodeKind.INFLUENCING_FACTOR: "#cfe2f3",
    NodeKind.SUCCESS_FACTOR: "#d9ead3",
    NodeKind.KEY_FACTOR: "#ffe599",
    NodeKind.ASSUMPTION_NODE: "#fff2cc",
}


@dataclass
class RenderOptions:
    scale: float = 1.0
    margin: float = 40.0

    def __post_init__(self) -> None:
        if self.scale <= 0:
            raise ValueError("scale must be positive")


def render_svg(model: ModelDocument, layout: LayeredLayout, options: RenderOptions | None = None) -> str:
    """Render a laid-out model as a standalone SVG 1.1 document."""
    options = options or RenderOptions()
    missing = [n.id for n in model.nodes if n.id not in layout.position_of]
    missing += [l.id for l in model.links if l.id not in layout.routes]
    if missing:
        raise ValidationError(f"layout does not cover {missing[:3]!r}", offending_id=missing[0])

    xs = [p[0] for p in layout.position_of.values()] or [0.0]
    ys = [p[1] for p in layout.position_of.values()] or [0.0]
    min_x, min_y = min(xs), min(ys)

    def tx(p: tuple[float, float]) -> tuple[float, float]:
        return (
            options.margin + (p[0] - min_x) * options.scale,
            options.margin + (p[1] - min_y) * options.scale,
        )

    width = 2 * options.margin + (max(xs) - min_x) * options.scale
    height = 2 * options.margin + (max(ys) - min_y) * options.scale

    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "version": "1.1",
            "width": f"{width:g}",
            "height": f"{height:g}",
            "viewBox": f"0 0 {width:g} {height:g}",
        },
    )
    defs = ET.SubElement(svg, "defs")
    marker = ET.SubElement(
        defs,
        "marker",
        {
            "id": "arrow",
            "viewBox": "0 0 10 10",
            "refX": "9",
            "refY": "5",
            "markerWidth": "7",
            "markerHeight": "7",
            "orient": "auto-start-reverse",
        },
    )
    ET.SubElement(marker, "path", {"d": "M 0 0 L 10 5 L 0 10 z", "fill": "#444444"})
    ET.SubElement(svg, "rect", {"x": "0", "y": "0", "width": f"{width:g}", "height": f"{height:g}", "fill": "#ffffff"})

    by_id = {n.id: n for n in model.nodes}
    for l in model.links:
        pts = [tx(p) for p in layout.routes[l.id]]
        d = "M " + " L ".join(f"{x:.2f},{y:.2f}" for x, y in pts)
        attrs = {
            "id": f"link-{l.id}",
            "d": d,
            "fill": "none",
            "stroke": "#444444",
            "stroke-width": "1.5",
            "marker-end": "url(#arrow)",
        }
        if l.polarity is Polarity.NEGATIVE:
            attrs["stroke-dasharray"] = "6 4"
        ET.SubElement(svg, "path", attrs)

        mid = _midpoint(pts)
        glyph = POSITIVE_GLYPH if l.polarity is Polarity.POSITIVE else NEGATIVE_GLYPH
        label = ET.SubElement(
            svg,
            "text",
            {
                "x": f"{mid[0] + 6:.2f}",
                "y": f"{mid[1] - 4:.2f}",
                "font-size": "13",
                "font-family": "sans-serif",
                "fill": "#222222",
            },
        )
        label.text = glyph
        if l.evidence:
            badge = ET.SubElement(
                svg,
                "ellipse",
                {
                    "cx": f"{mid[0] - 10:.2f}",
                    "cy": f"{mid[1] + 8:.2f}",
                    "rx": "8",
                    "ry": "8",
                    "fill": "#666666",
                },
            )
            badge_text = ET.SubElement(
                svg,
                "text",
                {
                    "x": f"{mid[0] - 10:.2f}",
                    "y": f"{mid[1] + 11:.2f}",
                    "font-size": "10",
                    "font-family": "sans-serif",
                    "fill": "#ffffff",
                    "text-anchor": "middle",
                },
            )
            badge_text.text = str(len(l.evidence))

    for node_id, pos in layout.position_of.items():
        node = by_id[node_id]
        cx, cy = tx(pos)
        fill = _NODE_FILL[node.kind]
        if node.kind in (NodeKind.INFLUENCING_FACTOR, NodeKind.KEY_FACTOR):
            stroke_width = "3" if node.kind is NodeKind.KEY_FACTOR else "1.5"
            ET.SubElement(
                svg,
                "rect",
                {
                    "id": f"node-{node_id}",
                    "x": f"{cx - 18:.2f}",
                    "y": f"{cy - 12:.2f}",
                    "width": "36",
                    "height": "24",
                    "fill": fill,
                    "stroke": "#333333",
                    "stroke-width": stroke_width,
                },
            )
        else:
            attrs = {
                "id": f"node-{node_id}",
                "cx": f"{cx:.2f}",
                "cy": f"{cy:.2f}",
                "rx": "18",
                "ry": "12",
                "fill": fill,
                "stroke": "#333333",
                "stroke-width": "1.5",
            }
            if node.kind is NodeKind.ASSUMPTION_NODE:
                attrs["stroke-dasharray"] = "4 3"
            ET.SubElement(svg, "ellipse", attrs)
        text = ET.SubElement(
            svg,
            "text",
            {
                "x": f"{cx:.2f}",
                "y": f"{cy + 22:.2f}",
                "font-size": "11",
                "font-family": "sans-serif",
                "fill": "#111111",
                "text-anchor": "middle",
            },
        )
        text.text = node.label

    return ET.tostring(svg, encoding="unicode")


def _midpoint(pts: list[tuple[float, float]]) -> tuple[float, float]:
    if len(pts) % 2 == 1:
        return pts[len(pts) // 2]
    a, b = pts[len(pts) // 2 - 1], pts[len(pts) // 2]
    return ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
