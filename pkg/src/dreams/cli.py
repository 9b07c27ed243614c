"""Command-line front end.

Exit codes: 0 success, 1 validation or content failure, 2 usage error,
3 I/O error. Stdout carries data (ids, violations, hits, tables, JSON);
stderr carries diagnostics. Output is plain text with no color, so
NO_COLOR needs no special handling. With --json, bodies match the HTTP
service's responses field for field.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import model as model_ops
from .errors import DreamsError, ParseError
from .layout import Direction, LayoutConfig, layout as compute_layout
from .model import EvidenceKind, ModelKind, NodeKind, Polarity
from .search import SearchQuery, build_index, query as run_query
from .store import (
    RenderOptions,
    atomic_write_text,
    deserialize,
    document_to_dict,
    export_dot,
    load_document,
    render_svg,
    save_document,
)

MODEL_KIND_ALIASES = {
    "rm": ModelKind.REFERENCE_MODEL,
    "im": ModelKind.IMPACT_MODEL,
}

NODE_KIND_ALIASES = {
    "influencing": NodeKind.INFLUENCING_FACTOR,
    "success": NodeKind.SUCCESS_FACTOR,
    "key": NodeKind.KEY_FACTOR,
    "assumption": NodeKind.ASSUMPTION_NODE,
}

POLARITY_ALIASES = {
    "+": Polarity.POSITIVE,
    "-": Polarity.NEGATIVE,
    "pos": Polarity.POSITIVE,
    "neg": Polarity.NEGATIVE,
}


def _enum_arg(enum_cls, aliases: dict):
    def parse(value: str):
        if value in aliases:
            return aliases[value]
        try:
            return enum_cls(value)
        except ValueError:
            allowed = sorted({m.value for m in enum_cls} | set(aliases))
            raise argparse.ArgumentTypeError(f"expected one of: {', '.join(allowed)}")

    return parse


def _print_json(body: dict) -> None:
    print(json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False))


def _emit(args: argparse.Namespace, plain: str, body: dict) -> None:
    if args.json:
        _print_json(body)
    else:
        print(plain)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dreams", description="Causal model editor and server.")
    sub = parser.add_subparsers(dest="command", metavar="command", required=True)

    def command(name: str, help_text: str, needs_file: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        if needs_file:
            p.add_argument("--file", required=True, help="model file (.dreams.json)")
        p.add_argument("--json", action="store_true", help="print a machine-readable body")
        return p

    p = command("new", "create an empty model file")
    p.add_argument("--kind", required=True, type=_enum_arg(ModelKind, MODEL_KIND_ALIASES))
    p.add_argument("--title", required=True)
    p.set_defaults(handler=cmd_new)

    p = command("add-node", "add a factor node")
    p.add_argument("--kind", required=True, type=_enum_arg(NodeKind, NODE_KIND_ALIASES))
    p.add_argument("--label", required=True)
    p.add_argument("--notes")
    p.add_argument("--tag", action="append", dest="tags", metavar="TAG")
    p.set_defaults(handler=cmd_add_node)

    p = command("add-link", "add a signed causal link")
    p.add_argument("--source", required=True, metavar="NODE_ID")
    p.add_argument("--target", required=True, metavar="NODE_ID")
    p.add_argument("--polarity", required=True, type=_enum_arg(Polarity, POLARITY_ALIASES))
    p.add_argument("--notes")
    p.set_defaults(handler=cmd_add_link)

    p = command("attach", "attach evidence to a link")
    p.add_argument("--link", required=True, metavar="LINK_ID")
    p.add_argument("--kind", required=True, type=_enum_arg(EvidenceKind, {}))
    p.add_argument("--text", required=True)
    p.add_argument("--locator")
    p.set_defaults(handler=cmd_attach)

    p = command("validate", "check a file against every model invariant")
    p.set_defaults(handler=cmd_validate)

    p = command("layout", "compute the layered layout")
    p.add_argument(
        "--direction",
        type=_enum_arg(Direction, {}),
        default=Direction.TOP_DOWN,
        help="top_down or left_right",
    )
    p.set_defaults(handler=cmd_layout)

    p = command("render", "render the model to SVG")
    p.add_argument("--out", required=True, help="output .svg path")
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--margin", type=float, default=40.0)
    p.set_defaults(handler=cmd_render)

    p = command("export-dot", "print the model in DOT form")
    p.add_argument("--out", help="write here instead of stdout")
    p.set_defaults(handler=cmd_export_dot)

    p = command("search", "query the model's text index")
    p.add_argument("query", nargs="?", default="", help="free text (prefix-matched tokens)")
    p.add_argument("--kind", type=_enum_arg(NodeKind, NODE_KIND_ALIASES))
    p.add_argument("--polarity", type=_enum_arg(Polarity, POLARITY_ALIASES))
    p.add_argument("--evidence", type=_enum_arg(EvidenceKind, {}))
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(handler=cmd_search)

    p = command("stats", "print the metrics report")
    p.set_defaults(handler=cmd_stats)

    p = command("serve", "run the HTTP service", needs_file=False)
    p.add_argument("--data-dir", help="store directory (default: DREAMS_DATA_DIR or ./dreams-data)")
    p.add_argument("--bind", help="host:port (default: DREAMS_BIND or 127.0.0.1:7421)")
    p.set_defaults(handler=cmd_serve)

    return parser


def cmd_new(args: argparse.Namespace) -> int:
    document = model_ops.create_model(args.kind, args.title)
    save_document(document, args.file)
    _emit(args, document.id, document_to_dict(document))
    return 0


def cmd_add_node(args: argparse.Namespace) -> int:
    document = load_document(args.file)
    node_id = model_ops.add_node(document, args.kind, args.label, notes=args.notes, tags=args.tags)
    save_document(document, args.file)
    _emit(args, node_id, document_to_dict(document))
    return 0


def cmd_add_link(args: argparse.Namespace) -> int:
    document = load_document(args.file)
    link_id = model_ops.add_link(document, args.source, args.target, args.polarity)
    if args.notes is not None:
        model_ops.update_link_notes(document, link_id, args.notes)
        document.revision -= 1  # one command, one revision step
    save_document(document, args.file)
    _emit(args, link_id, document_to_dict(document))
    return 0


def cmd_attach(args: argparse.Namespace) -> int:
    document = load_document(args.file)
    evidence_id = model_ops.attach_evidence(
        document, args.link, args.kind, args.text, locator=args.locator
    )
    save_document(document, args.file)
    _emit(args, evidence_id, document_to_dict(document))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    text = Path(args.file).read_text(encoding="utf-8")
    try:
        document = deserialize(text, check=False)
    except ParseError as exc:
        where = f" (line {exc.line}, column {exc.column})" if exc.line else ""
        if args.json:
            _print_json({"violations": [{"rule": "parse", "offending_id": None, "message": exc.detail}]})
        else:
            print(f"parse: {exc.detail}{where}")
        return 1
    violations = model_ops.validate(document)
    if args.json:
        _print_json(
            {
                "violations": [
                    {"rule": v.rule, "offending_id": v.offending_id, "message": v.message}
                    for v in violations
                ]
            }
        )
    else:
        for v in violations:
            print(v)
        if not violations:
            print("ok")
    return 1 if violations else 0


def cmd_layout(args: argparse.Namespace) -> int:
    from .service import layout_body

    document = load_document(args.file)
    result = compute_layout(document, LayoutConfig(direction=args.direction))
    if args.json:
        _print_json(layout_body(document, result))
        return 0
    labels = {n.id: n.label for n in document.nodes}
    print(f"crossings: {result.crossing_count}")
    print(f"layers: {max(result.layer_of.values()) + 1 if result.layer_of else 0}")
    for node_id in sorted(result.layer_of, key=lambda n: (result.layer_of[n], result.order_of[n])):
        x, y = result.position_of[node_id]
        print(
            f"{node_id}\tlayer {result.layer_of[node_id]}\trank {result.order_of[node_id]}"
            f"\t({x:g}, {y:g})\t{labels[node_id]}"
        )
    return 0


def cmd_render(args: argparse.Namespace) -> int:
    document = load_document(args.file)
    result = compute_layout(document)
    svg = render_svg(document, result, RenderOptions(scale=args.scale, margin=args.margin))
    atomic_write_text(args.out, svg)
    if args.json:
        _print_json({"out": args.out, "bytes": len(svg.encode("utf-8"))})
    else:
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def cmd_export_dot(args: argparse.Namespace) -> int:
    document = load_document(args.file)
    dot = export_dot(document)
    if args.out:
        atomic_write_text(args.out, dot)
    else:
        sys.stdout.write(dot)
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    from .service import search_body

    if args.limit < 1:
        print("error: --limit must be at least 1", file=sys.stderr)
        return 2
    document = load_document(args.file)
    search_query = SearchQuery(
        text=args.query,
        kind_filter=args.kind,
        polarity_filter=args.polarity,
        evidence_filter=args.evidence,
        limit=args.limit,
    )
    hits = run_query(build_index(document), document, search_query)
    if args.json:
        _print_json(search_body(document, hits))
        return 0
    for hit in hits:
        snippet = " ".join(hit.snippet.text.split())
        print(f"{hit.score:g}\t{hit.target}\t{hit.matched_field}\t{snippet}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    from .metrics import model_stats
    from .service import stats_body

    document = load_document(args.file)
    result = compute_layout(document)
    if args.json:
        _print_json(stats_body(document, result))
    else:
        print(model_stats(document, result).to_text())
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(data_dir=args.data_dir, bind=args.bind)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except DreamsError as exc:
        print(f"error: {exc.detail}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
