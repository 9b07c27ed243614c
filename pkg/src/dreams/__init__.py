"""Causal model editing, layered layout, persistence, search, and metrics.

The package is organized in layers: :mod:`dreams.model` owns the data
structures and editing operations, :mod:`dreams.layout` arranges them,
:mod:`dreams.store` reads and writes files (plus DOT and SVG export),
:mod:`dreams.search` retrieves elements, :mod:`dreams.metrics` computes
evaluation figures, and :mod:`dreams.service` / :mod:`dreams.cli` are
the HTTP and command-line front ends.
"""

from .errors import (
    ConflictError,
    DreamsError,
    IncompleteLogError,
    NotFoundError,
    ParseError,
    StaleIndexError,
    StaleRevisionError,
    StorageError,
    UnsupportedVersionError,
    ValidationError,
)
from .layout import Direction, LayeredLayout, LayoutConfig, layout
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
    Violation,
    add_link,
    add_node,
    attach_evidence,
    create_model,
    detach_evidence,
    remove_link,
    remove_node,
    update_link_notes,
    update_link_polarity,
    update_node,
    validate,
)
from .metrics import (
    ActionKind,
    EffortSummary,
    LogAction,
    MetricsReport,
    Phase,
    SessionLog,
    comparison_table,
    effort_from_log,
    layout_stability,
    model_stats,
    reduction_percent,
)
from .search import SearchHit, SearchIndex, SearchQuery, build_index, query
from .store import (
    RenderOptions,
    deserialize,
    document_to_dict,
    export_dot,
    load_document,
    render_svg,
    save_document,
    serialize,
)

__version__ = "1.0.0"

__all__ = [
    "SCHEMA_VERSION",
    "__version__",
    "ActionKind",
    "CausalLink",
    "ConflictError",
    "Direction",
    "DreamsError",
    "EffortSummary",
    "EvidenceItem",
    "EvidenceKind",
    "FactorNode",
    "IncompleteLogError",
    "LayeredLayout",
    "LayoutConfig",
    "LogAction",
    "MetricsReport",
    "ModelDocument",
    "ModelKind",
    "NodeKind",
    "NotFoundError",
    "ParseError",
    "Phase",
    "Polarity",
    "RenderOptions",
    "SearchHit",
    "SearchIndex",
    "SearchQuery",
    "SessionLog",
    "StaleIndexError",
    "StaleRevisionError",
    "StorageError",
    "UnsupportedVersionError",
    "ValidationError",
    "Violation",
    "add_link",
    "add_node",
    "attach_evidence",
    "build_index",
    "comparison_table",
    "create_model",
    "deserialize",
    "detach_evidence",
    "document_to_dict",
    "effort_from_log",
    "export_dot",
    "layout",
    "layout_stability",
    "load_document",
    "model_stats",
    "query",
    "reduction_percent",
    "remove_link",
    "remove_node",
    "render_svg",
    "save_document",
    "serialize",
    "update_link_notes",
    "update_link_polarity",
    "update_node",
    "validate",
]
