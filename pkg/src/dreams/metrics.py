"""Evaluation measures: structure counts, session effort, reductions, stability.

A session log is an ordered list of timestamped editing actions plus
phase markers; effort extraction counts manual node moves and measures
the time spans between the markers of the creation, revision, and
retrieval phases. Reduction percentages compare a baseline mean against
a supported-condition mean, rounded half-up to one decimal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from decimal import ROUND_HALF_UP, Decimal
from enum import Enum

from .errors import IncompleteLogError, ValidationError
from .layout import LayeredLayout
from .model import EvidenceKind, ModelDocument, Polarity


class ActionKind(str, Enum):
    ADD_NODE = "add_node"
    ADD_LINK = "add_link"
    ATTACH_EVIDENCE = "attach_evidence"
    UPDATE = "update"
    REMOVE = "remove"
    MANUAL_MOVE = "manual_move"
    AUTO_LAYOUT = "auto_layout"
    SEARCH = "search"
    OPEN_EVIDENCE = "open_evidence"
    PHASE_START = "phase_start"
    PHASE_END = "phase_end"


class Phase(str, Enum):
    CREATION = "creation"
    REVISION = "revision"
    RETRIEVAL = "retrieval"


@dataclass
class LogAction:
    kind: ActionKind
    at: datetime
    node_id: str | None = None
    link_id: str | None = None
    query: str | None = None
    old_position: tuple[float, float] | None = None
    new_position: tuple[float, float] | None = None
    phase: Phase | None = None

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind.value, "at": self.at.isoformat()}
        for key in ("node_id", "link_id", "query"):
            value = getattr(self, key)
            if value is not None:
                out[key] = value
        for key in ("old_position", "new_position"):
            value = getattr(self, key)
            if value is not None:
                out[key] = [value[0], value[1]]
        if self.phase is not None:
            out["phase"] = self.phase.value
        return out


@dataclass
class SessionLog:
    actions: list[LogAction] = field(default_factory=list)

    def check(self) -> None:
        for a, b in zip(self.actions, self.actions[1:]):
            if b.at < a.at:
                raise ValidationError("session log timestamps must be non-decreasing")

    def to_dict(self) -> dict:
        return {"actions": [a.to_dict() for a in self.actions]}

    @classmethod
    def from_dict(cls, data: dict) -> "SessionLog":
        actions = []
        for raw in data.get("actions", []):
            actions.append(
                LogAction(
                    kind=ActionKind(raw["kind"]),
                    at=datetime.fromisoformat(raw["at"]),
                    node_id=raw.get("node_id"),
                    link_id=raw.get("link_id"),
                    query=raw.get("query"),
                    old_position=tuple(raw["old_position"]) if raw.get("old_position") else None,
                    new_position=tuple(raw["new_position"]) if raw.get("new_position") else None,
                    phase=Phase(raw["phase"]) if raw.get("phase") else None,
                )
            )
        log = cls(actions=actions)
        log.check()
        return log


@dataclass
class EffortSummary:
    repositioning_actions: int
    creation_seconds: float | None
    revision_seconds: float | None
    retrieval_seconds: float | None

    def to_dict(self) -> dict:
        return {
            "repositioning_actions": self.repositioning_actions,
            "creation_seconds": self.creation_seconds,
            "revision_seconds": self.revision_seconds,
            "retrieval_seconds": self.retrieval_seconds,
        }


def effort_from_log(log: SessionLog) -> EffortSummary:
    """Count manual moves and measure marked phases.

    A phase that never appears yields None; a start without its end (or
    the reverse) raises IncompleteLogError.
    """
    log.check()
    repositioning = sum(1 for a in log.actions if a.kind is ActionKind.MANUAL_MOVE)

    durations: dict[Phase, float | None] = {}
    for phase in Phase:
        start = next(
            (a for a in log.actions if a.kind is ActionKind.PHASE_START and a.phase is phase), None
        )
        end = next(
            (a for a in log.actions if a.kind is ActionKind.PHASE_END and a.phase is phase), None
        )
        if start is None and end is None:
            durations[phase] = None
        elif start is None or end is None or end.at < start.at:
            raise IncompleteLogError(f"phase {phase.value!r} is not bracketed by start and end markers")
        else:
            durations[phase] = (end.at - start.at).total_seconds()

    return EffortSummary(
        repositioning_actions=repositioning,
        creation_seconds=durations[Phase.CREATION],
        revision_seconds=durations[Phase.REVISION],
        retrieval_seconds=durations[Phase.RETRIEVAL],
    )


@dataclass
class MetricsReport:
    node_count: int
    link_count: dict[str, int]
    evidence_count: dict[str, int]
    crossing_count: int
    repositioning_actions: int | None = None
    creation_seconds: float | None = None
    revision_seconds: float | None = None
    retrieval_seconds: float | None = None

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "link_count": dict(self.link_count),
            "evidence_count": dict(self.evidence_count),
            "crossing_count": self.crossing_count,
            "repositioning_actions": self.repositioning_actions,
            "creation_seconds": self.creation_seconds,
            "revision_seconds": self.revision_seconds,
            "retrieval_seconds": self.retrieval_seconds,
        }

    def with_effort(self, effort: EffortSummary) -> "MetricsReport":
        return MetricsReport(
            node_count=self.node_count,
            link_count=dict(self.link_count),
            evidence_count=dict(self.evidence_count),
            crossing_count=self.crossing_count,
            repositioning_actions=effort.repositioning_actions,
            creation_seconds=effort.creation_seconds,
            revision_seconds=effort.revision_seconds,
            retrieval_seconds=effort.retrieval_seconds,
        )

    def to_text(self) -> str:
        def minutes(seconds: float | None) -> str:
            return "-" if seconds is None else f"{seconds / 60:.1f}"

        rows = [
            ("Model creation time (min)", minutes(self.creation_seconds)),
            ("Revision time (min)", minutes(self.revision_seconds)),
            ("Edge crossings", str(self.crossing_count)),
            (
                "Repositioning actions",
                "-" if self.repositioning_actions is None else str(self.repositioning_actions),
            ),
            ("Evidence retrieval time (min)", minutes(self.retrieval_seconds)),
            ("Nodes", str(self.node_count)),
            ("Links (+/-)", f"{self.link_count.get('positive', 0)}/{self.link_count.get('negative', 0)}"),
            ("Evidence items", str(sum(self.evidence_count.values()))),
        ]
        width = max(len(r[0]) for r in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def model_stats(model: ModelDocument, layout: LayeredLayout) -> MetricsReport:
    """Structure counts plus the layout's crossing count."""
    node_ids = {n.id for n in model.nodes}
    if set(layout.position_of) != node_ids or set(layout.routes) != {l.id for l in model.links}:
        raise ValidationError("layout does not match the model")

    link_count = {p.value: 0 for p in Polarity}
    for l in model.links:
        link_count[l.polarity.value] += 1
    evidence_count = {k.value: 0 for k in EvidenceKind}
    for l in model.links:
        for e in l.evidence:
            evidence_count[e.kind.value] += 1

    return MetricsReport(
        node_count=len(model.nodes),
        link_count=link_count,
        evidence_count=evidence_count,
        crossing_count=layout.crossing_count,
    )


def reduction_percent(baseline_mean: float, treatment_mean: float) -> float:
    """Percent reduction of treatment vs baseline, rounded half-up to one decimal."""
    if baseline_mean <= 0:
        raise ValueError("baseline mean must be positive")
    raw = 100.0 * (baseline_mean - treatment_mean) / baseline_mean
    return float(Decimal(repr(raw)).quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


def layout_stability(previous: LayeredLayout, new: LayeredLayout) -> float:
    """Fraction of common nodes whose layer or rank among common nodes changed."""
    common = sorted(set(previous.layer_of) & set(new.layer_of))
    if not common:
        raise ValueError("layouts share no nodes")

    def common_ranks(layout: LayeredLayout) -> dict[str, int]:
        by_layer: dict[int, list[str]] = {}
        for n in common:
            by_layer.setdefault(layout.layer_of[n], []).append(n)
        ranks: dict[str, int] = {}
        for members in by_layer.values():
            members.sort(key=lambda n: layout.order_of[n])
            for i, n in enumerate(members):
                ranks[n] = i
        return ranks

    prev_ranks = common_ranks(previous)
    new_ranks = common_ranks(new)
    changed = sum(
        1
        for n in common
        if previous.layer_of[n] != new.layer_of[n] or prev_ranks[n] != new_ranks[n]
    )
    return changed / len(common)


_COMPARE_ROWS = [
    ("Model creation time (min)", "creation_seconds", 60.0),
    ("Revision time (min)", "revision_seconds", 60.0),
    ("Edge crossings", "crossing_count", None),
    ("Repositioning actions", "repositioning_actions", None),
    ("Evidence retrieval time (min)", "retrieval_seconds", 60.0),
]


def comparison_table(baseline: MetricsReport, treatment: MetricsReport) -> str:
    """Side-by-side text table of the five comparative measures with reductions."""
    lines = [f"{'Measure':<30} {'Baseline':>9} {'Supported':>9} {'Reduction':>9}"]
    for name, attr, divisor in _COMPARE_ROWS:
        b = getattr(baseline, attr)
        t = getattr(treatment, attr)
        if b is None or t is None:
            lines.append(f"{name:<30} {'-':>9} {'-':>9} {'-':>9}")
            continue
        b_val = b / divisor if divisor else float(b)
        t_val = t / divisor if divisor else float(t)
        reduction = f"{reduction_percent(b_val, t_val):.1f}%" if b_val > 0 else "-"
        lines.append(f"{name:<30} {b_val:>9.2f} {t_val:>9.2f} {reduction:>9}")
    return "\n".join(lines)
