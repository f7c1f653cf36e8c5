"""Audit annotations against gold labels and simulate annotator mistakes.

An annotation is judged by where it lands relative to the gold node:
the same node (correct), a strict ancestor (generic: the annotator missed
visible properties), a strict descendant (restricted: the annotator claimed
properties that are not visible), or anywhere else (misplaced). Discharged
vs. node mismatches are kept as their own kinds rather than folded into
misplaced, so reports can show them on a separate row.

Simulated annotator models turn mistake sources into answer oracles for
what-if studies: limited background knowledge truncates the truthful path
(ancestor labels), a partial object view overshoots below the gold node
(descendant labels), mislabeling follows the truthful path of a different
node entirely, and a noise rate flips individual answers.

All randomness is drawn from Python's ``random.Random`` (the Mersenne
Twister) seeded explicitly; derived seeds come from :func:`derive_seed`.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from enum import Enum

from .errors import MissingGoldError
from .hierarchy import Hierarchy, children, relation, root_path
from .traversal import (
    AnswerOracle,
    AskAnswer,
    TerminalLabel,
    TraversalConfig,
    classify_with_oracle,
    path_oracle,
)


class OutcomeKind(str, Enum):
    CORRECT = "correct"
    GENERIC = "generic"
    RESTRICTED = "restricted"
    MISPLACED = "misplaced"
    DISCHARGED_VS_GOLD = "discharged_vs_gold"
    CORRECT_DISCHARGE = "correct_discharge"


MODEL_KINDS = ("perfect", "mislabeler", "partial_view", "knowledge_limited", "noisy")


@dataclass(frozen=True)
class GoldAssignment:
    task_id: str
    gold: TerminalLabel


@dataclass(frozen=True)
class SimulatedAnnotatorModel:
    kind: str
    epsilon: float = 0.0  # answer-flip probability (noisy)
    depth_cap: int = 0  # deepest level still answered truthfully (knowledge_limited)
    overshoot: int = 1  # extra erroneous yes levels below gold (partial_view)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown annotator model kind {self.kind!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must be in [0, 1]")
        if self.depth_cap < 0:
            raise ValueError("depth_cap must be >= 0")
        if self.overshoot < 1:
            raise ValueError("overshoot must be >= 1")


def derive_seed(*parts) -> int:
    """Stable sub-seed from arbitrary labeled parts (SHA-256 based)."""
    text = ":".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def classify_outcome(h: Hierarchy, annotated: TerminalLabel, gold: TerminalLabel) -> OutcomeKind:
    """Place one annotation in the outcome taxonomy relative to gold."""
    if annotated.kind == "discharged" and gold.kind == "discharged":
        return OutcomeKind.CORRECT_DISCHARGE
    if annotated.kind == "discharged" or gold.kind == "discharged":
        return OutcomeKind.DISCHARGED_VS_GOLD
    rel = relation(h, annotated.node_id, gold.node_id)
    if rel == "equal":
        return OutcomeKind.CORRECT
    if rel == "ancestor":
        return OutcomeKind.GENERIC
    if rel == "descendant":
        return OutcomeKind.RESTRICTED
    return OutcomeKind.MISPLACED


def build_model_oracle(h: Hierarchy, gold_node: str, model: SimulatedAnnotatorModel) -> AnswerOracle:
    """Answer oracle embodying one annotator model for one gold node."""
    rng = random.Random(model.seed)
    if model.kind == "perfect":
        return path_oracle(h, gold_node)
    if model.kind == "knowledge_limited":
        path = root_path(h, gold_node)
        known = frozenset(path[: model.depth_cap + 1])
        return lambda node_id: AskAnswer.YES if node_id in known else AskAnswer.NO
    if model.kind == "partial_view":
        path = root_path(h, gold_node)
        cursor = gold_node
        for _ in range(model.overshoot):
            kids = children(h, cursor)
            if not kids:
                break
            cursor = rng.choice(kids).node_id
            path.append(cursor)
        claimed = frozenset(path)
        return lambda node_id: AskAnswer.YES if node_id in claimed else AskAnswer.NO
    if model.kind == "mislabeler":
        others = [nid for nid in h.nodes if nid != gold_node]
        target = rng.choice(others) if others else gold_node
        return path_oracle(h, target)
    # noisy: truthful path with independent answer flips
    truthful = path_oracle(h, gold_node)
    def flipping(node_id: str) -> AskAnswer:
        answer = truthful(node_id)
        if rng.random() < model.epsilon:
            return AskAnswer.NO if answer is AskAnswer.YES else AskAnswer.YES
        return answer
    return flipping


def simulate_annotator(
    h: Hierarchy,
    gold_node: str,
    model: SimulatedAnnotatorModel,
    config: TraversalConfig | None = None,
) -> TerminalLabel:
    """Run one simulated session; deterministic given the model seed."""
    h.node(gold_node)
    return classify_with_oracle(h, build_model_oracle(h, gold_node, model), config)


@dataclass(frozen=True)
class ConfusionEntry:
    annotated: str  # category key (node id or DISCHARGED)
    gold: str
    outcome: OutcomeKind
    count: int


@dataclass(frozen=True)
class AuditReport:
    counts: dict[OutcomeKind, int]
    confusion: list[ConfusionEntry]
    total: int

    def to_dict(self) -> dict:
        return {
            "counts": {kind.value: self.counts.get(kind, 0) for kind in OutcomeKind},
            "confusion": [
                {
                    "annotated": e.annotated,
                    "gold": e.gold,
                    "outcome": e.outcome.value,
                    "count": e.count,
                }
                for e in self.confusion
            ],
            "total": self.total,
        }


def audit_report(
    h: Hierarchy,
    annotations: list[tuple[str, TerminalLabel]],
    golds: list[GoldAssignment],
) -> AuditReport:
    """Tally outcome kinds for (task_id, label) pairs against gold.

    Every annotated task must have a gold assignment. Counts sum to the
    number of annotations; the confusion listing is ordered by node id and
    independent of input order.
    """
    gold_by_task = {g.task_id: g.gold for g in golds}
    counts: dict[OutcomeKind, int] = {kind: 0 for kind in OutcomeKind}
    pair_counts: dict[tuple[str, str, OutcomeKind], int] = {}
    for task_id, label in annotations:
        if task_id not in gold_by_task:
            raise MissingGoldError(f"no gold assignment for annotated task {task_id!r}")
        gold = gold_by_task[task_id]
        outcome = classify_outcome(h, label, gold)
        counts[outcome] += 1
        key = (label.category_key, gold.category_key, outcome)
        pair_counts[key] = pair_counts.get(key, 0) + 1
    confusion = [
        ConfusionEntry(annotated=annotated, gold=gold, outcome=outcome, count=n)
        for (annotated, gold, outcome), n in sorted(pair_counts.items())
    ]
    return AuditReport(counts=counts, confusion=confusion, total=len(annotations))


def render_audit(report: AuditReport, h: Hierarchy | None = None) -> str:
    """Aligned-column text rendering of an audit report."""
    lines = ["Outcome            Count", "-" * 24]
    for kind in OutcomeKind:
        lines.append(f"{kind.value:<18} {report.counts.get(kind, 0):>5}")
    lines.append("-" * 24)
    lines.append(f"{'total':<18} {report.total:>5}")
    if report.confusion:
        lines.append("")
        header = f"{'Annotated':<24} {'Gold':<24} {'Outcome':<20} Count"
        lines.append(header)
        lines.append("-" * len(header))
        for entry in report.confusion:
            annotated = _describe(entry.annotated, h)
            gold = _describe(entry.gold, h)
            lines.append(f"{annotated:<24} {gold:<24} {entry.outcome.value:<20} {entry.count:>5}")
    return "\n".join(lines) + "\n"


def _describe(category_key: str, h: Hierarchy | None) -> str:
    if h is not None and category_key in h:
        node = h.node(category_key)
        return f"{category_key} ({node.category_label})"
    return category_key
