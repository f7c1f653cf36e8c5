"""Question-driven classification sessions over a label hierarchy.

A session walks the tree top-down. It first asks whether the image satisfies
the root differentia; "no" discharges the image entirely. After a confirmed
node it asks each child's differentia in ordinal order and descends into the
first "yes". When every child is rejected the session stops and labels the
image with the deepest confirmed node, so uncertain annotators naturally
produce a safe, more general label instead of a wrong specific one.

Sessions are plain serializable records; all operations take the hierarchy
explicitly and are deterministic, so replaying an answer log reproduces the
identical terminal result.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .errors import HierarchyNotUsableError, SessionStateError
from .hierarchy import (
    Hierarchy,
    children,
    fingerprint,
    has_errors,
    reconstruct_definition,
    root_path,
    validate,
)

DISCHARGED_TEXT = "Discharged"
# Reserved category id used wherever terminal labels become nominal categories.
DISCHARGED_CATEGORY = "DISCHARGED"

AWAITING_ROOT = "awaiting_root"
DESCENDING = "descending"
TERMINAL = "terminal"

ROOT_CHECK = "root_check"
CHILD_CHECK = "child_check"


class AskAnswer(str, Enum):
    YES = "yes"
    NO = "no"
    UNSURE = "unsure"


@dataclass(frozen=True)
class TerminalLabel:
    kind: str  # "node" | "discharged"
    node_id: str | None
    differentia_label: str
    category_label: str

    @staticmethod
    def for_node(h: Hierarchy, node_id: str) -> "TerminalLabel":
        node = h.node(node_id)
        return TerminalLabel(
            kind="node",
            node_id=node.node_id,
            differentia_label=node.differentia,
            category_label=node.category_label,
        )

    @staticmethod
    def discharged() -> "TerminalLabel":
        return TerminalLabel(
            kind="discharged",
            node_id=None,
            differentia_label=DISCHARGED_TEXT,
            category_label=DISCHARGED_TEXT,
        )

    @property
    def category_key(self) -> str:
        """Nominal category id: the node id, or the reserved discharged id."""
        return self.node_id if self.kind == "node" else DISCHARGED_CATEGORY

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "node_id": self.node_id,
            "differentia_label": self.differentia_label,
            "category_label": self.category_label,
        }

    @staticmethod
    def from_dict(d: dict) -> "TerminalLabel":
        return TerminalLabel(
            kind=d["kind"],
            node_id=d.get("node_id"),
            differentia_label=d["differentia_label"],
            category_label=d["category_label"],
        )


@dataclass(frozen=True)
class Question:
    node_id: str  # candidate whose differentia is asked
    differentia: str
    definition_path: list[str]
    stage: str  # ROOT_CHECK | CHILD_CHECK

    def to_dict(self) -> dict:
        return {
            "node_id": self.node_id,
            "differentia": self.differentia,
            "definition_path": list(self.definition_path),
            "stage": self.stage,
        }


@dataclass(frozen=True)
class AnswerEntry:
    node_id: str
    answer: AskAnswer
    at_ms: int
    synthetic: bool = False  # auto-accepted, not given by the annotator
    latency_ms: int | None = None

    def to_dict(self) -> dict:
        d: dict = {"node_id": self.node_id, "answer": self.answer.value, "at_ms": self.at_ms}
        if self.synthetic:
            d["synthetic"] = True
        if self.latency_ms is not None:
            d["latency_ms"] = self.latency_ms
        return d

    @staticmethod
    def from_dict(d: dict) -> "AnswerEntry":
        return AnswerEntry(
            node_id=d["node_id"],
            answer=AskAnswer(d["answer"]),
            at_ms=d["at_ms"],
            synthetic=d.get("synthetic", False),
            latency_ms=d.get("latency_ms"),
        )


@dataclass(frozen=True)
class TraversalConfig:
    # Auto-answer "yes" at a root whose differentia cannot be checked
    # visually (sound-based roots); logged as a synthetic entry.
    auto_accept_nonvisual_root: bool = False

    def to_dict(self) -> dict:
        return {"auto_accept_nonvisual_root": self.auto_accept_nonvisual_root}

    @staticmethod
    def from_dict(d: dict) -> "TraversalConfig":
        return TraversalConfig(auto_accept_nonvisual_root=d.get("auto_accept_nonvisual_root", False))


@dataclass
class ClassificationSession:
    session_id: str
    task_id: str
    hierarchy_version: str
    current_node: str
    pending_child_index: int = 0
    answer_log: list[AnswerEntry] = field(default_factory=list)
    state: str = AWAITING_ROOT
    result: TerminalLabel | None = None
    started_at: int = 0
    ended_at: int | None = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "task_id": self.task_id,
            "hierarchy_version": self.hierarchy_version,
            "current_node": self.current_node,
            "pending_child_index": self.pending_child_index,
            "answer_log": [e.to_dict() for e in self.answer_log],
            "state": self.state,
            "result": self.result.to_dict() if self.result else None,
            "started_at": self.started_at,
            "ended_at": self.ended_at,
        }

    @staticmethod
    def from_dict(d: dict) -> "ClassificationSession":
        return ClassificationSession(
            session_id=d["session_id"],
            task_id=d["task_id"],
            hierarchy_version=d["hierarchy_version"],
            current_node=d["current_node"],
            pending_child_index=d["pending_child_index"],
            answer_log=[AnswerEntry.from_dict(e) for e in d["answer_log"]],
            state=d["state"],
            result=TerminalLabel.from_dict(d["result"]) if d.get("result") else None,
            started_at=d["started_at"],
            ended_at=d.get("ended_at"),
        )


def now_utc_ms() -> int:
    return int(time.time() * 1000)


def _finish(s: ClassificationSession, label: TerminalLabel, at_ms: int) -> None:
    s.state = TERMINAL
    s.result = label
    s.ended_at = at_ms


def _enter(h: Hierarchy, s: ClassificationSession, node_id: str, at_ms: int) -> None:
    s.current_node = node_id
    s.pending_child_index = 0
    if children(h, node_id):
        s.state = DESCENDING
    else:
        _finish(s, TerminalLabel.for_node(h, node_id), at_ms)


def start_session(
    h: Hierarchy,
    task_id: str,
    config: TraversalConfig | None = None,
    *,
    session_id: str = "",
    now_ms: int | None = None,
) -> ClassificationSession:
    """Open a session at the root check.

    The hierarchy must validate without error diagnostics. With
    auto_accept_nonvisual_root set and a non-visual root, the root check is
    answered "yes" synthetically and the session starts descending (or is
    immediately terminal on a single-node hierarchy).
    """
    config = config or TraversalConfig()
    diagnostics = validate(h)
    if has_errors(diagnostics):
        bad = [d for d in diagnostics if d.severity == "error"]
        raise HierarchyNotUsableError(
            f"hierarchy has {len(bad)} error diagnostic(s); first: {bad[0].message}"
        )
    at = now_utc_ms() if now_ms is None else now_ms
    s = ClassificationSession(
        session_id=session_id or f"session-{task_id}",
        task_id=task_id,
        hierarchy_version=fingerprint(h),
        current_node=h.root_id,
        started_at=at,
    )
    root = h.node(h.root_id)
    if config.auto_accept_nonvisual_root and not root.visually_checkable:
        s.answer_log.append(AnswerEntry(node_id=root.node_id, answer=AskAnswer.YES, at_ms=at, synthetic=True))
        _enter(h, s, root.node_id, at)
    return s


def current_question(h: Hierarchy, s: ClassificationSession) -> Question | None:
    """The pending question, or None once the session is terminal."""
    if s.state == TERMINAL:
        return None
    if s.state == AWAITING_ROOT:
        root = h.node(h.root_id)
        return Question(
            node_id=root.node_id,
            differentia=root.differentia,
            definition_path=reconstruct_definition(h, root.node_id),
            stage=ROOT_CHECK,
        )
    kids = children(h, s.current_node)
    candidate = kids[s.pending_child_index]
    return Question(
        node_id=candidate.node_id,
        differentia=candidate.differentia,
        definition_path=reconstruct_definition(h, candidate.node_id),
        stage=CHILD_CHECK,
    )


def submit_answer(
    h: Hierarchy,
    s: ClassificationSession,
    answer: AskAnswer,
    *,
    now_ms: int | None = None,
    latency_ms: int | None = None,
) -> ClassificationSession:
    """Apply one answer and advance the session in place.

    "unsure" steers exactly like "no" but stays distinct in the log. A "no"
    at the root discharges; exhausting all children of the current node stops
    at that node.
    """
    if s.state == TERMINAL:
        raise SessionStateError(f"session {s.session_id} is terminal; no further answers accepted")
    answer = AskAnswer(answer)
    at = now_utc_ms() if now_ms is None else now_ms
    question = current_question(h, s)
    assert question is not None
    s.answer_log.append(
        AnswerEntry(node_id=question.node_id, answer=answer, at_ms=at, latency_ms=latency_ms)
    )
    if question.stage == ROOT_CHECK:
        if answer is AskAnswer.YES:
            _enter(h, s, question.node_id, at)
        else:
            _finish(s, TerminalLabel.discharged(), at)
        return s
    if answer is AskAnswer.YES:
        _enter(h, s, question.node_id, at)
        return s
    s.pending_child_index += 1
    if s.pending_child_index >= len(children(h, s.current_node)):
        _finish(s, TerminalLabel.for_node(h, s.current_node), at)
    return s


AnswerOracle = Callable[[str], AskAnswer]


def run_session(
    h: Hierarchy,
    oracle: AnswerOracle,
    config: TraversalConfig | None = None,
    *,
    task_id: str = "oracle-task",
    now_ms: int = 0,
) -> ClassificationSession:
    """Drive a session to terminal with an answer function (node_id -> answer)."""
    s = start_session(h, task_id, config, now_ms=now_ms)
    while s.state != TERMINAL:
        question = current_question(h, s)
        submit_answer(h, s, oracle(question.node_id), now_ms=now_ms)
    return s


def classify_with_oracle(
    h: Hierarchy, oracle: AnswerOracle, config: TraversalConfig | None = None
) -> TerminalLabel:
    result = run_session(h, oracle, config).result
    assert result is not None
    return result


def path_oracle(h: Hierarchy, target: str) -> AnswerOracle:
    """Truthful annotator for ``target``: yes exactly on the root-to-target path."""
    on_path = frozenset(root_path(h, target))
    return lambda node_id: AskAnswer.YES if node_id in on_path else AskAnswer.NO


def replay_answers(
    h: Hierarchy,
    entries: Iterable[AnswerEntry],
    config: TraversalConfig | None = None,
    *,
    task_id: str = "replay-task",
) -> ClassificationSession:
    """Re-run a recorded answer log and return the reconstructed session.

    Synthetic entries are skipped; the config regenerates them. Raises
    SessionStateError if the log does not line up with the question sequence.
    """
    s = start_session(h, task_id, config, now_ms=0)
    for entry in entries:
        if entry.synthetic:
            continue
        question = current_question(h, s)
        if question is None:
            raise SessionStateError("answer log continues past the terminal state")
        if question.node_id != entry.node_id:
            raise SessionStateError(
                f"answer log asks about {entry.node_id!r} but the pending question is {question.node_id!r}"
            )
        submit_answer(h, s, entry.answer, now_ms=entry.at_ms)
    return s
