"""Campaigns: datasets, assignments, sessions and records behind a journal.

A campaign freezes one hierarchy version and one localization strategy over
a dataset. Opening it materializes the task list exactly once; annotators
then work through identical full-overlap assignments (everyone sees every
task, in task order, so sibling regions of one image are presented
consecutively). Every state change is committed to an append-only journal
before it is applied, and replaying the journal reconstructs the identical
store state, including in-flight sessions.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import agreement as agreement_mod
from . import traversal as traversal_mod
from .errors import (
    CampaignStateError,
    DuplicateRecordError,
    HierarchyNotUsableError,
    InvalidRegionError,
    JournalCorruptError,
    SessionStateError,
    UnknownEntityError,
)
from .hierarchy import Hierarchy, dump_hierarchy, fingerprint, has_errors, load_hierarchy, validate
from .journal import Journal
from .localization import (
    AnnotationTask,
    ImageRecord,
    LocalizationStrategy,
    expand_tasks,
    image_from_dict,
    image_to_dict,
    polygon_bbox,
    validate_image,
)
from .outcomes import AuditReport, GoldAssignment, audit_report
from .traversal import (
    AskAnswer,
    ClassificationSession,
    TerminalLabel,
    TraversalConfig,
    now_utc_ms,
)

log = logging.getLogger(__name__)

DRAFT = "draft"
OPEN = "open"
CLOSED = "closed"


@dataclass
class Campaign:
    campaign_id: str
    hierarchy_version: str
    dataset_ref: str
    strategy: LocalizationStrategy
    labeling_scheme: str
    traversal_config: TraversalConfig
    status: str = DRAFT

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "hierarchy_version": self.hierarchy_version,
            "dataset_ref": self.dataset_ref,
            "strategy": self.strategy.value,
            "labeling_scheme": self.labeling_scheme,
            "traversal_config": self.traversal_config.to_dict(),
            "status": self.status,
        }


@dataclass
class AnnotationRecord:
    record_id: str
    campaign_id: str
    task_id: str
    annotator_id: str
    result: TerminalLabel
    answer_log: list
    started_at: int
    ended_at: int

    def to_dict(self) -> dict:
        return {
            "record_id": self.record_id,
            "campaign_id": self.campaign_id,
            "task_id": self.task_id,
            "annotator_id": self.annotator_id,
            "result": self.result.to_dict(),
            "answer_log": [e.to_dict() for e in self.answer_log],
            "started_at": self.started_at,
            "ended_at": self.ended_at,
        }

    @staticmethod
    def from_dict(d: dict) -> "AnnotationRecord":
        return AnnotationRecord(
            record_id=d["record_id"],
            campaign_id=d["campaign_id"],
            task_id=d["task_id"],
            annotator_id=d["annotator_id"],
            result=TerminalLabel.from_dict(d["result"]),
            answer_log=[traversal_mod.AnswerEntry.from_dict(e) for e in d["answer_log"]],
            started_at=d["started_at"],
            ended_at=d["ended_at"],
        )


@dataclass
class Assignment:
    annotator_id: str
    task_ids: list[str]
    cursor: int = 0  # completed (recorded) tasks


def task_to_dict(task: AnnotationTask) -> dict:
    return {
        "task_id": task.task_id,
        "image_id": task.image_id,
        "region_id": task.region_id,
        "crop": list(task.crop) if task.crop else None,
    }


def task_from_dict(d: dict) -> AnnotationTask:
    return AnnotationTask(
        task_id=d["task_id"],
        image_id=d["image_id"],
        region_id=d.get("region_id"),
        crop=tuple(d["crop"]) if d.get("crop") else None,
    )


@dataclass
class SessionHandle:
    campaign_id: str
    annotator_id: str
    session: ClassificationSession


@dataclass
class CampaignState:
    campaign: Campaign
    hierarchy: Hierarchy
    images: list[ImageRecord]
    tasks: list[AnnotationTask] = field(default_factory=list)
    tasks_by_id: dict[str, AnnotationTask] = field(default_factory=dict)
    records: dict[tuple[str, str], AnnotationRecord] = field(default_factory=dict)  # (task, annotator)
    golds: dict[str, TerminalLabel] = field(default_factory=dict)
    assignments: dict[str, Assignment] = field(default_factory=dict)
    # free-text category labels suggested by annotators at terminal, verbatim
    suggestions: dict[tuple[str, str], str] = field(default_factory=dict)


@dataclass(frozen=True)
class CampaignStats:
    campaign_id: str
    progress: dict
    agreement: agreement_mod.AgreementReport | None
    agreement_undefined_reason: str | None
    timing: agreement_mod.TimingStats
    audit: AuditReport | None

    def to_dict(self) -> dict:
        return {
            "campaign_id": self.campaign_id,
            "progress": self.progress,
            "agreement": self.agreement.to_dict() if self.agreement else None,
            "agreement_undefined_reason": self.agreement_undefined_reason,
            "timing": self.timing.to_dict(),
            "audit": self.audit.to_dict() if self.audit else None,
        }


def canonical_digest(payload: dict) -> str:
    """Order-independent content hash of a JSON-serializable payload."""
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class CampaignStore:
    """Journal-backed store: every mutation is an event, state is its replay."""

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._journal = Journal(self.data_dir / "journal.jsonl")
        self._campaigns: dict[str, CampaignState] = {}
        self._sessions: dict[str, SessionHandle] = {}
        for event in self._journal.events:
            try:
                self._apply(event)
            except Exception as exc:
                raise JournalCorruptError(
                    f"journal event seq {event.get('seq')} ({event.get('type')}) cannot be applied: {exc}. "
                    "Restore the journal from a backup or remove the offending event."
                ) from exc
        self._check_integrity()

    def close(self) -> None:
        self._journal.close()

    # --- event machinery ---

    def _commit(self, event_type: str, data: dict, at_ms: int | None = None):
        event = self._journal.append(event_type, data, now_utc_ms() if at_ms is None else at_ms)
        return self._apply(event)

    def _apply(self, event: dict):
        handler = getattr(self, f"_apply_{event['type']}", None)
        if handler is None:
            raise JournalCorruptError(f"unknown event type {event['type']!r}")
        return handler(event["data"])

    def _check_integrity(self) -> None:
        for state in self._campaigns.values():
            for (task_id, _annotator), record in state.records.items():
                if task_id not in state.tasks_by_id:
                    raise JournalCorruptError(
                        f"record {record.record_id} references unknown task {task_id!r}"
                    )
        for handle in self._sessions.values():
            if handle.campaign_id not in self._campaigns:
                raise JournalCorruptError(
                    f"session {handle.session.session_id} references unknown campaign"
                )

    # --- campaign lifecycle ---

    def _state(self, campaign_id: str) -> CampaignState:
        try:
            return self._campaigns[campaign_id]
        except KeyError:
            raise UnknownEntityError(f"unknown campaign {campaign_id!r}") from None

    def create_campaign(
        self,
        hierarchy_doc: dict,
        images: Iterable[ImageRecord],
        strategy: LocalizationStrategy,
        labeling_scheme: str = agreement_mod.SCHEME_DIFFERENTIA,
        traversal_config: TraversalConfig | None = None,
        *,
        campaign_id: str | None = None,
        dataset_ref: str = "",
        now_ms: int | None = None,
    ) -> Campaign:
        with self._lock:
            h = load_hierarchy(hierarchy_doc)
            diagnostics = validate(h)
            if has_errors(diagnostics):
                bad = [d for d in diagnostics if d.severity == "error"]
                raise HierarchyNotUsableError(
                    f"hierarchy rejected: {len(bad)} error diagnostic(s); first: {bad[0].message}"
                )
            if labeling_scheme not in agreement_mod.LABELING_SCHEMES:
                raise CampaignStateError(f"unknown labeling scheme {labeling_scheme!r}")
            images = list(images)
            seen_images: set[str] = set()
            for image in images:
                if image.image_id in seen_images:
                    raise InvalidRegionError(f"duplicate image_id {image.image_id!r} in dataset")
                seen_images.add(image.image_id)
                bad_regions = validate_image(image)
                if bad_regions:
                    region_id, violation = bad_regions[0]
                    raise InvalidRegionError(
                        f"image {image.image_id!r} region {region_id!r}: {violation.message}"
                    )
            if not images:
                log.warning("creating campaign over an empty dataset; it will have 0 tasks")
            campaign_id = campaign_id or f"campaign-{uuid.uuid4().hex[:8]}"
            if campaign_id in self._campaigns:
                raise CampaignStateError(f"duplicate campaign id {campaign_id!r}")
            strategy = LocalizationStrategy(strategy)
            data = {
                "campaign": {
                    "campaign_id": campaign_id,
                    "hierarchy_version": fingerprint(h),
                    "dataset_ref": dataset_ref,
                    "strategy": strategy.value,
                    "labeling_scheme": labeling_scheme,
                    "traversal_config": (traversal_config or TraversalConfig()).to_dict(),
                },
                "hierarchy": dump_hierarchy(h),
                "images": [image_to_dict(img) for img in images],
            }
            return self._commit("campaign_created", data, now_ms)

    def _apply_campaign_created(self, data: dict) -> Campaign:
        meta = data["campaign"]
        campaign = Campaign(
            campaign_id=meta["campaign_id"],
            hierarchy_version=meta["hierarchy_version"],
            dataset_ref=meta["dataset_ref"],
            strategy=LocalizationStrategy(meta["strategy"]),
            labeling_scheme=meta["labeling_scheme"],
            traversal_config=TraversalConfig.from_dict(meta["traversal_config"]),
            status=DRAFT,
        )
        state = CampaignState(
            campaign=campaign,
            hierarchy=load_hierarchy(data["hierarchy"]),
            images=[image_from_dict(d) for d in data["images"]],
        )
        self._campaigns[campaign.campaign_id] = state
        return campaign

    def open_campaign(self, campaign_id: str, *, now_ms: int | None = None) -> Campaign:
        """Materialize tasks (exactly once) and accept annotations."""
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status != DRAFT:
                raise CampaignStateError(f"campaign {campaign_id!r} is {state.campaign.status}, not draft")
            tasks = []
            for image in state.images:
                tasks.extend(expand_tasks(image, state.campaign.strategy))
            data = {"campaign_id": campaign_id, "tasks": [task_to_dict(t) for t in tasks]}
            return self._commit("campaign_opened", data, now_ms)

    def _apply_campaign_opened(self, data: dict) -> Campaign:
        state = self._state(data["campaign_id"])
        state.tasks = [task_from_dict(d) for d in data["tasks"]]
        state.tasks_by_id = {t.task_id: t for t in state.tasks}
        state.campaign.status = OPEN
        return state.campaign

    def close_campaign(self, campaign_id: str, *, now_ms: int | None = None) -> Campaign:
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status != OPEN:
                raise CampaignStateError(f"campaign {campaign_id!r} is {state.campaign.status}, not open")
            return self._commit("campaign_closed", {"campaign_id": campaign_id}, now_ms)

    def _apply_campaign_closed(self, data: dict) -> Campaign:
        state = self._state(data["campaign_id"])
        state.campaign.status = CLOSED
        return state.campaign

    def load_gold(
        self, campaign_id: str, golds: Iterable[GoldAssignment], *, now_ms: int | None = None
    ) -> int:
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status == DRAFT:
                raise CampaignStateError("open the campaign before loading gold labels")
            golds = list(golds)
            for g in golds:
                if g.task_id not in state.tasks_by_id:
                    raise UnknownEntityError(f"gold references unknown task {g.task_id!r}")
            data = {
                "campaign_id": campaign_id,
                "golds": [{"task_id": g.task_id, "label": g.gold.to_dict()} for g in golds],
            }
            self._commit("gold_loaded", data, now_ms)
            return len(golds)

    def _apply_gold_loaded(self, data: dict) -> None:
        state = self._state(data["campaign_id"])
        for entry in data["golds"]:
            state.golds[entry["task_id"]] = TerminalLabel.from_dict(entry["label"])

    # --- assignments and sessions ---

    def _ensure_assignment(self, state: CampaignState, annotator_id: str, now_ms: int | None) -> Assignment:
        if annotator_id not in state.assignments:
            data = {
                "campaign_id": state.campaign.campaign_id,
                "annotator_id": annotator_id,
                "task_ids": [t.task_id for t in state.tasks],
            }
            self._commit("assignment_created", data, now_ms)
        return state.assignments[annotator_id]

    def _apply_assignment_created(self, data: dict) -> Assignment:
        state = self._state(data["campaign_id"])
        assignment = Assignment(annotator_id=data["annotator_id"], task_ids=list(data["task_ids"]))
        state.assignments[data["annotator_id"]] = assignment
        return assignment

    def next_task(
        self, campaign_id: str, annotator_id: str, *, now_ms: int | None = None
    ) -> tuple[AnnotationTask | None, str | None, int]:
        """Next unannotated task for the annotator: (task, resumable session id, remaining)."""
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status != OPEN:
                raise CampaignStateError(f"campaign {campaign_id!r} is not open")
            assignment = self._ensure_assignment(state, annotator_id, now_ms)
            done = {task_id for (task_id, annot) in state.records if annot == annotator_id}
            remaining = [tid for tid in assignment.task_ids if tid not in done]
            if not remaining:
                return None, None, 0
            task_id = remaining[0]
            resumable = None
            for handle in self._sessions.values():
                if (
                    handle.campaign_id == campaign_id
                    and handle.annotator_id == annotator_id
                    and handle.session.task_id == task_id
                    and handle.session.state != traversal_mod.TERMINAL
                ):
                    resumable = handle.session.session_id
                    break
            return state.tasks_by_id[task_id], resumable, len(remaining)

    def start_session(
        self,
        campaign_id: str,
        task_id: str,
        annotator_id: str,
        *,
        session_id: str | None = None,
        now_ms: int | None = None,
    ) -> ClassificationSession:
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status != OPEN:
                raise CampaignStateError(f"campaign {campaign_id!r} is not open")
            if task_id not in state.tasks_by_id:
                raise UnknownEntityError(f"unknown task {task_id!r} in campaign {campaign_id!r}")
            self._ensure_assignment(state, annotator_id, now_ms)
            at = now_utc_ms() if now_ms is None else now_ms
            session = traversal_mod.start_session(
                state.hierarchy,
                task_id,
                state.campaign.traversal_config,
                session_id=session_id or f"session-{uuid.uuid4().hex[:12]}",
                now_ms=at,
            )
            data = {
                "campaign_id": campaign_id,
                "annotator_id": annotator_id,
                "session": session.to_dict(),
            }
            return self._commit("session_started", data, at)

    def _apply_session_started(self, data: dict) -> ClassificationSession:
        state = self._state(data["campaign_id"])
        session = ClassificationSession.from_dict(data["session"])
        if session.task_id not in state.tasks_by_id:
            raise UnknownEntityError(f"session references unknown task {session.task_id!r}")
        self._sessions[session.session_id] = SessionHandle(
            campaign_id=data["campaign_id"], annotator_id=data["annotator_id"], session=session
        )
        return session

    def _handle(self, session_id: str) -> SessionHandle:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise UnknownEntityError(f"unknown session {session_id!r}") from None

    def get_session(self, session_id: str) -> tuple[ClassificationSession, Hierarchy]:
        with self._lock:
            handle = self._handle(session_id)
            return handle.session, self._campaigns[handle.campaign_id].hierarchy

    def submit_answer(
        self,
        session_id: str,
        value: AskAnswer | str,
        *,
        index: int | None = None,
        latency_ms: int | None = None,
        now_ms: int | None = None,
    ) -> tuple[ClassificationSession, AnnotationRecord | None]:
        """Apply one answer; auto-records the annotation when it terminalizes.

        ``index`` makes posts idempotent: an answer carrying an index lower
        than the log length is a duplicate delivery and is ignored.
        """
        with self._lock:
            handle = self._handle(session_id)
            session = handle.session
            if index is not None:
                if index < len(session.answer_log):
                    return session, None
                if index > len(session.answer_log):
                    raise SessionStateError(
                        f"answer index {index} out of order (log has {len(session.answer_log)})"
                    )
            if session.state == traversal_mod.TERMINAL:
                raise SessionStateError(f"session {session_id} is terminal")
            state = self._state(handle.campaign_id)
            if state.campaign.status != OPEN:
                raise CampaignStateError("campaign is not open")
            at = now_utc_ms() if now_ms is None else now_ms
            data = {
                "session_id": session_id,
                "value": AskAnswer(value).value,
                "at_ms": at,
                "latency_ms": latency_ms,
            }
            self._commit("session_answer", data, at)
            record = None
            if session.state == traversal_mod.TERMINAL:
                key = (session.task_id, handle.annotator_id)
                if key not in state.records:
                    record = self.record_annotation(session_id, now_ms=at)
            return session, record

    def _apply_session_answer(self, data: dict) -> ClassificationSession:
        handle = self._handle(data["session_id"])
        hierarchy = self._state(handle.campaign_id).hierarchy
        return traversal_mod.submit_answer(
            hierarchy,
            handle.session,
            AskAnswer(data["value"]),
            now_ms=data["at_ms"],
            latency_ms=data.get("latency_ms"),
        )

    # --- records ---

    def record_annotation(self, session_id: str, *, now_ms: int | None = None) -> AnnotationRecord:
        """Persist the terminal result of a session as this annotator's record."""
        with self._lock:
            handle = self._handle(session_id)
            session = handle.session
            state = self._state(handle.campaign_id)
            if state.campaign.status != OPEN:
                raise CampaignStateError("campaign is not open")
            if session.state != traversal_mod.TERMINAL:
                raise SessionStateError(f"session {session_id} is not terminal")
            key = (session.task_id, handle.annotator_id)
            if key in state.records:
                raise DuplicateRecordError(
                    f"task {session.task_id!r} already recorded by {handle.annotator_id!r}"
                )
            record = AnnotationRecord(
                record_id=f"record-{uuid.uuid4().hex[:12]}",
                campaign_id=handle.campaign_id,
                task_id=session.task_id,
                annotator_id=handle.annotator_id,
                result=session.result,
                answer_log=list(session.answer_log),
                started_at=session.started_at,
                ended_at=session.ended_at,
            )
            return self._commit("record_added", record.to_dict(), now_ms)

    def add_suggestion(self, session_id: str, text: str, *, now_ms: int | None = None) -> None:
        """Attach an annotator's free-text label suggestion to a terminal session."""
        with self._lock:
            handle = self._handle(session_id)
            if handle.session.state != traversal_mod.TERMINAL:
                raise SessionStateError("suggestions are accepted only on terminal sessions")
            data = {
                "campaign_id": handle.campaign_id,
                "task_id": handle.session.task_id,
                "annotator_id": handle.annotator_id,
                "text": text,
            }
            self._commit("suggestion_added", data, now_ms)

    def _apply_suggestion_added(self, data: dict) -> None:
        state = self._state(data["campaign_id"])
        state.suggestions[(data["task_id"], data["annotator_id"])] = data["text"]

    def suggestion_for(self, campaign_id: str, task_id: str, annotator_id: str) -> str | None:
        with self._lock:
            return self._state(campaign_id).suggestions.get((task_id, annotator_id))

    def _apply_record_added(self, data: dict) -> AnnotationRecord:
        record = AnnotationRecord.from_dict(data)
        state = self._state(record.campaign_id)
        key = (record.task_id, record.annotator_id)
        if key in state.records:
            raise DuplicateRecordError(f"duplicate record for {key}")
        state.records[key] = record
        assignment = state.assignments.get(record.annotator_id)
        if assignment is not None:
            assignment.cursor += 1
        return record

    # --- reads ---

    def campaigns(self) -> list[Campaign]:
        with self._lock:
            return [s.campaign for s in self._campaigns.values()]

    def campaign(self, campaign_id: str) -> Campaign:
        with self._lock:
            return self._state(campaign_id).campaign

    def hierarchy(self, campaign_id: str) -> Hierarchy:
        with self._lock:
            return self._state(campaign_id).hierarchy

    def tasks(self, campaign_id: str) -> list[AnnotationTask]:
        with self._lock:
            return list(self._state(campaign_id).tasks)

    def images(self, campaign_id: str) -> list[ImageRecord]:
        with self._lock:
            return list(self._state(campaign_id).images)

    def image(self, campaign_id: str, image_id: str) -> ImageRecord:
        with self._lock:
            state = self._state(campaign_id)
            for img in state.images:
                if img.image_id == image_id:
                    return img
            raise UnknownEntityError(f"unknown image {image_id!r}")

    def find_image(self, image_id: str) -> ImageRecord:
        with self._lock:
            for state in self._campaigns.values():
                for img in state.images:
                    if img.image_id == image_id:
                        return img
            raise UnknownEntityError(f"unknown image {image_id!r}")

    def records(self, campaign_id: str) -> list[AnnotationRecord]:
        with self._lock:
            state = self._state(campaign_id)
            return sorted(state.records.values(), key=lambda r: (r.task_id, r.annotator_id))

    # --- aggregation ---

    def stats(self, campaign_id: str) -> CampaignStats:
        with self._lock:
            state = self._state(campaign_id)
            records = self.records(campaign_id)
            if not records:
                raise CampaignStateError(f"campaign {campaign_id!r} has no records yet")
            matrix = agreement_mod.build_reliability(records, state.campaign.labeling_scheme)
            report = None
            reason = None
            try:
                report = agreement_mod.agreement_report(matrix)
            except Exception as exc:
                reason = str(exc)
            timing = agreement_mod.timing_stats(records)
            audit = None
            if state.golds:
                annotated = [
                    (r.task_id, r.result) for r in records if r.task_id in state.golds
                ]
                golds = [GoldAssignment(task_id=t, gold=g) for t, g in state.golds.items()]
                audit = audit_report(state.hierarchy, annotated, golds)
            per_annotator: dict[str, int] = {}
            for record in records:
                per_annotator[record.annotator_id] = per_annotator.get(record.annotator_id, 0) + 1
            n_discharged = sum(1 for r in records if r.result.kind == "discharged")
            n_unsure_stops = sum(
                1
                for r in records
                if r.result.kind == "node"
                and any(e.answer is AskAnswer.UNSURE for e in r.answer_log)
            )
            progress = {
                "status": state.campaign.status,
                "n_tasks": len(state.tasks),
                "n_records": len(records),
                "n_annotators": len(per_annotator),
                "records_per_annotator": dict(sorted(per_annotator.items())),
                "n_discharged": n_discharged,
                "n_unsure_stops": n_unsure_stops,
                "n_gold": len(state.golds),
            }
            return CampaignStats(
                campaign_id=campaign_id,
                progress=progress,
                agreement=report,
                agreement_undefined_reason=reason,
                timing=timing,
                audit=audit,
            )

    def export_dataset(self, campaign_id: str, scheme: str, seed: int | None = None) -> list[dict]:
        """Per-task labeled manifest lines for a closed campaign.

        The label of a task is the majority vote over its records (ties go to
        the earliest record). Tasks without records are skipped. With a seed,
        each line gets a deterministic train/test split field, stratified per
        label so no label class ends up test-only or train-only when it has
        at least two tasks.
        """
        with self._lock:
            state = self._state(campaign_id)
            if state.campaign.status != CLOSED:
                raise CampaignStateError("export requires a closed campaign")
            if scheme not in agreement_mod.LABELING_SCHEMES:
                raise CampaignStateError(f"unknown labeling scheme {scheme!r}")
            images = {img.image_id: img for img in state.images}
            lines: list[dict] = []
            for task in state.tasks:
                task_records = [r for r in state.records.values() if r.task_id == task.task_id]
                if not task_records:
                    continue
                winner = _majority_label(task_records)
                label = (
                    winner.differentia_label
                    if scheme == agreement_mod.SCHEME_DIFFERENTIA
                    else winner.category_label
                )
                image = images[task.image_id]
                crop = task.crop
                if crop is None and task.region_id is not None:
                    region = next(r for r in image.regions if r.region_id == task.region_id)
                    crop = polygon_bbox(region.polygon, (image.width, image.height))
                lines.append(
                    {
                        "task_id": task.task_id,
                        "image_id": image.image_id,
                        "uri": image.uri,
                        "region_id": task.region_id,
                        "crop": list(crop) if crop else None,
                        "label": label,
                    }
                )
            if seed is not None:
                _assign_split(lines, seed)
            return lines


def _majority_label(records: list[AnnotationRecord]) -> TerminalLabel:
    by_category: dict[str, list[AnnotationRecord]] = {}
    for record in records:
        by_category.setdefault(record.result.category_key, []).append(record)
    def rank(item: tuple[str, list[AnnotationRecord]]):
        _category, recs = item
        earliest = min((r.ended_at, r.annotator_id) for r in recs)
        return (-len(recs), earliest)
    _category, recs = sorted(by_category.items(), key=rank)[0]
    return min(recs, key=lambda r: (r.ended_at, r.annotator_id)).result


def _assign_split(lines: list[dict], seed: int) -> None:
    import random

    rng = random.Random(seed)
    by_label: dict[str, list[int]] = {}
    for i, line in enumerate(lines):
        by_label.setdefault(line["label"], []).append(i)
    for label in sorted(by_label):
        indices = by_label[label][:]
        rng.shuffle(indices)
        n = len(indices)
        if n == 1:
            n_train = 1
        else:
            n_train = min(max(int(n * 0.8), 1), n - 1)
        train = set(indices[:n_train])
        for i in indices:
            lines[i]["split"] = "train" if i in train else "test"


def export_text(lines: list[dict]) -> str:
    return "".join(json.dumps(line, separators=(",", ":")) + "\n" for line in lines)
