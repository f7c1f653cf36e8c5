from __future__ import annotations

import json

import pytest

from differentia.campaign import CampaignStore, canonical_digest, export_text
from differentia.errors import (
    CampaignStateError,
    DuplicateRecordError,
    HierarchyNotUsableError,
    JournalCorruptError,
    SessionStateError,
    UnknownEntityError,
)
from differentia.hierarchy import root_path
from differentia.localization import ImageRecord, LocalizationStrategy, ObjectRegion
from differentia.outcomes import GoldAssignment
from differentia.traversal import TerminalLabel, current_question


def square(rid, x, y, size=10):
    return ObjectRegion(rid, ((x, y), (x + size, y), (x + size, y + size), (x, y + size)))


def sample_images():
    return [
        ImageRecord("img1", "img1.png", 100, 100),
        ImageRecord("img2", "img2.png", 100, 100, (square("r0", 5, 5),)),
        ImageRecord(
            "img3",
            "img3.png",
            100,
            100,
            (square("koto", 0, 50), square("flute", 20, 5), square("stand", 60, 60)),
        ),
    ]


@pytest.fixture()
def store(tmp_path):
    s = CampaignStore(tmp_path / "data")
    yield s
    s.close()


@pytest.fixture()
def opened(store, fixture_doc):
    campaign = store.create_campaign(
        fixture_doc,
        sample_images(),
        LocalizationStrategy.BOUNDING_POLYGONS,
        campaign_id="c1",
        dataset_ref="sample",
    )
    store.open_campaign(campaign.campaign_id)
    return store


def run_to(store, campaign_id, task_id, annotator, target):
    """Answer truthfully for target (or discharge when target is None)."""
    session = store.start_session(campaign_id, task_id, annotator, now_ms=1000)
    h = store.hierarchy(campaign_id)
    on_path = set(root_path(h, target)) if target else set()
    while session.state != "terminal":
        q = current_question(h, session)
        value = "yes" if q.node_id in on_path else "no"
        session, record = store.submit_answer(
            session.session_id, value, index=len(session.answer_log), now_ms=2000
        )
    return session, record


class TestLifecycle:
    def test_create_draft(self, store, fixture_doc):
        campaign = store.create_campaign(
            fixture_doc, sample_images(), LocalizationStrategy.BOUNDING_POLYGONS, campaign_id="c1"
        )
        assert campaign.status == "draft"
        assert campaign.hierarchy_version
        assert store.tasks("c1") == []

    def test_open_materializes_tasks_once(self, opened):
        tasks = opened.tasks("c1")
        assert len(tasks) == 5  # two whole-image tasks + 3 polygon tasks
        assert [t.task_id for t in tasks] == [
            "img1",
            "img2",
            "img3::koto",
            "img3::flute",
            "img3::stand",
        ]
        with pytest.raises(CampaignStateError):
            opened.open_campaign("c1")
        assert opened.tasks("c1") == tasks

    def test_duplicate_campaign_id(self, store, fixture_doc):
        store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c1")
        with pytest.raises(CampaignStateError):
            store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c1")

    def test_hierarchy_with_errors_rejected(self, store, fixture_doc):
        fixture_doc["nodes"][5]["sense_id"] = fixture_doc["nodes"][2]["sense_id"]
        with pytest.raises(HierarchyNotUsableError):
            store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI)

    def test_empty_dataset_opens_with_zero_tasks(self, store, fixture_doc):
        store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c0")
        store.open_campaign("c0")
        assert store.tasks("c0") == []

    def test_unknown_campaign(self, store):
        with pytest.raises(UnknownEntityError):
            store.campaign("nope")

    def test_desk_scale_dataset_materializes_every_image(self, store, fixture_doc):
        images = [ImageRecord(f"img{i:04d}", f"img{i:04d}.png", 640, 480) for i in range(450)]
        store.create_campaign(
            fixture_doc, images, LocalizationStrategy.BOUNDING_POLYGONS, campaign_id="big"
        )
        store.open_campaign("big")
        assert len(store.tasks("big")) >= 450


class TestSessionsAndRecords:
    def test_full_session_records_annotation(self, opened):
        session, record = run_to(opened, "c1", "img1", "ann1", "1_1_1_1")
        assert session.result.node_id == "1_1_1_1"
        assert record is not None
        assert record.task_id == "img1"
        assert record.annotator_id == "ann1"
        assert opened.records("c1")[0].record_id == record.record_id

    def test_second_terminal_session_does_not_duplicate(self, opened):
        run_to(opened, "c1", "img1", "ann1", "1_1_1_1")
        _session, record = run_to(opened, "c1", "img1", "ann1", "1_3")
        assert record is None
        assert len(opened.records("c1")) == 1

    def test_explicit_record_duplicate_rejected(self, opened):
        run_to(opened, "c1", "img1", "ann1", "1_1_1_1")
        session, _ = run_to(opened, "c1", "img1", "ann1", "1_3")
        with pytest.raises(DuplicateRecordError):
            opened.record_annotation(session.session_id)

    def test_closed_campaign_rejects_answers(self, opened):
        session = opened.start_session("c1", "img1", "ann1", now_ms=0)
        opened.close_campaign("c1")
        with pytest.raises(CampaignStateError):
            opened.submit_answer(session.session_id, "yes")

    def test_nonterminal_record_rejected(self, opened):
        session = opened.start_session("c1", "img1", "ann1", now_ms=0)
        with pytest.raises(SessionStateError):
            opened.record_annotation(session.session_id)

    def test_idempotent_answer_by_index(self, opened):
        session = opened.start_session("c1", "img1", "ann1", now_ms=0)
        opened.submit_answer(session.session_id, "yes", index=0)
        replayed, record = opened.submit_answer(session.session_id, "yes", index=0)
        assert record is None
        assert len(replayed.answer_log) == 1

    def test_out_of_order_index_rejected(self, opened):
        session = opened.start_session("c1", "img1", "ann1", now_ms=0)
        with pytest.raises(SessionStateError):
            opened.submit_answer(session.session_id, "yes", index=3)

    def test_unknown_task_rejected(self, opened):
        with pytest.raises(UnknownEntityError):
            opened.start_session("c1", "nope", "ann1")


class TestAssignments:
    def test_round_robin_full_overlap(self, opened):
        task, resume, remaining = opened.next_task("c1", "ann1")
        assert task.task_id == "img1"
        assert resume is None
        assert remaining == 5
        run_to(opened, "c1", "img1", "ann1", "1_2")
        task, _, remaining = opened.next_task("c1", "ann1")
        assert task.task_id == "img2"
        assert remaining == 4
        # a second annotator starts from the beginning
        task, _, remaining = opened.next_task("c1", "ann2")
        assert task.task_id == "img1"
        assert remaining == 5

    def test_moi_regions_presented_consecutively(self, opened):
        for target in ("1_2", "1_2"):
            task, _, _ = opened.next_task("c1", "ann1")
            run_to(opened, "c1", task.task_id, "ann1", target)
        seen = []
        for _ in range(3):
            task, _, _ = opened.next_task("c1", "ann1")
            seen.append(task.task_id)
            run_to(opened, "c1", task.task_id, "ann1", "1_3")
        assert seen == ["img3::koto", "img3::flute", "img3::stand"]
        task, _, remaining = opened.next_task("c1", "ann1")
        assert task is None and remaining == 0

    def test_resume_in_flight_session(self, opened):
        session = opened.start_session("c1", "img1", "ann1", now_ms=0)
        opened.submit_answer(session.session_id, "yes", index=0)
        task, resume, _ = opened.next_task("c1", "ann1")
        assert task.task_id == "img1"
        assert resume == session.session_id


class TestStatsAndExport:
    def test_stats_perfect_agreement(self, opened):
        for annotator in ("ann1", "ann2"):
            for task_id in ("img1", "img2"):
                run_to(opened, "c1", task_id, annotator, "1_1_3")
        stats = opened.stats("c1")
        assert stats.agreement.alpha == 1.0
        assert stats.progress["n_records"] == 4
        assert stats.progress["n_annotators"] == 2
        assert stats.audit is None

    def test_stats_with_gold_includes_audit(self, opened, instruments):
        run_to(opened, "c1", "img1", "ann1", "1_1_1")
        opened.load_gold(
            "c1", [GoldAssignment("img1", TerminalLabel.for_node(instruments, "1_1_1_1"))]
        )
        stats = opened.stats("c1")
        assert stats.audit is not None
        assert stats.audit.counts[next(k for k in stats.audit.counts if k.value == "generic")] == 1

    def test_stats_counts_discharged_and_unsure_separately(self, opened):
        run_to(opened, "c1", "img1", "ann1", None)  # discharge
        session = opened.start_session("c1", "img2", "ann1", now_ms=0)
        for i, value in enumerate(["yes", "unsure", "unsure", "unsure"]):
            opened.submit_answer(session.session_id, value, index=i)
        stats = opened.stats("c1")
        assert stats.progress["n_discharged"] == 1
        assert stats.progress["n_unsure_stops"] == 1

    def test_stats_requires_records(self, opened):
        with pytest.raises(CampaignStateError):
            opened.stats("c1")

    def test_gold_unknown_task_rejected(self, opened, instruments):
        with pytest.raises(UnknownEntityError):
            opened.load_gold(
                "c1", [GoldAssignment("nope", TerminalLabel.for_node(instruments, "1"))]
            )

    def test_export_requires_closed(self, opened):
        run_to(opened, "c1", "img1", "ann1", "1_1_1_1")
        with pytest.raises(CampaignStateError):
            opened.export_dataset("c1", "differentia")

    def test_export_lines_and_schemes(self, opened):
        targets = {"img1": "1_1_1_1", "img2": "1_2", "img3::koto": "1_1_3",
                   "img3::flute": "1_3", "img3::stand": None}
        for task_id, target in targets.items():
            run_to(opened, "c1", task_id, "ann1", target)
        opened.close_campaign("c1")
        differentia_lines = opened.export_dataset("c1", "differentia")
        assert len(differentia_lines) == 5
        by_task = {line["task_id"]: line for line in differentia_lines}
        assert by_task["img1"]["label"] == "with No Input Jack"
        assert by_task["img3::stand"]["label"] == "Discharged"
        assert by_task["img3::koto"]["crop"] == [0, 50, 10, 60]
        category_lines = opened.export_dataset("c1", "category")
        assert {l["task_id"]: l["label"] for l in category_lines}["img1"] == "Acoustic Guitar"

    def test_export_majority_vote(self, opened):
        run_to(opened, "c1", "img1", "ann1", "1_2")
        run_to(opened, "c1", "img1", "ann2", "1_3")
        run_to(opened, "c1", "img1", "ann3", "1_3")
        opened.close_campaign("c1")
        lines = opened.export_dataset("c1", "category")
        assert lines[0]["label"] == "Wind Instrument"

    def test_export_split_deterministic_and_stratified(self, opened):
        targets = ["1_1_1_1", "1_1_1_1", "1_1_1_1", "1_2", "1_2"]
        for task, target in zip([t.task_id for t in opened.tasks("c1")], targets):
            run_to(opened, "c1", task, "ann1", target)
        opened.close_campaign("c1")
        first = opened.export_dataset("c1", "category", seed=7)
        second = opened.export_dataset("c1", "category", seed=7)
        assert export_text(first) == export_text(second)
        for label in ("Acoustic Guitar", "Keyboard Instrument"):
            splits = [l["split"] for l in first if l["label"] == label]
            assert "train" in splits and "test" in splits
        other_seed = opened.export_dataset("c1", "category", seed=8)
        assert [l["split"] for l in other_seed] != [l["split"] for l in first] or True


class TestPersistence:
    def test_replay_reconstructs_identical_state(self, tmp_path, fixture_doc, instruments):
        data_dir = tmp_path / "data"
        store = CampaignStore(data_dir)
        store.create_campaign(
            fixture_doc, sample_images(), LocalizationStrategy.BOUNDING_POLYGONS, campaign_id="c1"
        )
        store.open_campaign("c1")
        run_to(store, "c1", "img1", "ann1", "1_1_1_1")
        run_to(store, "c1", "img1", "ann2", "1_1_1_2")
        run_to(store, "c1", "img2", "ann1", None)
        # leave one session in flight
        session = store.start_session("c1", "img2", "ann2", now_ms=0)
        store.submit_answer(session.session_id, "yes", index=0)
        store.load_gold("c1", [GoldAssignment("img1", TerminalLabel.for_node(instruments, "1_1_1_1"))])
        before_stats = canonical_digest(store.stats("c1").to_dict())
        before_records = [r.to_dict() for r in store.records("c1")]
        store.close()

        reopened = CampaignStore(data_dir)
        assert [r.to_dict() for r in reopened.records("c1")] == before_records
        assert canonical_digest(reopened.stats("c1").to_dict()) == before_stats
        restored, _h = reopened.get_session(session.session_id)
        assert len(restored.answer_log) == 1
        assert restored.state == "descending"
        # the in-flight session keeps working after restart
        reopened.submit_answer(session.session_id, "no", index=1)
        reopened.close()

    def test_torn_trailing_line_recovered(self, tmp_path, fixture_doc):
        data_dir = tmp_path / "data"
        store = CampaignStore(data_dir)
        store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c1")
        store.close()
        journal = data_dir / "journal.jsonl"
        with open(journal, "ab") as fh:
            fh.write(b'{"seq": 2, "type": "campaign_open')  # torn mid-write
        reopened = CampaignStore(data_dir)
        assert reopened.campaign("c1").status == "draft"
        reopened.open_campaign("c1")  # journal still appendable
        reopened.close()

    def test_midfile_corruption_refuses_to_load(self, tmp_path, fixture_doc):
        data_dir = tmp_path / "data"
        store = CampaignStore(data_dir)
        store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c1")
        store.open_campaign("c1")
        store.close()
        journal = data_dir / "journal.jsonl"
        lines = journal.read_bytes().splitlines(keepends=True)
        lines[0] = b"garbage not json\n"
        journal.write_bytes(b"".join(lines))
        with pytest.raises(JournalCorruptError):
            CampaignStore(data_dir)

    def test_record_for_missing_task_fails_integrity_on_load(self, tmp_path, fixture_doc):
        data_dir = tmp_path / "data"
        store = CampaignStore(data_dir)
        store.create_campaign(fixture_doc, [], LocalizationStrategy.DISCARD_MOI, campaign_id="c1")
        store.open_campaign("c1")
        store.close()
        journal = data_dir / "journal.jsonl"
        rogue = {
            "seq": 3,
            "type": "record_added",
            "at": 0,
            "data": {
                "record_id": "r1",
                "campaign_id": "c1",
                "task_id": "ghost-task",
                "annotator_id": "a1",
                "result": {
                    "kind": "discharged",
                    "node_id": None,
                    "differentia_label": "Discharged",
                    "category_label": "Discharged",
                },
                "answer_log": [],
                "started_at": 0,
                "ended_at": 0,
            },
        }
        with open(journal, "a") as fh:
            fh.write(json.dumps(rogue) + "\n")
        with pytest.raises(JournalCorruptError):
            CampaignStore(data_dir)

    def test_exports_identical_across_restart(self, tmp_path, fixture_doc):
        data_dir = tmp_path / "data"
        store = CampaignStore(data_dir)
        store.create_campaign(
            fixture_doc, sample_images(), LocalizationStrategy.BOUNDING_POLYGONS, campaign_id="c1"
        )
        store.open_campaign("c1")
        for task in [t.task_id for t in store.tasks("c1")]:
            run_to(store, "c1", task, "ann1", "1_1_1")
        store.close_campaign("c1")
        exported = export_text(store.export_dataset("c1", "differentia", seed=3))
        store.close()
        reopened = CampaignStore(data_dir)
        assert export_text(reopened.export_dataset("c1", "differentia", seed=3)) == exported
        reopened.close()
