from __future__ import annotations

import json

import pytest

from differentia.cli import main, parse_model_spec
from differentia.errors import ModelSpecError

from conftest import FIXTURE_PATH, REPO_ROOT

GOLD_PATH = REPO_ROOT / "fixtures" / "sample_gold.jsonl"

DISAGREEMENT_CSV = "unit,r1,r2\nu1,a,b\nu2,b,a\n"
PERFECT_CSV = "unit,r1,r2\nu1,a,a\nu2,b,b\n"


def run(capsys, *argv) -> tuple[int, str, str]:
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestValidate:
    def test_fixture_exit_zero_with_two_warnings(self, capsys):
        code, out, _ = run(capsys, "validate", FIXTURE_PATH)
        assert code == 0
        assert "0 error(s), 2 warning(s)" in out

    def test_collision_file_exit_one(self, capsys, tmp_path, fixture_doc):
        for node in fixture_doc["nodes"]:
            if node["id"] == "1_1_2":
                node["differentia"] = "with 6 Strings"
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(fixture_doc))
        code, out, _ = run(capsys, "validate", bad)
        assert code == 1
        assert "sibling-differentia-collision" in out

    def test_missing_file_exit_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["validate", "no-such-file.json"])
        assert exc.value.code == 2

    def test_unparseable_file_exit_one(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        code, _, err = run(capsys, "validate", bad)
        assert code == 1
        assert "syntax-error" in err

    def test_json_output(self, capsys):
        code, out, _ = run(capsys, "validate", FIXTURE_PATH, "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["warnings"] == 2
        assert payload["errors"] == 0


class TestModelSpec:
    def test_plain_kind(self):
        assert parse_model_spec("perfect") == {"kind": "perfect"}

    def test_with_params(self):
        assert parse_model_spec("noisy:epsilon=0.2,seed=4") == {
            "kind": "noisy",
            "epsilon": 0.2,
            "seed": 4,
        }

    def test_alias(self):
        assert parse_model_spec("noisy:eps=0.1")["epsilon"] == 0.1

    @pytest.mark.parametrize("spec", ["wat", "noisy:epsilon=high", "noisy:epsilon", "perfect:x=1"])
    def test_bad_specs(self, spec):
        with pytest.raises(ModelSpecError):
            parse_model_spec(spec)


class TestSimulate:
    def test_perfect_annotators_agree(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--hierarchy", FIXTURE_PATH, "--gold", GOLD_PATH,
            "--model", "perfect", "--annotators", 8, "--seed", 0,
        )
        assert code == 0
        assert "Krippendorff's alpha: 1.0000" in out
        assert "correct" in out

    def test_knowledge_limited_only_generic_or_correct(self, capsys):
        code, out, _ = run(
            capsys,
            "simulate", "--hierarchy", FIXTURE_PATH, "--gold", GOLD_PATH,
            "--model", "knowledge_limited:depth_cap=2", "--annotators", 4, "--seed", 1, "--json",
        )
        assert code == 0
        audit = json.loads(out)["audit"]["counts"]
        assert audit["restricted"] == 0
        assert audit["misplaced"] == 0
        assert audit["generic"] > 0

    def test_byte_stable_given_seed(self, capsys):
        argv = [
            "simulate", "--hierarchy", FIXTURE_PATH, "--gold", GOLD_PATH,
            "--model", "noisy:epsilon=0.3", "--annotators", 5, "--seed", 7, "--json",
        ]
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second

    def test_noise_degrades_alpha_on_average(self, capsys):
        def mean_alpha(eps: float) -> float:
            total = 0.0
            for seed in range(30):
                _, out, _ = run(
                    capsys,
                    "simulate", "--hierarchy", FIXTURE_PATH, "--gold", GOLD_PATH,
                    "--model", f"noisy:epsilon={eps}", "--annotators", 4,
                    "--seed", seed, "--json",
                )
                total += json.loads(out)["agreement"]["alpha"]
            return total / 30

        alphas = [mean_alpha(eps) for eps in (0.0, 0.2, 0.4)]
        assert alphas[0] == 1.0
        assert alphas[0] >= alphas[1] >= alphas[2]

    def test_bad_model_spec_exit_two(self, capsys):
        code, _, err = run(
            capsys,
            "simulate", "--hierarchy", FIXTURE_PATH, "--gold", GOLD_PATH, "--model", "wishful",
        )
        assert code == 2
        assert "wishful" in err


class TestAlpha:
    def test_perfect_csv(self, capsys, tmp_path):
        csv = tmp_path / "m.csv"
        csv.write_text(PERFECT_CSV)
        code, out, _ = run(capsys, "alpha", csv)
        assert code == 0
        assert "Krippendorff's alpha: 1.0000" in out

    def test_complete_disagreement_csv(self, capsys, tmp_path):
        csv = tmp_path / "m.csv"
        csv.write_text(DISAGREEMENT_CSV)
        code, out, _ = run(capsys, "alpha", csv)
        assert code == 0
        assert "Krippendorff's alpha: -0.5000" in out

    def test_empty_csv_exit_one(self, capsys, tmp_path):
        csv = tmp_path / "empty.csv"
        csv.write_text("")
        code, _, err = run(capsys, "alpha", csv)
        assert code == 1
        assert "alpha-undefined" in err

    def test_json_outputs_exact_value(self, capsys, tmp_path):
        csv = tmp_path / "m.csv"
        csv.write_text(DISAGREEMENT_CSV)
        _, out, _ = run(capsys, "alpha", csv, "--json")
        assert json.loads(out)["alpha"] == -0.5

    def test_exclude_category(self, capsys, tmp_path):
        csv = tmp_path / "m.csv"
        csv.write_text("unit,r1,r2\nu1,a,a\nu2,UNRECOGNISED,b\n")
        _, full, _ = run(capsys, "alpha", csv, "--json")
        _, excluded, _ = run(capsys, "alpha", csv, "--json", "--exclude-category", "UNRECOGNISED")
        assert json.loads(full)["alpha"] < 1.0
        assert json.loads(excluded)["alpha"] == 1.0


class TestAudit:
    def write_lines(self, path, entries):
        path.write_text("".join(json.dumps(e) + "\n" for e in entries))

    def test_generic_example(self, capsys, tmp_path):
        records = tmp_path / "records.jsonl"
        gold = tmp_path / "gold.jsonl"
        self.write_lines(records, [{"task_id": "t1", "label": "1_1_1"}])
        self.write_lines(gold, [{"task_id": "t1", "label": "1_1_1_1"}])
        code, out, _ = run(
            capsys, "audit", "--hierarchy", FIXTURE_PATH, "--records", records, "--gold", gold, "--json"
        )
        assert code == 0
        assert json.loads(out)["counts"]["generic"] == 1

    def test_discharged_row(self, capsys, tmp_path):
        records = tmp_path / "records.jsonl"
        gold = tmp_path / "gold.jsonl"
        self.write_lines(records, [{"task_id": "t1", "label": "DISCHARGED"}])
        self.write_lines(gold, [{"task_id": "t1", "label": "1_3"}])
        code, out, _ = run(
            capsys, "audit", "--hierarchy", FIXTURE_PATH, "--records", records, "--gold", gold
        )
        assert code == 0
        assert "discharged_vs_gold" in out

    def test_missing_gold_exit_one(self, capsys, tmp_path):
        records = tmp_path / "records.jsonl"
        gold = tmp_path / "gold.jsonl"
        self.write_lines(records, [{"task_id": "t9", "label": "1_3"}])
        self.write_lines(gold, [])
        code, _, err = run(
            capsys, "audit", "--hierarchy", FIXTURE_PATH, "--records", records, "--gold", gold
        )
        assert code == 1
        assert "missing-gold" in err


class TestServeConfig:
    def test_missing_config_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["serve", "--config", "no-such.toml"])
        assert exc.value.code == 2

    def test_usage_error_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["simulate"])  # missing required flags
        assert exc.value.code == 2

    def test_occupied_port_exit_one(self, capsys, tmp_path):
        import socket

        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        config = tmp_path / "serve.toml"
        config.write_text(f'port = {port}\nhierarchy = "{FIXTURE_PATH}"\n')
        try:
            code, _, err = run(capsys, "serve", "--config", config)
        finally:
            blocker.close()
        assert code == 1
        assert "cannot bind" in err

    def test_corrupt_journal_refuses_to_start(self, capsys, tmp_path):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        journal = data_dir / "journal.jsonl"
        journal.write_text('not json\n{"seq": 2, "type": "x", "at": 0, "data": {}}\n')
        config = tmp_path / "serve.toml"
        config.write_text(f'port = 0\ndata_dir = "data"\nhierarchy = "{FIXTURE_PATH}"\n')
        code, _, err = run(capsys, "serve", "--config", config)
        assert code == 1
        assert "journal-corrupt" in err
        assert "Restore" in err
