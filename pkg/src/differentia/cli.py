"""Operator command line: validate hierarchies, simulate annotators, compute
agreement, audit against gold, and run the annotation service.

Exit codes: 0 success, 1 domain error (bad data, undefined statistic,
error-severity diagnostics), 2 usage error (bad flags, missing files).
All report-emitting commands are byte-stable for identical inputs and seeds;
--json switches any command to machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import socket
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import agreement as agreement_mod
from .campaign import AnnotationRecord, CampaignStore
from .errors import DifferentiaError, ModelSpecError
from .hierarchy import Hierarchy, has_errors, load_hierarchy, validate
from .outcomes import (
    GoldAssignment,
    SimulatedAnnotatorModel,
    audit_report,
    derive_seed,
    render_audit,
    simulate_annotator,
)
from .traversal import DISCHARGED_CATEGORY, TerminalLabel

_MODEL_PARAM_ALIASES = {"eps": "epsilon", "cap": "depth_cap"}
_MODEL_FLOAT_PARAMS = {"epsilon"}
_MODEL_INT_PARAMS = {"depth_cap", "overshoot", "seed"}


def parse_model_spec(spec: str) -> dict:
    """Parse "kind" or "kind:key=value,key=value" into model kwargs."""
    kind, _, params = spec.partition(":")
    kind = kind.strip()
    kwargs: dict = {"kind": kind}
    if params:
        for pair in params.split(","):
            key, eq, value = pair.partition("=")
            if not eq:
                raise ModelSpecError(f"bad model parameter {pair!r}; expected key=value")
            key = _MODEL_PARAM_ALIASES.get(key.strip(), key.strip())
            value = value.strip()
            try:
                if key in _MODEL_FLOAT_PARAMS:
                    kwargs[key] = float(value)
                elif key in _MODEL_INT_PARAMS:
                    kwargs[key] = int(value)
                else:
                    raise ModelSpecError(f"unknown model parameter {key!r}")
            except ValueError as exc:
                raise ModelSpecError(f"bad value for {key!r}: {value!r}") from exc
    try:
        SimulatedAnnotatorModel(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ModelSpecError(str(exc)) from exc
    return kwargs


def _label_from_wire(h: Hierarchy, value: str) -> TerminalLabel:
    if value == DISCHARGED_CATEGORY:
        return TerminalLabel.discharged()
    return TerminalLabel.for_node(h, value)


def _read_labeled_lines(path: Path) -> list[dict]:
    entries = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DifferentiaError(f"{path}:{lineno}: {exc.msg}", code="syntax-error") from exc
        if "task_id" not in entry or "label" not in entry:
            raise DifferentiaError(
                f"{path}:{lineno}: each line needs task_id and label", code="invalid-document"
            )
        entries.append(entry)
    return entries


def _require_file(path_str: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        print(f"error: file not found: {path}", file=sys.stderr)
        raise SystemExit(2)
    return path


def cmd_validate(args: argparse.Namespace) -> int:
    path = _require_file(args.hierarchy)
    h = load_hierarchy(path)
    diagnostics = validate(h)
    if args.json:
        print(
            json.dumps(
                {
                    "diagnostics": [
                        {
                            "severity": d.severity,
                            "code": d.code,
                            "node_id": d.node_id,
                            "message": d.message,
                        }
                        for d in diagnostics
                    ],
                    "errors": sum(1 for d in diagnostics if d.severity == "error"),
                    "warnings": sum(1 for d in diagnostics if d.severity == "warning"),
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        for d in diagnostics:
            where = f" node={d.node_id}" if d.node_id else ""
            print(f"{d.severity}: {d.code}{where}: {d.message}")
        errors = sum(1 for d in diagnostics if d.severity == "error")
        warnings = len(diagnostics) - errors
        print(f"{len(h)} nodes, {errors} error(s), {warnings} warning(s)")
    return 1 if has_errors(diagnostics) else 0


def _simulation_records(
    h: Hierarchy, golds: list[GoldAssignment], model_kwargs: dict, annotators: int, seed: int
) -> list[AnnotationRecord]:
    records = []
    for i in range(1, annotators + 1):
        annotator_id = f"sim_{i}"
        for gold in golds:
            if gold.gold.kind != "node":
                continue
            model = SimulatedAnnotatorModel(
                **{**model_kwargs, "seed": derive_seed(seed, annotator_id, gold.task_id)}
            )
            result = simulate_annotator(h, gold.gold.node_id, model)
            records.append(
                AnnotationRecord(
                    record_id=f"sim-{annotator_id}-{gold.task_id}",
                    campaign_id="simulation",
                    task_id=gold.task_id,
                    annotator_id=annotator_id,
                    result=result,
                    answer_log=[],
                    started_at=0,
                    ended_at=0,
                )
            )
    return records


def cmd_simulate(args: argparse.Namespace) -> int:
    hierarchy_path = _require_file(args.hierarchy)
    gold_path = _require_file(args.gold)
    model_kwargs = parse_model_spec(args.model)
    h = load_hierarchy(hierarchy_path)
    golds = [
        GoldAssignment(task_id=e["task_id"], gold=_label_from_wire(h, e["label"]))
        for e in _read_labeled_lines(gold_path)
    ]
    records = _simulation_records(h, golds, model_kwargs, args.annotators, args.seed)
    matrix = agreement_mod.build_reliability(records, args.scheme)
    report = agreement_mod.agreement_report(matrix)
    audit = audit_report(h, [(r.task_id, r.result) for r in records], golds)
    if args.json:
        print(
            json.dumps(
                {
                    "model": args.model,
                    "annotators": args.annotators,
                    "seed": args.seed,
                    "agreement": report.to_dict(),
                    "audit": audit.to_dict(),
                },
                indent=2,
                sort_keys=True,
            )
        )
    else:
        print(f"Simulated annotators: {args.annotators}  model: {args.model}  seed: {args.seed}")
        print()
        print(agreement_mod.render_report(report, h), end="")
        print()
        print("Audit against gold:")
        print(render_audit(audit, h), end="")
    return 0


def cmd_alpha(args: argparse.Namespace) -> int:
    path = _require_file(args.matrix)
    matrix = agreement_mod.read_matrix_csv(path)
    exclude = frozenset(args.exclude_category or [])
    report = agreement_mod.agreement_report(matrix, exclude)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(agreement_mod.render_report(report), end="")
    return 0


def cmd_audit(args: argparse.Namespace) -> int:
    hierarchy_path = _require_file(args.hierarchy)
    records_path = _require_file(args.records)
    gold_path = _require_file(args.gold)
    h = load_hierarchy(hierarchy_path)
    annotations = [
        (e["task_id"], _label_from_wire(h, e["label"])) for e in _read_labeled_lines(records_path)
    ]
    golds = [
        GoldAssignment(task_id=e["task_id"], gold=_label_from_wire(h, e["label"]))
        for e in _read_labeled_lines(gold_path)
    ]
    report = audit_report(h, annotations, golds)
    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(render_audit(report, h), end="")
    return 0


def load_config(path: Path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config_path = _require_file(args.config)
    config = load_config(config_path)
    base = config_path.parent

    def resolve(key: str) -> Path | None:
        value = config.get(key)
        if value is None:
            return None
        path = Path(value)
        return path if path.is_absolute() else base / path

    host = config.get("host", "127.0.0.1")
    port = int(config.get("port", 8077))
    data_dir = resolve("data_dir") or base / "data"
    hierarchy_path = resolve("hierarchy")
    default_hierarchy = None
    if hierarchy_path is not None:
        default_hierarchy = json.loads(Path(hierarchy_path).read_text(encoding="utf-8"))

    store = CampaignStore(data_dir)
    app = create_app(
        store,
        default_hierarchy=default_hierarchy,
        image_root=resolve("image_root"),
        ui_dist=resolve("ui_dist"),
    )
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        sock.bind((host, port))
    except OSError as exc:
        print(f"error: cannot bind {host}:{port}: {exc}", file=sys.stderr)
        store.close()
        return 1
    sock.listen(128)
    print(f"serving on http://{host}:{sock.getsockname()[1]} (data: {data_dir})", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    try:
        server.run(sockets=[sock])
    finally:
        store.close()
        sock.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="differentia",
        description="Genus-differentia annotation tooling: hierarchy checks, simulation, agreement, audit, service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a hierarchy document and print diagnostics")
    p.add_argument("hierarchy", help="hierarchy JSON document")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("simulate", help="run simulated annotators over gold tasks")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--gold", required=True, help="JSONL of {task_id, label}")
    p.add_argument(
        "--model",
        required=True,
        help="annotator model, e.g. perfect | noisy:epsilon=0.2 | knowledge_limited:depth_cap=2 "
        "| partial_view:overshoot=1 | mislabeler",
    )
    p.add_argument("--annotators", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scheme", choices=list(agreement_mod.LABELING_SCHEMES), default="differentia")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("alpha", help="Krippendorff's alpha over a reliability matrix CSV")
    p.add_argument("matrix", help="CSV: header=annotators, first column=unit ids, empty=missing")
    p.add_argument("--exclude-category", action="append", metavar="CATEGORY")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_alpha)

    p = sub.add_parser("audit", help="classify annotations against gold labels")
    p.add_argument("--hierarchy", required=True)
    p.add_argument("--records", required=True, help="JSONL of {task_id, label}")
    p.add_argument("--gold", required=True, help="JSONL of {task_id, label}")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("serve", help="run the annotation service until interrupted")
    p.add_argument("--config", required=True, help="TOML config: port, data_dir, hierarchy, image_root, ui_dist")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ModelSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DifferentiaError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
