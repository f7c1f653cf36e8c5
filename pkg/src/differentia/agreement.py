"""Inter-annotator agreement (nominal Krippendorff's alpha) and timing stats.

Alpha is computed from a coincidence matrix: within each unit that holds at
least two values, every ordered pair of distinct value slots contributes
1/(m_u - 1) to the coincidence of its two categories. Observed disagreement
is the off-diagonal mass over n; expected disagreement comes from the
category marginals; alpha = 1 - D_o/D_e. Categories are compared nominally;
the tree distance between labels does not soften a disagreement.

Accumulation uses exact rational arithmetic (fractions.Fraction), so perfect
agreement is exactly 1.0 and hand-computable cases come out exact; the final
coefficient is reported at full double precision and displayed at 4 decimals.
"""

from __future__ import annotations

import csv
import io
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DuplicateCellError, UndefinedAlphaError
from .hierarchy import Hierarchy
from .traversal import DISCHARGED_CATEGORY

# Reserved category for units an annotator saw but could not classify at all
# (distinct from discharged, which is an explicit root-check rejection).
UNRECOGNISED_CATEGORY = "UNRECOGNISED"

SCHEME_DIFFERENTIA = "differentia"
SCHEME_CATEGORY = "category"
LABELING_SCHEMES = (SCHEME_DIFFERENTIA, SCHEME_CATEGORY)


@dataclass
class ReliabilityMatrix:
    """Units x annotators category assignments with missing cells."""

    units: list[str]
    annotators: list[str]
    cells: dict[tuple[str, str], str] = field(default_factory=dict)

    def value(self, unit: str, annotator: str) -> str | None:
        return self.cells.get((unit, annotator))

    def unit_values(self, unit: str, exclude: frozenset[str] = frozenset()) -> list[str]:
        values = []
        for annotator in self.annotators:
            v = self.cells.get((unit, annotator))
            if v is not None and v not in exclude:
                values.append(v)
        return values


@dataclass(frozen=True)
class CoincidenceMatrix:
    categories: list[str]
    o: list[list[Fraction]]  # symmetric pairable-value coincidences
    n_c: list[Fraction]  # per-category marginals (row sums)
    n: Fraction  # grand total


@dataclass(frozen=True)
class AgreementReport:
    alpha: float
    n_units_used: int
    n_units_dropped: int
    per_category_counts: dict[str, dict[str, int]]  # category -> annotator -> count
    annotators: list[str]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_display": f"{self.alpha:.4f}",
            "n_units_used": self.n_units_used,
            "n_units_dropped": self.n_units_dropped,
            "annotators": list(self.annotators),
            "per_category_counts": {
                cat: dict(by_annotator) for cat, by_annotator in self.per_category_counts.items()
            },
        }


@dataclass(frozen=True)
class AnnotatorTiming:
    mean_s: float | None
    median_s: float | None
    count: int


@dataclass(frozen=True)
class TimingStats:
    per_annotator: dict[str, AnnotatorTiming]
    overall_mean_s: float | None
    n_sessions: int

    def to_dict(self) -> dict:
        return {
            "per_annotator": {
                a: {"mean_s": t.mean_s, "median_s": t.median_s, "count": t.count}
                for a, t in self.per_annotator.items()
            },
            "overall_mean_s": self.overall_mean_s,
            "n_sessions": self.n_sessions,
        }


def build_reliability(records: Iterable, labeling_scheme: str = SCHEME_DIFFERENTIA) -> ReliabilityMatrix:
    """One cell per (task, annotator) from annotation records.

    Records need task_id, annotator_id and result attributes. The category id
    is always the node id (or the reserved discharged id); the labeling
    scheme changes displayed label text elsewhere, not category identity.
    Unit and annotator order follow first appearance.
    """
    if labeling_scheme not in LABELING_SCHEMES:
        raise ValueError(f"unknown labeling scheme {labeling_scheme!r}")
    matrix = ReliabilityMatrix(units=[], annotators=[], cells={})
    for record in records:
        unit = record.task_id
        annotator = record.annotator_id
        if unit not in matrix.units:
            matrix.units.append(unit)
        if annotator not in matrix.annotators:
            matrix.annotators.append(annotator)
        key = (unit, annotator)
        if key in matrix.cells:
            raise DuplicateCellError(f"two records for task {unit!r} by annotator {annotator!r}")
        matrix.cells[key] = record.result.category_key
    return matrix


def _pairable_units(
    m: ReliabilityMatrix, exclude: frozenset[str]
) -> tuple[list[list[str]], int]:
    """Value lists of units with >= 2 present values, plus the dropped count."""
    used: list[list[str]] = []
    dropped = 0
    for unit in m.units:
        values = m.unit_values(unit, exclude)
        if len(values) >= 2:
            used.append(values)
        else:
            dropped += 1
    return used, dropped


def build_coincidence(
    m: ReliabilityMatrix, exclude_categories: frozenset[str] = frozenset()
) -> CoincidenceMatrix:
    """Coincidence matrix over pairable values, exact rational entries."""
    used, _ = _pairable_units(m, exclude_categories)
    categories = sorted({v for values in used for v in values})
    index = {c: i for i, c in enumerate(categories)}
    size = len(categories)
    o = [[Fraction(0)] * size for _ in range(size)]
    for values in used:
        weight = Fraction(1, len(values) - 1)
        for i, a in enumerate(values):
            for j, b in enumerate(values):
                if i != j:
                    o[index[a]][index[b]] += weight
    n_c = [sum(row, Fraction(0)) for row in o]
    return CoincidenceMatrix(categories=categories, o=o, n_c=n_c, n=sum(n_c, Fraction(0)))


def krippendorff_alpha(
    m: ReliabilityMatrix, exclude_categories: frozenset[str] = frozenset()
) -> float:
    """Nominal-data alpha over the matrix; units with < 2 values are dropped.

    Returns 1.0 by convention when only a single category is ever observed
    (expected disagreement is zero). Raises UndefinedAlphaError when no unit
    is pairable.
    """
    cm = build_coincidence(m, exclude_categories)
    if cm.n == 0:
        raise UndefinedAlphaError("no unit has two or more values; alpha is undefined")
    size = len(cm.categories)
    d_observed = sum(
        (cm.o[c][k] for c in range(size) for k in range(size) if c != k), Fraction(0)
    ) / cm.n
    d_expected = sum(
        (cm.n_c[c] * cm.n_c[k] for c in range(size) for k in range(size) if c != k),
        Fraction(0),
    ) / (cm.n * (cm.n - 1))
    if d_expected == 0:
        return 1.0
    return float(1 - d_observed / d_expected)


def agreement_report(
    m: ReliabilityMatrix, exclude_categories: frozenset[str] = frozenset()
) -> AgreementReport:
    """Alpha plus per-annotator per-category tallies over all present cells."""
    alpha = krippendorff_alpha(m, exclude_categories)
    _, dropped = _pairable_units(m, exclude_categories)
    counts: dict[str, dict[str, int]] = {}
    for (unit, annotator), category in m.cells.items():
        by_annotator = counts.setdefault(category, {})
        by_annotator[annotator] = by_annotator.get(annotator, 0) + 1
    return AgreementReport(
        alpha=alpha,
        n_units_used=len(m.units) - dropped,
        n_units_dropped=dropped,
        per_category_counts=counts,
        annotators=list(m.annotators),
    )


def _category_rows(report: AgreementReport, h: Hierarchy | None) -> list[tuple[str, str, str]]:
    """(category id, differentia text, category label) rows in display order."""
    observed = set(report.per_category_counts)
    rows: list[tuple[str, str, str]] = []
    if h is not None:
        for node in h.nodes.values():
            rows.append((node.node_id, node.differentia, node.category_label))
            observed.discard(node.node_id)
        for reserved in (DISCHARGED_CATEGORY, UNRECOGNISED_CATEGORY):
            if reserved in observed:
                rows.append((reserved, reserved.capitalize(), reserved.capitalize()))
                observed.discard(reserved)
        for other in sorted(observed):
            rows.append((other, other, other))
    else:
        for category in sorted(observed):
            rows.append((category, category, category))
    return rows


def render_report(report: AgreementReport, h: Hierarchy | None = None) -> str:
    """Aligned-column table: one row per category, one column per annotator,
    differentia and category labels side by side, alpha at 4 decimals last."""
    rows = _category_rows(report, h)
    id_w = max([len("Id.")] + [len(r[0]) for r in rows])
    diff_w = max([len("Differentia")] + [len(r[1]) for r in rows])
    cat_w = max([len("Category")] + [len(r[2]) for r in rows])
    ann_ws = [max(len(a), 5) for a in report.annotators]

    def fmt(cells: Sequence[str]) -> str:
        head = f"{cells[0]:<{id_w}}  {cells[1]:<{diff_w}}  {cells[2]:<{cat_w}}"
        tail = "  ".join(f"{c:>{w}}" for c, w in zip(cells[3:], ann_ws))
        return (head + "  " + tail).rstrip()

    lines = [fmt(["Id.", "Differentia", "Category", *report.annotators])]
    lines.append("-" * len(lines[0]))
    for category, differentia, label in rows:
        by_annotator = report.per_category_counts.get(category, {})
        counts = [str(by_annotator.get(a, 0)) for a in report.annotators]
        lines.append(fmt([category, differentia, label, *counts]))
    lines.append("-" * len(lines[0]))
    lines.append(f"Krippendorff's alpha: {report.alpha:.4f}")
    lines.append(f"Units used: {report.n_units_used}  dropped: {report.n_units_dropped}")
    return "\n".join(lines) + "\n"


def timing_stats(records: Iterable) -> TimingStats:
    """Per-annotator mean/median session duration in seconds.

    Only records with both started_at and ended_at count; annotators with no
    terminal sessions get count 0 and undefined means.
    """
    durations: dict[str, list[float]] = {}
    for record in records:
        annotator = record.annotator_id
        durations.setdefault(annotator, [])
        if record.ended_at is None or record.started_at is None:
            continue
        durations[annotator].append((record.ended_at - record.started_at) / 1000.0)
    per_annotator = {}
    all_durations: list[float] = []
    for annotator, values in durations.items():
        if values:
            per_annotator[annotator] = AnnotatorTiming(
                mean_s=statistics.fmean(values), median_s=statistics.median(values), count=len(values)
            )
            all_durations.extend(values)
        else:
            per_annotator[annotator] = AnnotatorTiming(mean_s=None, median_s=None, count=0)
    overall = statistics.fmean(all_durations) if all_durations else None
    return TimingStats(
        per_annotator=per_annotator, overall_mean_s=overall, n_sessions=len(all_durations)
    )


# --- CSV interchange: header row = annotator ids, first column = unit ids ---


def read_matrix_csv(source: str | Path) -> ReliabilityMatrix:
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(source))
    rows = [row for row in reader if row]
    if not rows:
        raise UndefinedAlphaError("empty matrix CSV")
    annotators = [cell.strip() for cell in rows[0][1:]]
    matrix = ReliabilityMatrix(units=[], annotators=annotators, cells={})
    for row in rows[1:]:
        unit = row[0].strip()
        if unit in matrix.units:
            raise DuplicateCellError(f"duplicate unit row {unit!r}")
        matrix.units.append(unit)
        for annotator, cell in zip(annotators, row[1:]):
            value = cell.strip()
            if value:
                matrix.cells[(unit, annotator)] = value
    return matrix


def write_matrix_csv(m: ReliabilityMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["unit", *m.annotators])
    for unit in m.units:
        writer.writerow([unit, *[m.cells.get((unit, a), "") for a in m.annotators]])
    return out.getvalue()
