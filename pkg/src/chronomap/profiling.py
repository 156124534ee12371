"""Describe superclasses against the questionnaire and the diaries.

Everything here takes a dataset plus one superclass label per person (in
dataset order, or a ``person_id -> label`` mapping).
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .data import DAYS, QUARTERS_PER_HOUR, Dataset, format_clock, parse_clock, parse_day, slot_index
from .errors import DegenerateTableError, SchemaError, ValidationError
from .stats import chi2_sf
from .superclass import label_key

log = logging.getLogger(__name__)


def _labels_for(dataset: Dataset, partition) -> List[str]:
    if isinstance(partition, Mapping):
        try:
            return [partition[pid] for pid in dataset.person_ids]
        except KeyError as exc:
            raise ValidationError(f"person {exc.args[0]!r} has no superclass") from None
    labels = list(partition)
    if len(labels) != len(dataset):
        raise ValidationError("need one superclass label per person")
    return labels


def _columns(labels, superclasses=None) -> List[str]:
    if superclasses is not None:
        return list(superclasses)
    return sorted(set(labels), key=label_key)


# -- contingency and chi-square ------------------------------------------------


@dataclass
class ContingencyTable:
    question: str
    rows: List[str]
    cols: List[str]
    counts: np.ndarray

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def empty_columns(self) -> List[str]:
        return [c for c, n in zip(self.cols, self.col_totals) if n == 0]


def contingency(dataset: Dataset, partition, question: str, superclasses=None) -> ContingencyTable:
    """Count persons per (modality, superclass) for one question."""
    if question not in dataset.schema:
        raise SchemaError(f"unknown question {question!r}")
    labels = _labels_for(dataset, partition)
    rows = list(dataset.schema.modalities(question))
    cols = _columns(labels, superclasses)
    r_idx = {m: i for i, m in enumerate(rows)}
    c_idx = {c: j for j, c in enumerate(cols)}
    counts = np.zeros((len(rows), len(cols)), dtype=np.int64)
    for answer, lab in zip(dataset.answers(question), labels):
        counts[r_idx[answer], c_idx[lab]] += 1
    table = ContingencyTable(question, rows, cols, counts)
    if table.empty_columns:
        log.warning("question %s: empty superclass column(s) %s", question, table.empty_columns)
    return table


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    p_value: float


def chi_square_test(table) -> ChiSquareResult:
    """Pearson's independence test.

    Rows or columns with a zero margin are removed first (with a warning)
    and the degrees of freedom follow the reduced shape.
    """
    counts = np.asarray(getattr(table, "counts", table), dtype=float)
    keep_r = counts.sum(axis=1) > 0
    keep_c = counts.sum(axis=0) > 0
    if not keep_r.all() or not keep_c.all():
        warnings.warn("dropping zero-margin rows/columns before the chi-square test")
        counts = counts[keep_r][:, keep_c]
    r, c = counts.shape
    if r < 2 or c < 2:
        raise DegenerateTableError("chi-square test needs at least 2 rows and 2 columns")
    total = counts.sum()
    expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / total
    stat = float(((counts - expected) ** 2 / expected).sum())
    dof = (r - 1) * (c - 1)
    return ChiSquareResult(stat, dof, chi2_sf(stat, dof))


@dataclass
class QuestionSelection:
    kept: List[str]
    dropped: List[str]
    results: Dict[str, Optional[ChiSquareResult]]
    alpha: float


def select_discriminant_questions(dataset: Dataset, partition, alpha: float = 0.05) -> QuestionSelection:
    """Keep the questions whose answers depend on the superclass at level ``alpha``.

    Questions whose table is degenerate (one modality or one superclass
    observed) cannot be tested and are dropped with no result.
    """
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    kept, dropped, results = [], [], {}
    for question in dataset.schema.names:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                res = chi_square_test(contingency(dataset, partition, question))
        except DegenerateTableError:
            res = None
        results[question] = res
        if res is not None and alpha > 0 and res.p_value <= alpha:
            kept.append(question)
        else:
            dropped.append(question)
    return QuestionSelection(kept, dropped, results, alpha)


# -- test values ---------------------------------------------------------------


def test_value(x, n_c, n_m, n) -> float:
    """Standardised deviation of a cell count from its hypergeometric mean.

    Drawing the ``n_c`` members of a superclass at random from ``n`` persons,
    ``n_m`` of whom chose the modality, the count ``x`` has mean
    ``n_c * n_m / n`` and variance ``n_c * (n - n_c) / (n - 1) * p * (1 - p)``
    with ``p = n_m / n``. Returns 0 when that variance vanishes.
    """
    if n <= 1:
        return 0.0
    p = n_m / n
    var = n_c * (n - n_c) / (n - 1) * p * (1 - p)
    if var <= 0:
        return 0.0
    return (x - n_c * p) / math.sqrt(var)


# keep pytest from collecting the helper above when imported into a test module
test_value.__test__ = False


@dataclass
class TestValueTable:
    __test__ = False

    question: str
    modalities: List[str]
    labels: List[str]
    counts: np.ndarray
    percentages: np.ndarray  # 100 * x / n_c, per (modality, superclass)
    total_percentages: np.ndarray  # 100 * n_m / n, per modality
    values: np.ndarray
    highlight: np.ndarray
    uninformative: np.ndarray  # modality chosen by nobody or by everyone
    threshold: float = 1.0

    def rounded(self) -> np.ndarray:
        return np.rint(self.percentages).astype(int)


def test_values(table: ContingencyTable, threshold: float = 1.0) -> TestValueTable:
    counts = np.asarray(table.counts, dtype=np.int64)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    n = int(counts.sum())
    if np.any(col == 0):
        raise ValidationError(f"question {table.question}: every superclass must be non-empty")
    values = np.zeros(counts.shape)
    for i in range(counts.shape[0]):
        for j in range(counts.shape[1]):
            values[i, j] = test_value(int(counts[i, j]), int(col[j]), int(row[i]), n)
    uninformative = (row == 0) | (row == n)
    values[uninformative, :] = 0.0
    return TestValueTable(
        question=table.question,
        modalities=list(table.rows),
        labels=list(table.cols),
        counts=counts,
        percentages=100.0 * counts / col,
        total_percentages=100.0 * row / n,
        values=values,
        highlight=values > threshold,
        uninformative=uninformative,
        threshold=threshold,
    )


test_values.__test__ = False


def format_test_value_table(tv: TestValueTable) -> str:
    """Integer-percentage rendering; highlighted cells carry a trailing ``*``."""
    width = max(8, *(len(m) for m in tv.modalities))
    head = f"{tv.question:<{width}}" + "".join(f"{c:>6}" for c in tv.labels) + f"{'Total':>7}"
    lines = [head]
    rounded = tv.rounded()
    for i, m in enumerate(tv.modalities):
        cells = "".join(
            f"{str(rounded[i, j]) + ('*' if tv.highlight[i, j] else ' '):>6}" for j in range(len(tv.labels))
        )
        lines.append(f"{m:<{width}}{cells}{int(round(tv.total_percentages[i])):>6} ")
    return "\n".join(lines) + "\n"


# -- diary side ----------------------------------------------------------------


@dataclass(frozen=True)
class Probe:
    day: int
    quarter: int

    @property
    def slot(self) -> int:
        return slot_index(self.day, self.quarter)

    @property
    def name(self) -> str:
        hours, minutes = divmod(self.quarter * 15, 60)
        suffix = f"{hours}h" if minutes == 0 else f"{hours}h{minutes:02d}"
        return f"{DAYS[self.day]}_{suffix}"

    def __str__(self):
        return f"{DAYS[self.day]}@{format_clock(self.quarter)}"


DEFAULT_PROBES = tuple(
    Probe(parse_day(d), h * QUARTERS_PER_HOUR) for d in ("Sat", "Sun", "Wed") for h in (10, 16, 21)
)


def parse_probes(text: str) -> List[Probe]:
    """``"Sat@10:00,Sun@16:00"`` -> probes."""
    probes = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        day, sep, clock = item.partition("@")
        if not sep:
            raise ValueError(f"probe {item!r} must look like Day@HH:MM")
        probe = Probe(parse_day(day), parse_clock(clock))
        probe.slot  # range check
        probes.append(probe)
    return probes


@dataclass
class HeadcountTable:
    labels: List[str]
    probes: List[Probe]
    sizes: np.ndarray
    counts: np.ndarray  # (superclass, probe)

    @property
    def percentages(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.sizes[:, None] > 0, 100.0 * self.counts / self.sizes[:, None], 0.0)


def _members(labels, cols):
    labels = np.asarray(labels, dtype=object)
    return {c: np.flatnonzero(labels == c) for c in cols}


def headcounts(dataset: Dataset, partition, probes: Sequence[Probe] = DEFAULT_PROBES,
               superclasses=None) -> HeadcountTable:
    labels = _labels_for(dataset, partition)
    cols = _columns(labels, superclasses)
    members = _members(labels, cols)
    X = dataset.matrix
    slots = [p.slot for p in probes]
    counts = np.zeros((len(cols), len(probes)), dtype=np.int64)
    for j, c in enumerate(cols):
        if len(members[c]):
            counts[j] = X[np.ix_(members[c], slots)].sum(axis=0).astype(np.int64)
    sizes = np.array([len(members[c]) for c in cols], dtype=np.int64)
    return HeadcountTable(cols, list(probes), sizes, counts)


@dataclass
class ActivityCurve:
    values: np.ndarray
    size: Optional[int] = None  # unknown when read back from curves.csv


def average_activity_profile(dataset: Dataset, partition, superclasses=None) -> Dict[str, ActivityCurve]:
    """Slot-wise mean of the members' diaries for each superclass."""
    labels = _labels_for(dataset, partition)
    cols = _columns(labels, superclasses)
    members = _members(labels, cols)
    curves = {}
    for c in cols:
        idx = members[c]
        if len(idx) == 0:
            log.warning("superclass %s is empty; no activity curve", c)
            continue
        curves[c] = ActivityCurve(dataset.matrix[idx].mean(axis=0), len(idx))
    return curves


# -- questionnaire vs diary ----------------------------------------------------

_FREQ = ("Usually", "Sometimes", "Never")


def _is_night(probe: Probe) -> bool:
    return probe.quarter >= 21 * QUARTERS_PER_HOUR or probe.quarter < 6 * QUARTERS_PER_HOUR


@dataclass(frozen=True)
class CoherenceRow:
    superclass: str
    question: str
    usually: float
    sometimes: float
    never: float
    observed: float
    probe: str
    divergence: float
    flagged: bool


def coherence_report(dataset: Dataset, partition, probes: Sequence[Probe] = DEFAULT_PROBES,
                     gap: float = 20.0) -> List[CoherenceRow]:
    """Compare self-reported Night/Sat/Sun/Wed work with diary headcounts.

    For each superclass, the share of members reporting they work that day
    at least sometimes spans ``[usually, usually + sometimes]``. The highest
    headcount percentage among the matching probes (Night uses probes from
    21:00 to 6:00) is checked against that band; a miss by more than ``gap``
    points is flagged.
    """
    labels = _labels_for(dataset, partition)
    heads = headcounts(dataset, labels, probes)
    pct = heads.percentages
    relevant = {
        "Night": [i for i, p in enumerate(probes) if _is_night(p)],
        "Sat": [i for i, p in enumerate(probes) if p.day == DAYS.index("Sat")],
        "Sun": [i for i, p in enumerate(probes) if p.day == DAYS.index("Sun")],
        "Wed": [i for i, p in enumerate(probes) if p.day == DAYS.index("Wed")],
    }
    rows = []
    for question, probe_idx in relevant.items():
        if question not in dataset.schema or not probe_idx:
            continue
        if not set(_FREQ) <= set(dataset.schema.modalities(question)):
            continue
        table = contingency(dataset, labels, question, heads.labels)
        for j, label in enumerate(heads.labels):
            size = table.col_totals[j]
            if size == 0:
                continue
            share = {m: 100.0 * table.counts[table.rows.index(m), j] / size for m in _FREQ}
            best = max(probe_idx, key=lambda i: (pct[j, i], -i))
            observed = float(pct[j, best])
            low, high = share["Usually"], share["Usually"] + share["Sometimes"]
            divergence = max(low - observed, observed - high, 0.0)
            rows.append(CoherenceRow(label, question, share["Usually"], share["Sometimes"],
                                     share["Never"], observed, probes[best].name,
                                     divergence, divergence > gap))
    return rows


# -- exports -------------------------------------------------------------------


def _fmt(x) -> str:
    return f"{float(x):.6f}"


def write_test_value_table(tv: TestValueTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["modality", *tv.labels, "Total", *(f"test_{c}" for c in tv.labels),
                    *(f"bold_{c}" for c in tv.labels)])
        for i, m in enumerate(tv.modalities):
            w.writerow([m, *map(_fmt, tv.percentages[i]), _fmt(tv.total_percentages[i]),
                        *map(_fmt, tv.values[i]), *(str(bool(b)).lower() for b in tv.highlight[i])])


def write_chi_square(selection: QuestionSelection, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["question", "statistic", "dof", "p_value", "kept"])
        for q, res in selection.results.items():
            if res is None:
                w.writerow([q, "", "", "", "false"])
            else:
                w.writerow([q, _fmt(res.statistic), res.dof, f"{res.p_value:.6e}",
                            str(q in selection.kept).lower()])


def write_headcounts(table: HeadcountTable, path) -> None:
    pct = table.percentages
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["superclass", "probe", "count", "pct"])
        for j, c in enumerate(table.labels):
            for i, p in enumerate(table.probes):
                w.writerow([c, p.name, int(table.counts[j, i]), _fmt(pct[j, i])])


def write_curves(curves: Dict[str, ActivityCurve], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        width = len(next(iter(curves.values())).values) if curves else 0
        w.writerow(["superclass"] + [f"s{i}" for i in range(width)])
        for c, curve in curves.items():
            w.writerow([c] + [repr(float(v)) for v in curve.values])


def read_curves(path) -> Dict[str, ActivityCurve]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader)
        return {row[0]: ActivityCurve(np.array([float(v) for v in row[1:]]))
                for row in reader if row}


def write_coherence(rows: List[CoherenceRow], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["superclass", "question", "usually", "sometimes", "never",
                    "observed_pct", "probe", "divergence", "flagged"])
        for r in rows:
            w.writerow([r.superclass, r.question, _fmt(r.usually), _fmt(r.sometimes), _fmt(r.never),
                        _fmt(r.observed), r.probe, _fmt(r.divergence), str(r.flagged).lower()])
