"""Weekly diaries, questionnaire records and their CSV/schema file formats.

A weekly report holds 672 binary quarter-hour slots, day-major and
Monday-first: slot ``day * 96 + quarter`` is 1 when the person worked during
that quarter-hour.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import (
    DuplicateKeyError,
    JoinError,
    ParseError,
    SchemaError,
    ValidationError,
)

log = logging.getLogger(__name__)

QUARTERS_PER_HOUR = 4
QUARTERS_PER_DAY = 24 * QUARTERS_PER_HOUR
DAYS = ("Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun")
N_SLOTS = len(DAYS) * QUARTERS_PER_DAY  # 672


def slot_index(day: int, quarter: int) -> int:
    """Flat slot index of ``quarter`` (0..95) on ``day`` (0 = Monday)."""
    if not 0 <= day < len(DAYS):
        raise IndexError(f"day {day} outside 0..6")
    if not 0 <= quarter < QUARTERS_PER_DAY:
        raise IndexError(f"quarter {quarter} outside 0..95")
    return day * QUARTERS_PER_DAY + quarter


def parse_day(name) -> int:
    if isinstance(name, (int, np.integer)):
        return slot_index(int(name), 0) // QUARTERS_PER_DAY
    key = str(name).strip()[:3].capitalize()
    if key not in DAYS:
        raise ValueError(f"unknown day {name!r}")
    return DAYS.index(key)


def parse_clock(text: str) -> int:
    """``"10:00"`` -> quarter index 40. ``"24:00"`` maps to 96 (end of day)."""
    hh, _, mm = text.strip().partition(":")
    hours, minutes = int(hh), int(mm or 0)
    if minutes % 15 or not 0 <= minutes < 60 or not 0 <= hours <= 24:
        raise ValueError(f"clock time {text!r} is not on a quarter-hour")
    quarter = hours * QUARTERS_PER_HOUR + minutes // 15
    if quarter > QUARTERS_PER_DAY:
        raise ValueError(f"clock time {text!r} past midnight")
    return quarter


def format_clock(quarter: int) -> str:
    return f"{quarter // QUARTERS_PER_HOUR:02d}:{15 * (quarter % QUARTERS_PER_HOUR):02d}"


@dataclass(frozen=True, eq=False)
class WeeklyProfile:
    person_id: str
    slots: np.ndarray

    def __post_init__(self):
        slots = np.asarray(self.slots)
        if slots.shape != (N_SLOTS,):
            raise ValidationError(
                f"profile {self.person_id!r}: expected {N_SLOTS} slots, got {slots.size}"
            )
        if not np.all((slots == 0) | (slots == 1)):
            raise ValidationError(f"profile {self.person_id!r}: slots must be 0 or 1")
        slots = slots.astype(np.uint8)
        slots.setflags(write=False)
        object.__setattr__(self, "slots", slots)

    def __eq__(self, other):
        if not isinstance(other, WeeklyProfile):
            return NotImplemented
        return self.person_id == other.person_id and np.array_equal(self.slots, other.slots)

    def __hash__(self):
        return hash((self.person_id, self.slots.tobytes()))


@dataclass(frozen=True)
class QuestionSchema:
    """Ordered questions, each with its ordered response modalities."""

    questions: Tuple[Tuple[str, Tuple[str, ...]], ...]

    def __post_init__(self):
        questions = tuple((str(n), tuple(str(m) for m in mods)) for n, mods in self.questions)
        object.__setattr__(self, "questions", questions)
        names = [n for n, _ in questions]
        if len(set(names)) != len(names):
            raise SchemaError("question names must be unique")
        for name, mods in questions:
            if not name or "," in name:
                raise SchemaError(f"invalid question name {name!r}")
            if len(mods) < 2:
                raise SchemaError(f"question {name!r} needs at least 2 modalities")
            if len(set(mods)) != len(mods):
                raise SchemaError(f"question {name!r} has duplicate modalities")

    @property
    def names(self) -> List[str]:
        return [n for n, _ in self.questions]

    def modalities(self, question: str) -> Tuple[str, ...]:
        for name, mods in self.questions:
            if name == question:
                return mods
        raise SchemaError(f"unknown question {question!r}")

    def __contains__(self, question):
        return question in self.names

    @property
    def n_modalities(self) -> int:
        return sum(len(m) for _, m in self.questions)


_FREQUENCY = ("Usually", "Sometimes", "Never")


def default_schema() -> QuestionSchema:
    """The 14 questions / 39 modalities of the part-time timetable survey."""
    return QuestionSchema((
        ("Contract", ("Open-ended", "Fixed-term")),
        ("Sex", ("Man", "Woman")),
        ("Age", ("<25", "25-40", "40-50", ">=50")),
        ("DaySch", ("Identical", "As-posted", "Variable")),
        ("DayWk", ("Identical", "Variable")),
        ("Night", _FREQUENCY),
        ("Sat", _FREQUENCY),
        ("Sun", _FREQUENCY),
        ("Wed", _FREQUENCY),
        ("Leave", ("Yes", "Yes under conditions", "No")),
        ("Def", ("Company", "A la carte", "Employee", "Other")),
        ("Volunt", ("Involuntary", "Voluntary")),
        ("Next", ("Yes", "No")),
        ("Carry", ("No point", "Yes", "No")),
    ))


def parse_schema(path) -> QuestionSchema:
    """Read ``name: modality1|modality2|...`` lines; blank and ``#`` lines skipped."""
    questions = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            name, sep, rest = line.partition(":")
            if not sep:
                raise ParseError(f"{path}:{lineno}: expected 'name: m1|m2|...'")
            questions.append((name.strip(), tuple(m.strip() for m in rest.split("|"))))
    return QuestionSchema(tuple(questions))


def write_schema(schema: QuestionSchema, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for name, mods in schema.questions:
            fh.write(f"{name}: {'|'.join(mods)}\n")


@dataclass(frozen=True)
class IndividualRecord:
    person_id: str
    answers: Dict[str, str]

    def validate(self, schema: QuestionSchema) -> None:
        for question, value in self.answers.items():
            if question not in schema:
                raise ValidationError(f"person {self.person_id!r}: unknown question {question!r}")
            if value not in schema.modalities(question):
                raise ValidationError(
                    f"person {self.person_id!r}: question {question!r} has no modality {value!r}"
                )


@dataclass
class Dataset:
    profiles: List[WeeklyProfile]
    records: List[IndividualRecord]
    schema: QuestionSchema = field(default_factory=default_schema)

    def __post_init__(self):
        ids = [p.person_id for p in self.profiles]
        if ids != [r.person_id for r in self.records]:
            raise ValidationError("profiles and records must list the same persons in the same order")
        if len(set(ids)) != len(ids):
            raise DuplicateKeyError("person ids must be unique")
        for rec in self.records:
            rec.validate(self.schema)

    def __len__(self):
        return len(self.profiles)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.schema == other.schema and self.profiles == other.profiles
                and self.records == other.records)

    @property
    def person_ids(self) -> List[str]:
        return [p.person_id for p in self.profiles]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Slots of every person stacked into an ``(N, 672)`` float array."""
        if not self.profiles:
            return np.zeros((0, N_SLOTS))
        out = np.stack([p.slots for p in self.profiles]).astype(float)
        out.setflags(write=False)
        return out

    def answers(self, question: str) -> List[str]:
        self.schema.modalities(question)
        return [r.answers[question] for r in self.records]


def _read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file, header expected") from None
        rows = [(reader.line_num, row) for row in reader if row]
    return header, rows


def parse_weekly_reports(path) -> List[WeeklyProfile]:
    """Read a ``person_id,s0,...,s671`` CSV into profiles."""
    header, rows = _read_rows(path)
    expected = ["person_id"] + [f"s{i}" for i in range(N_SLOTS)]
    if header != expected:
        raise ParseError(f"{path}: header must be person_id,s0..s{N_SLOTS - 1}")
    profiles, seen = [], set()
    for lineno, row in rows:
        if len(row) != N_SLOTS + 1:
            raise ParseError(
                f"{path}:{lineno}: expected {N_SLOTS + 1} columns, got {len(row)}"
            )
        pid = row[0]
        if pid in seen:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate person_id {pid!r}")
        seen.add(pid)
        slots = np.empty(N_SLOTS, dtype=np.uint8)
        for j, cell in enumerate(row[1:]):
            if cell == "0":
                slots[j] = 0
            elif cell == "1":
                slots[j] = 1
            else:
                raise ParseError(f"{path}:{lineno}: column s{j} has non-binary value {cell!r}")
        profiles.append(WeeklyProfile(pid, slots))
    return profiles


def parse_individual_records(path, schema: QuestionSchema) -> List[IndividualRecord]:
    """Read a ``person_id,<questions...>`` CSV and validate every answer."""
    header, rows = _read_rows(path)
    if not header or header[0] != "person_id":
        raise SchemaError(f"{path}: first column must be person_id")
    columns = header[1:]
    missing = [q for q in schema.names if q not in columns]
    if missing:
        raise SchemaError(f"{path}: missing question column(s) {', '.join(missing)}")
    extra = [c for c in columns if c not in schema]
    if extra:
        raise SchemaError(f"{path}: column(s) not in schema: {', '.join(extra)}")
    records, seen = [], set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} columns, got {len(row)}")
        pid = row[0]
        if pid in seen:
            raise DuplicateKeyError(f"{path}:{lineno}: duplicate person_id {pid!r}")
        seen.add(pid)
        cells = dict(zip(columns, row[1:]))
        answers = {}
        for question in schema.names:
            value = cells[question]
            if value not in schema.modalities(question):
                raise ValidationError(
                    f"{path}:{lineno}: question {question!r} has no modality {value!r}"
                )
            answers[question] = value
        records.append(IndividualRecord(pid, answers))
    return records


def write_weekly_reports(profiles: Sequence[WeeklyProfile], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person_id"] + [f"s{i}" for i in range(N_SLOTS)])
        for p in profiles:
            w.writerow([p.person_id] + p.slots.tolist())


def write_individual_records(records: Sequence[IndividualRecord], schema: QuestionSchema, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person_id"] + schema.names)
        for r in records:
            w.writerow([r.person_id] + [r.answers[q] for q in schema.names])


@dataclass(frozen=True)
class JoinReport:
    kept: int
    profiles_dropped: int
    records_dropped: int


def join_datasets(profiles, records, schema=None) -> Tuple[Dataset, JoinReport]:
    """Inner-join diaries and questionnaire records on ``person_id``.

    The result keeps the diary file's order. Unmatched persons on either side
    are dropped and counted in the returned :class:`JoinReport`.
    """
    schema = schema or default_schema()
    by_id = {r.person_id: r for r in records}
    kept_profiles = [p for p in profiles if p.person_id in by_id]
    if not kept_profiles:
        raise JoinError("diary and questionnaire files share no person_id")
    kept_records = [by_id[p.person_id] for p in kept_profiles]
    report = JoinReport(
        kept=len(kept_profiles),
        profiles_dropped=len(profiles) - len(kept_profiles),
        records_dropped=len(records) - len(kept_records),
    )
    if report.profiles_dropped or report.records_dropped:
        log.info("join dropped %d diaries and %d questionnaires",
                 report.profiles_dropped, report.records_dropped)
    return Dataset(kept_profiles, kept_records, schema), report


def load_dataset(weekly_path, individual_path, schema_path=None) -> Tuple[Dataset, JoinReport]:
    schema = parse_schema(schema_path) if schema_path else default_schema()
    return join_datasets(
        parse_weekly_reports(weekly_path),
        parse_individual_records(individual_path, schema),
        schema,
    )


def write_dataset(dataset: Dataset, out_dir) -> None:
    out_dir = Path(out_dir)
    write_weekly_reports(dataset.profiles, out_dir / "weekly.csv")
    write_individual_records(dataset.records, dataset.schema, out_dir / "individual.csv")
    write_schema(dataset.schema, out_dir / "schema.txt")


def total_worked_hours(profile: WeeklyProfile) -> float:
    return int(profile.slots.sum()) / QUARTERS_PER_HOUR


def activity_at(profile: WeeklyProfile, day: int, quarter: int) -> int:
    """Whether the person worked during ``quarter`` of ``day`` (both 0-based)."""
    return int(profile.slots[slot_index(day, quarter)])
