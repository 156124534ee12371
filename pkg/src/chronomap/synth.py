"""Seeded synthetic diaries and questionnaires drawn from planted archetypes.

A generator config is a JSON document::

    {"archetypes": [
        {"name": "A", "count": 141, "flip": 0.05,
         "blocks": ["Mon 09:00-13:00", "Tue 09:00-13:00"],
         "answers": {"Contract": {"Open-ended": 0.89, "Fixed-term": 0.11}}},
        ...]}

``blocks`` lists worked intervals; ``slots`` (a 672-character 0/1 string) may
be given instead. Questions absent from ``answers`` are drawn uniformly.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .data import (
    N_SLOTS,
    QUARTERS_PER_DAY,
    Dataset,
    IndividualRecord,
    QuestionSchema,
    WeeklyProfile,
    default_schema,
    parse_clock,
    parse_day,
)
from .errors import ConfigError


@dataclass
class Archetype:
    name: str
    prototype: np.ndarray
    count: int
    flip: float
    answers: Dict[str, Dict[str, float]] = field(default_factory=dict)


@dataclass
class GeneratorConfig:
    archetypes: List[Archetype]

    def validate(self, schema: QuestionSchema) -> None:
        if not self.archetypes:
            raise ConfigError("generator config needs at least one archetype")
        names = [a.name for a in self.archetypes]
        if len(set(names)) != len(names):
            raise ConfigError("archetype names must be unique")
        for a in self.archetypes:
            if a.count <= 0:
                raise ConfigError(f"archetype {a.name!r}: count must be positive")
            if not 0 <= a.flip < 0.5:
                raise ConfigError(f"archetype {a.name!r}: flip probability must be in [0, 0.5)")
            proto = np.asarray(a.prototype)
            if proto.shape != (N_SLOTS,) or not np.all((proto == 0) | (proto == 1)):
                raise ConfigError(f"archetype {a.name!r}: prototype must be {N_SLOTS} binary slots")
            for question, table in a.answers.items():
                if question not in schema:
                    raise ConfigError(f"archetype {a.name!r}: unknown question {question!r}")
                mods = schema.modalities(question)
                for m, p in table.items():
                    if m not in mods:
                        raise ConfigError(
                            f"archetype {a.name!r}: question {question!r} has no modality {m!r}")
                    if p < 0:
                        raise ConfigError(f"archetype {a.name!r}: negative probability for {m!r}")
                if sum(table.values()) <= 0:
                    raise ConfigError(f"archetype {a.name!r}: empty table for {question!r}")

    @property
    def size(self) -> int:
        return sum(a.count for a in self.archetypes)


def blocks_to_slots(blocks: Sequence[str]) -> np.ndarray:
    """Turn ``"Wed 09:00-13:00"`` style intervals into a 672-slot 0/1 vector."""
    slots = np.zeros(N_SLOTS, dtype=np.uint8)
    for block in blocks:
        try:
            day_txt, span = block.split(None, 1)
            start_txt, end_txt = span.split("-")
            day = parse_day(day_txt)
            start, end = parse_clock(start_txt), parse_clock(end_txt)
        except ValueError as exc:
            raise ConfigError(f"bad block {block!r}: {exc}") from None
        if end <= start:
            raise ConfigError(f"bad block {block!r}: end must follow start")
        slots[day * QUARTERS_PER_DAY + start: day * QUARTERS_PER_DAY + end] = 1
    return slots


def config_from_dict(doc: dict) -> GeneratorConfig:
    archetypes = []
    for i, item in enumerate(doc.get("archetypes", [])):
        try:
            name = str(item["name"])
            count = int(item["count"])
            flip = float(item.get("flip", 0.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"archetype #{i}: {exc}") from None
        if "slots" in item:
            text = str(item["slots"])
            if len(text) != N_SLOTS or set(text) - {"0", "1"}:
                raise ConfigError(f"archetype {name!r}: 'slots' must be {N_SLOTS} 0/1 characters")
            proto = np.frombuffer(text.encode(), dtype=np.uint8) - ord("0")
        else:
            proto = blocks_to_slots(item.get("blocks", []))
        answers = {q: {m: float(p) for m, p in t.items()} for q, t in item.get("answers", {}).items()}
        archetypes.append(Archetype(name, proto, count, flip, answers))
    return GeneratorConfig(archetypes)


def load_config(path) -> GeneratorConfig:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)


def default_config_text() -> str:
    return resources.files("chronomap").joinpath("default_synth.json").read_text(encoding="utf-8")


def default_config(flip: float | None = None) -> GeneratorConfig:
    """Five ordered archetypes of 141/100/108/110/107 persons."""
    cfg = config_from_dict(json.loads(default_config_text()))
    if flip is not None:
        for a in cfg.archetypes:
            a.flip = flip
    return cfg


def synth_generate(config: GeneratorConfig, seed: int,
                   schema: QuestionSchema | None = None) -> Tuple[Dataset, Dict[str, str]]:
    """Draw a dataset from ``config``.

    Returns the dataset and the planted ``person_id -> archetype`` labels.
    Output depends only on ``(config, seed, schema)``.
    """
    schema = schema or default_schema()
    config.validate(schema)
    rng = np.random.default_rng(seed)

    rows = []
    for arch in config.archetypes:
        tables = []
        for question, mods in schema.questions:
            table = arch.answers.get(question)
            if table is None:
                p = np.full(len(mods), 1.0 / len(mods))
            else:
                p = np.array([table.get(m, 0.0) for m in mods], dtype=float)
                p /= p.sum()
            tables.append((question, mods, p))
        proto = np.asarray(arch.prototype, dtype=np.uint8)
        for _ in range(arch.count):
            flips = rng.random(N_SLOTS) < arch.flip
            slots = proto ^ flips.astype(np.uint8)
            answers = {q: mods[rng.choice(len(mods), p=p)] for q, mods, p in tables}
            rows.append((arch.name, slots, answers))

    order = rng.permutation(len(rows))
    width = len(str(len(rows)))
    profiles, records, labels = [], [], {}
    for rank, idx in enumerate(order):
        name, slots, answers = rows[idx]
        pid = f"p{rank + 1:0{width}d}"
        profiles.append(WeeklyProfile(pid, slots))
        records.append(IndividualRecord(pid, answers))
        labels[pid] = name
    return Dataset(profiles, records, schema), labels


def write_labels(labels: Dict[str, str], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["person_id", "archetype"])
        for pid, name in labels.items():
            w.writerow([pid, name])


def read_labels(path) -> Dict[str, str]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return {row["person_id"]: row["archetype"] for row in reader}
