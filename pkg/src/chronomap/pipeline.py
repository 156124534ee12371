"""End-to-end run: ingest or generate, train, superclass, check, profile, plot."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import mds, profiling, superclass, synth
from .data import Dataset, JoinReport, load_dataset, write_dataset
from .errors import ChronomapError, ConfigError, PipelineError
from .metrics import adjusted_rand_index
from .plots import plot_figures
from .som import SomConfig, assign_all, train, write_model

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    out: Path
    weekly: Optional[Path] = None
    individual: Optional[Path] = None
    schema: Optional[Path] = None
    synth: Optional[str] = None  # generator config path, or "default"
    som: SomConfig = field(default_factory=SomConfig)
    superclasses: Optional[int] = None
    variance: Optional[float] = None
    variance_level: str = "codevectors"
    linkage: str = "ward"
    probes: Sequence[profiling.Probe] = profiling.DEFAULT_PROBES
    alpha: float = 0.05
    tv_threshold: float = 1.0
    gap: float = 20.0
    seed: int = 0

    def validate(self) -> None:
        has_files = self.weekly is not None or self.individual is not None
        if has_files == (self.synth is not None):
            raise ConfigError("give either --weekly/--individual or --synth, not both or neither")
        if has_files and (self.weekly is None or self.individual is None):
            raise ConfigError("--weekly and --individual go together")
        if (self.superclasses is None) == (self.variance is None):
            raise ConfigError("give exactly one of --superclasses or --variance")
        if self.superclasses is not None and not 1 <= self.superclasses <= self.som.units:
            raise ConfigError(f"--superclasses {self.superclasses} must lie in 1..{self.som.units} (units)")
        if self.variance is not None and not 0 <= self.variance <= 1:
            raise ConfigError("--variance must lie in [0, 1]")
        if self.variance_level not in ("codevectors", "individuals"):
            raise ConfigError(f"unknown variance level {self.variance_level!r}")
        if self.linkage not in superclass.LINKAGES:
            raise ConfigError(f"unknown linkage {self.linkage!r}")
        if not 0 <= self.alpha <= 1:
            raise ConfigError("--alpha must lie in [0, 1]")


@dataclass
class RunResult:
    dataset: Dataset
    join: Optional[JoinReport]
    planted: Optional[Dict[str, str]]
    model: object
    assignment: object
    dendrogram: superclass.Dendrogram
    partition: superclass.SuperclassPartition
    person_labels: List[str]
    embedding: mds.MdsEmbedding
    crossings: int
    monotone: bool
    spearman: float
    selection: profiling.QuestionSelection
    report: Dict[str, str]


class _Stage:
    def __init__(self, name):
        self.name = name

    def __enter__(self):
        log.info("stage %s", self.name)

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, PipelineError):
            raise PipelineError(self.name, exc) from exc
        return False


def _write_rows(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_profiles(dataset: Dataset, labels, out: Path, probes=profiling.DEFAULT_PROBES,
                   alpha=0.05, tv_threshold=1.0, gap=20.0) -> profiling.QuestionSelection:
    """Chi-square filter, test-value tables, headcounts, curves and coherence."""
    out = Path(out)
    (out / "tables").mkdir(parents=True, exist_ok=True)
    selection = profiling.select_discriminant_questions(dataset, labels, alpha)
    profiling.write_chi_square(selection, out / "chi2.csv")
    rendered = []
    for question in dataset.schema.names:
        table = profiling.contingency(dataset, labels, question)
        tv = profiling.test_values(table, tv_threshold)
        profiling.write_test_value_table(tv, out / "tables" / f"{question}.csv")
        tag = "kept" if question in selection.kept else "dropped"
        rendered.append(f"[{tag}]\n" + profiling.format_test_value_table(tv))
    (out / "tables.txt").write_text("\n".join(rendered), encoding="utf-8")
    profiling.write_headcounts(profiling.headcounts(dataset, labels, probes), out / "headcounts.csv")
    profiling.write_curves(profiling.average_activity_profile(dataset, labels), out / "curves.csv")
    profiling.write_coherence(profiling.coherence_report(dataset, labels, probes, gap),
                              out / "coherence.csv")
    return selection


def _fmt_list(items) -> str:
    return ",".join(str(i) for i in items)


def run_pipeline(config: RunConfig) -> RunResult:
    """Run every stage and write the artifacts under ``config.out``.

    A failing stage raises :class:`PipelineError` naming it; files written
    by earlier stages stay in place.
    """
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)

    planted, join = None, None
    with _Stage("ingest"):
        if config.synth is not None:
            gen = (synth.default_config() if config.synth == "default"
                   else synth.load_config(config.synth))
            dataset, planted = synth.synth_generate(gen, config.seed)
            write_dataset(dataset, out)
            synth.write_labels(planted, out / "labels.csv")
        else:
            dataset, join = load_dataset(config.weekly, config.individual, config.schema)

    with _Stage("train"):
        model = train(dataset, config.som)
        write_model(model, out / "model.csv", out / "model_config.txt")

    with _Stage("assign"):
        assignment = assign_all(model, dataset)
        units_of = assignment.units_in_order(dataset.person_ids)
        _write_rows(out / "class_sizes.csv", ["unit", "size"],
                    [[u, int(s)] for u, s in enumerate(assignment.class_sizes)])

    with _Stage("superclass"):
        C, sizes = model.code_vectors, assignment.class_sizes
        dendro = superclass.ward_cluster_codebook(C, sizes, config.linkage)
        if config.superclasses is not None:
            partition = superclass.cut_to_k(dendro, config.superclasses, C, sizes)
        elif config.variance_level == "codevectors":
            partition = superclass.cut_by_variance(dendro, config.variance, C, sizes)
        else:
            partition = _cut_individual_variance(dendro, config.variance, C, sizes, dataset, units_of)
        ev_individuals = superclass.individual_explained_variance(partition, dataset.matrix, units_of)
        contiguous, violations = superclass.contiguity_check(partition)
        labels = superclass.person_labels(partition, units_of)
        superclass.write_dendrogram(dendro, out / "dendrogram.csv")
        superclass.write_partition(partition, out / "partition.csv")
        _write_rows(out / "assignment.csv", ["person_id", "unit", "superclass"],
                    [[p, int(u), lab] for p, u, lab in zip(dataset.person_ids, units_of, labels)])

    with _Stage("mds"):
        emb = mds.classical_mds(mds.pairwise_distances(C), dims=2)
        order = list(range(model.units))
        crossings = mds.crossing_count(emb, order)
        monotone, rho = mds.ordering_monotone(emb, order)
        mds.write_embedding(emb, order, out / "mds.csv")

    with _Stage("profile"):
        selection = write_profiles(dataset, labels, out, config.probes, config.alpha,
                                   config.tv_threshold, config.gap)
        coherence = profiling.coherence_report(dataset, labels, config.probes, config.gap)

    with _Stage("plot"):
        plot_figures(out)

    with _Stage("report"):
        groups = partition.groups()
        sc_sizes = {lab: int(sum(assignment.class_sizes[u] for u in units)) for lab, units in groups.items()}
        ev_main = partition.explained_variance if config.variance_level == "codevectors" else ev_individuals
        report = {
            "n_persons": str(len(dataset)),
            "units": str(model.units),
            "class_sizes": _fmt_list(int(s) for s in assignment.class_sizes),
            "empty_units": _fmt_list(dendro.dropped_units),
            "quantization_error": repr(model.final_quantization_error),
            "linkage": config.linkage,
            "k": str(partition.k),
            "superclasses": _fmt_list(groups),
            "superclass_units": ";".join(f"{lab}:{'+'.join(str(u) for u in units)}"
                                         for lab, units in groups.items()),
            "superclass_sizes": _fmt_list(f"{lab}:{n}" for lab, n in sc_sizes.items()),
            "variance_level": config.variance_level,
            "explained_variance": repr(ev_main),
            "explained_variance_codevectors": repr(partition.explained_variance),
            "explained_variance_individuals": repr(ev_individuals),
            "contiguous": str(contiguous).lower(),
            "noncontiguous_superclasses": _fmt_list(violations),
            "mds_eigenvalues": _fmt_list(repr(float(v)) for v in emb.eigenvalues),
            "crossing_count": str(crossings),
            "ordering_monotone": str(monotone).lower(),
            "spearman": repr(rho),
            "alpha": repr(config.alpha),
            "kept_questions": _fmt_list(selection.kept),
            "dropped_questions": _fmt_list(selection.dropped),
            "coherence_flags": _fmt_list(f"{r.superclass}:{r.question}" for r in coherence if r.flagged),
        }
        if join is not None:
            report["join_kept"] = str(join.kept)
            report["join_profiles_dropped"] = str(join.profiles_dropped)
            report["join_records_dropped"] = str(join.records_dropped)
        if planted is not None:
            report["ari"] = repr(adjusted_rand_index([planted[p] for p in dataset.person_ids], labels))
        (out / "report.txt").write_text("".join(f"{k} = {v}\n" for k, v in report.items()),
                                        encoding="utf-8")

    return RunResult(dataset, join, planted, model, assignment, dendro, partition, labels,
                     emb, crossings, monotone, rho, selection, report)


def _cut_individual_variance(dendro, threshold, C, sizes, dataset, units_of):
    part = None
    for k in range(1, dendro.n_leaves + 1):
        part = superclass.cut_to_k(dendro, k, C, sizes)
        if superclass.individual_explained_variance(part, dataset.matrix, units_of) >= threshold:
            break
    return part


def read_report(path) -> Dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            key, sep, value = line.rstrip("\n").partition(" = ")
            if sep:
                out[key] = value
    return out
