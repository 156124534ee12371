"""Kohonen-string classification and profiling of weekly work diaries."""

from .data import (
    N_SLOTS,
    Dataset,
    IndividualRecord,
    QuestionSchema,
    WeeklyProfile,
    activity_at,
    default_schema,
    join_datasets,
    parse_individual_records,
    parse_weekly_reports,
    total_worked_hours,
)
from .som import SomConfig, SomModel, assign_all, train
from .superclass import contiguity_check, cut_to_k, explained_variance, ward_cluster_codebook
from .mds import classical_mds, crossing_count, ordering_monotone, pairwise_distances
from .synth import default_config, synth_generate

__version__ = "0.1.0"
