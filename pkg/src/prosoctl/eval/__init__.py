"""Measurement procedures: disentanglement, temporal precision,
reproducibility, and listening-test statistics."""

from prosoctl.eval.experiments import (ExperimentReport, run_disentanglement,
                                       run_reproducibility, run_temporal_precision)
from prosoctl.eval.measures import (measure_rendition, phone_level, utterance_level)
from prosoctl.eval.mushra import (RatingRecord, filter_listeners, holm_bonferroni,
                                  load_ratings_csv, mushra_analyze, welch_t_test)

__all__ = [
    "ExperimentReport",
    "RatingRecord",
    "filter_listeners",
    "holm_bonferroni",
    "load_ratings_csv",
    "measure_rendition",
    "mushra_analyze",
    "phone_level",
    "run_disentanglement",
    "run_reproducibility",
    "run_temporal_precision",
    "utterance_level",
    "welch_t_test",
]
