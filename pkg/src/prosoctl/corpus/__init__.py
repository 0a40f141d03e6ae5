"""Corpus ingestion and persistence: alignments, feature records, splits."""

from prosoctl.corpus.alignment import (AlignmentError, AlignmentSpan, PhoneToken,
                                       Utterance, load_alignment, parse_alignment,
                                       save_alignment, utterance_to_doc)
from prosoctl.corpus.split import split_corpus
from prosoctl.corpus.store import (FeatureRecord, IntegrityError, VersionError,
                                   load_feature_record, save_feature_record)

__all__ = [
    "AlignmentError",
    "AlignmentSpan",
    "FeatureRecord",
    "IntegrityError",
    "PhoneToken",
    "Utterance",
    "VersionError",
    "load_alignment",
    "load_feature_record",
    "parse_alignment",
    "save_alignment",
    "save_feature_record",
    "split_corpus",
    "utterance_to_doc",
]
