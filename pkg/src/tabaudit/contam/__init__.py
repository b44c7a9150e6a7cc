"""Corpus indexing and train/test contamination scanning."""

from .index import CorpusIndex, TableInfo, build_index
from .normalize import MISSING, normalize_cell
from .search import (
    AssociationResult,
    ContaminationVerdict,
    EvidenceBundle,
    MatchEvidence,
    ScanConfig,
    association_search,
    classify_contamination,
    identifier_search,
    label_exposure,
    row_match,
    scan_dataset,
)

__all__ = [
    "AssociationResult",
    "ContaminationVerdict",
    "CorpusIndex",
    "EvidenceBundle",
    "MISSING",
    "MatchEvidence",
    "ScanConfig",
    "TableInfo",
    "association_search",
    "build_index",
    "classify_contamination",
    "identifier_search",
    "label_exposure",
    "normalize_cell",
    "row_match",
    "scan_dataset",
]
