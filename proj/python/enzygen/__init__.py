"""EnzyGen: enzyme sequence and structure co-design (C++ core bindings)."""

from ._enzygen import (
    Checkpoint,
    ConfigError,
    ContractError,
    DataError,
    DimensionError,
    DomainError,
    EnzyGenError,
    IndexError,
    NumericError,
    ParameterError,
    ParseError,
    SiteAnnotation,
    VocabularyError,
    conserved_columns,
    init_coordinates,
    knn,
    mine_sites,
    sequence_identity,
)

__all__ = [
    "Checkpoint",
    "ConfigError",
    "ContractError",
    "DataError",
    "DimensionError",
    "DomainError",
    "EnzyGenError",
    "IndexError",
    "NumericError",
    "ParameterError",
    "ParseError",
    "SiteAnnotation",
    "VocabularyError",
    "conserved_columns",
    "init_coordinates",
    "knn",
    "mine_sites",
    "sequence_identity",
]
