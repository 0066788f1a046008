"""Concept embeddings (CRC / 3C skip-gram) and bag-of-concepts densification."""

from .errors import (ConceptVecError, DomainError, EmptyBocError, EmptyVocabularyError,
                     FormatError, NoEmbeddableConceptsError, NothingToTrainError)

__version__ = "0.1.0"
