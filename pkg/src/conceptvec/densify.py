"""Dense BOC vectors by weighted embedding averaging, and alignment baselines.

``densify`` maps a sparse BOC to the weight-normalized mean of its concept
embeddings in one pass over the non-zero entries. The three alignment
scores (many-to-many, max-align, Hungarian one-to-one) compare two sparse
BOCs through pairwise concept cosines and are kept as baselines.
Many-to-many is the weight-weighted mean of the thresholded similarities.
Max-align and Hungarian divide weight products by the product of weight
norms, so both reduce to the exact-match cosine when concept similarity is
the identity; that weighting is a reconstruction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .boc import SparseBoc
from .embeddings import EmbeddingStore
from .errors import ConceptVecError, EmptyBocError, NoEmbeddableConceptsError

MANY_TO_MANY = "many"
MAX_ALIGN = "max"
HUNGARIAN = "hungarian"
MECHANISMS = (MANY_TO_MANY, MAX_ALIGN, HUNGARIAN)


@dataclass(frozen=True)
class AlignmentConfig:
    threshold: float = 0.85
    mechanism: str = HUNGARIAN

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.mechanism not in MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}; expected one of {MECHANISMS}")


def densify_counts(boc: SparseBoc, store: EmbeddingStore) -> tuple[np.ndarray, int]:
    """Like :func:`densify`, also returning how many concepts had no embedding."""
    if len(boc) == 0:
        raise EmptyBocError()
    rows, missing = store.concept_rows(boc.ids)
    if not rows:
        raise NoEmbeddableConceptsError(len(missing))
    weights = np.delete(boc.weights, missing) if missing else boc.weights
    vecs = store.rows(rows).astype(np.float64)
    dense = (weights / math.fsum(weights)) @ vecs
    # the true mean lies in the per-dimension hull; clip away rounding drift
    return np.clip(dense, vecs.min(axis=0), vecs.max(axis=0)), len(missing)


def densify(boc: SparseBoc, store: EmbeddingStore) -> np.ndarray:
    """Weighted average of the input embeddings of the BOC's concepts.

    Concepts absent from ``store`` are skipped and the weights renormalized
    over the rest.
    """
    return densify_counts(boc, store)[0]


@dataclass
class DensifyBatch:
    vectors: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    errors: dict = field(default_factory=dict)

    def ok(self) -> list[int]:
        return [i for i, v in enumerate(self.vectors) if v is not None]


def matrix_densify(records, store: EmbeddingStore) -> DensifyBatch:
    """Densify many BOCs; failures are recorded per position, not raised."""
    out = DensifyBatch()
    for i, boc in enumerate(records):
        try:
            vec, skipped = densify_counts(boc, store)
        except ConceptVecError as exc:
            out.vectors.append(None)
            out.skipped.append(getattr(exc, "skipped", 0))
            out.errors[i] = str(exc)
        else:
            out.vectors.append(vec)
            out.skipped.append(skipped)
    return out


def dense_cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = float(a @ a), float(b @ b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine of a zero vector is undefined")
    return max(-1.0, min(1.0, float(a @ b) / math.sqrt(na * nb)))


# ---------------------------------------------------------------------------
# alignment baselines


def _embedded(boc: SparseBoc, store: EmbeddingStore):
    if len(boc) == 0:
        raise EmptyBocError()
    rows, missing = store.concept_rows(boc.ids)
    if not rows:
        raise NoEmbeddableConceptsError(len(missing))
    weights = np.delete(boc.weights, missing) if missing else boc.weights
    vecs = store.rows(rows).astype(np.float64)
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return weights, np.divide(vecs, norms, out=np.zeros_like(vecs), where=norms > 0)


def concept_similarities(u: SparseBoc, v: SparseBoc, store: EmbeddingStore):
    """Weights of the embeddable concepts and their pairwise cosine matrix."""
    uw, uvec = _embedded(u, store)
    vw, vvec = _embedded(v, store)
    return uw, vw, np.clip(uvec @ vvec.T, -1.0, 1.0)


def _thresholded(sims, tau):
    sims = np.asarray(sims, dtype=np.float64)
    return np.where(sims >= tau, sims, 0.0)


def many_to_many_score(uw, vw, sims, tau: float) -> float:
    s = _thresholded(sims, tau)
    return float(uw @ s @ vw) / (math.fsum(uw) * math.fsum(vw))


def max_align_score(uw, vw, sims, tau: float) -> float:
    sims = np.asarray(sims, dtype=np.float64)
    best = np.argmax(sims, axis=1)
    m = sims[np.arange(len(uw)), best]
    m = np.where(m >= tau, m, 0.0)
    return float(np.sum(uw * vw[best] * m)) / (np.linalg.norm(uw) * np.linalg.norm(vw))


def hungarian_match(sims) -> tuple[np.ndarray, np.ndarray, float]:
    """Maximum-total one-to-one matching; returns rows, cols and the total.

    Rectangular inputs behave as if padded with zero-similarity dummies.
    The total is summed in row order.
    """
    sims = np.asarray(sims, dtype=np.float64)
    rows, cols = linear_sum_assignment(sims, maximize=True)
    total = 0.0
    for r, c in zip(rows, cols):
        total += sims[r, c]
    return rows, cols, total


def hungarian_score(uw, vw, sims, tau: float) -> float:
    s = _thresholded(sims, tau)
    rows, cols, _ = hungarian_match(s)
    return float(np.sum(uw[rows] * vw[cols] * s[rows, cols])) / (
        np.linalg.norm(uw) * np.linalg.norm(vw))


_SCORERS = {MANY_TO_MANY: many_to_many_score, MAX_ALIGN: max_align_score,
            HUNGARIAN: hungarian_score}


def sim_many_to_many(u, v, store, cfg: AlignmentConfig = AlignmentConfig()) -> float:
    return many_to_many_score(*concept_similarities(u, v, store), cfg.threshold)


def sim_max_align(u, v, store, cfg: AlignmentConfig = AlignmentConfig()) -> float:
    return max_align_score(*concept_similarities(u, v, store), cfg.threshold)


def sim_hungarian(u, v, store, cfg: AlignmentConfig = AlignmentConfig()) -> float:
    return hungarian_score(*concept_similarities(u, v, store), cfg.threshold)


def alignment_similarity(u, v, store, cfg: AlignmentConfig) -> float:
    return _SCORERS[cfg.mechanism](*concept_similarities(u, v, store), cfg.threshold)
