"""Sparse bag-of-concepts vectors, an ESA-style TF-IDF index and exact-match cosine.

BOC files hold one record per line::

    <record_id>\\t<concept_id>:<weight> <concept_id>:<weight> ...
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .corpus import AnnotatedDocument, Word, tokenize_words
from .errors import EmptyBocError, FormatError


class SparseBoc:
    """Concept weights sorted by descending weight, ties by ascending id.

    Weights must be positive and finite and ids unique. Any input order is
    accepted; the stored order is canonical, so two BOCs holding the same
    entries are indistinguishable.
    """

    __slots__ = ("ids", "weights")

    def __init__(self, entries: Iterable[tuple[str, float]] = ()):
        pairs = [(str(c), float(w)) for c, w in entries]
        seen = set()
        for c, w in pairs:
            if c in seen:
                raise ValueError(f"duplicate concept id {c!r}")
            seen.add(c)
            if not (w > 0 and math.isfinite(w)):
                raise ValueError(f"weight for {c!r} must be positive and finite, got {w}")
        pairs.sort(key=lambda cw: (-cw[1], cw[0]))
        self.ids = tuple(c for c, _ in pairs)
        self.weights = np.array([w for _, w in pairs], dtype=np.float64)
        self.weights.flags.writeable = False

    def __len__(self):
        return len(self.ids)

    def __iter__(self):
        return iter(zip(self.ids, self.weights.tolist()))

    def __eq__(self, other):
        return (isinstance(other, SparseBoc) and self.ids == other.ids
                and np.array_equal(self.weights, other.weights))

    def __repr__(self):
        body = ", ".join(f"({c!r}, {w:g})" for c, w in list(self)[:6])
        more = ", ..." if len(self) > 6 else ""
        return f"SparseBoc([{body}{more}])"

    def truncate(self, n: int) -> "SparseBoc":
        if n < 1:
            raise ValueError("n must be >= 1")
        return truncate(self, n)

    def scaled(self, factor: float) -> "SparseBoc":
        return SparseBoc((c, w * factor) for c, w in self)


def truncate(v: SparseBoc, n: int) -> SparseBoc:
    """Keep the ``n`` highest-weight entries (ties keep the smaller id)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    out = SparseBoc.__new__(SparseBoc)
    out.ids = v.ids[:n]
    out.weights = v.weights[:n]
    return out


def _norm(weights: np.ndarray) -> float:
    return math.sqrt(math.fsum(weights * weights))


def sparse_cosine(u: SparseBoc, v: SparseBoc) -> float:
    """Exact-match cosine via a sorted merge over concept ids."""
    if len(u) == 0 or len(v) == 0:
        raise EmptyBocError()
    ou = sorted(range(len(u)), key=u.ids.__getitem__)
    ov = sorted(range(len(v)), key=v.ids.__getitem__)
    i = j = 0
    terms = []
    while i < len(ou) and j < len(ov):
        a, b = u.ids[ou[i]], v.ids[ov[j]]
        if a == b:
            terms.append(u.weights[ou[i]] * v.weights[ov[j]])
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    if not terms:
        return 0.0
    nu = math.fsum(u.weights * u.weights)
    nv = math.fsum(v.weights * v.weights)
    return min(1.0, math.fsum(terms) / math.sqrt(nu * nv))


# ---------------------------------------------------------------------------
# TF-IDF concept index


def tfidf(tf: int, df: int, n_concepts: int) -> float:
    """Association score ``(1 + ln tf) * ln(N / df)``; zero when tf == 0."""
    if tf <= 0:
        return 0.0
    return (1.0 + math.log(tf)) * math.log(n_concepts / df)


@dataclass
class ConceptIndex:
    """Inverted index term -> (concept positions, scores), immutable after build."""

    concepts: list[str]
    postings: dict[str, tuple[np.ndarray, np.ndarray]]
    df: dict[str, int]
    position: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.position = {c: i for i, c in enumerate(self.concepts)}

    @property
    def n_concepts(self) -> int:
        return len(self.concepts)

    def score(self, concept_id: str, term: str) -> float:
        if term not in self.postings or concept_id not in self.position:
            return 0.0
        idx, scores = self.postings[term]
        hit = np.nonzero(idx == self.position[concept_id])[0]
        return float(scores[hit[0]]) if hit.size else 0.0


def build_index(docs: Iterable[AnnotatedDocument]) -> ConceptIndex:
    """Index word terms of concept articles, one document per concept.

    Concept mentions inside the articles are not index terms. Postings keep
    only positive scores, so terms present in every article have none.
    """
    concepts: list[str] = []
    seen: set[str] = set()
    term_tfs: dict[str, list[tuple[int, int]]] = {}
    for doc in docs:
        if doc.doc_id in seen:
            raise FormatError(f"duplicate concept document id {doc.doc_id!r}")
        seen.add(doc.doc_id)
        pos = len(concepts)
        concepts.append(doc.doc_id)
        tfs = Counter(t.surface for t in doc.tokens if isinstance(t, Word) and t.surface)
        for term, tf in tfs.items():
            term_tfs.setdefault(term, []).append((pos, tf))
    n = len(concepts)
    postings, df = {}, {}
    for term, rows in term_tfs.items():
        df[term] = len(rows)
        scored = [(p, tfidf(tf, len(rows), n)) for p, tf in rows]
        scored = [(p, s) for p, s in scored if s > 0]
        if scored:
            postings[term] = (np.array([p for p, _ in scored], dtype=np.int64),
                              np.array([s for _, s in scored], dtype=np.float64))
    return ConceptIndex(concepts, postings, df)


def build_boc(text: str, index: ConceptIndex, top_n: int) -> SparseBoc:
    """Sum association scores over every term occurrence, keep the top ``top_n``."""
    if top_n < 1:
        raise ValueError("top_n must be >= 1")
    hits = [index.postings[t] for t in tokenize_words(text) if t in index.postings]
    if not hits:
        return SparseBoc()
    idx = np.concatenate([h[0] for h in hits])
    scores = np.concatenate([h[1] for h in hits])
    uniq, inv = np.unique(idx, return_inverse=True)
    weights = np.bincount(inv, weights=scores)
    entries = [(index.concepts[c], w) for c, w in zip(uniq, weights) if w > 0]
    return SparseBoc(entries).truncate(top_n) if entries else SparseBoc()


# ---------------------------------------------------------------------------
# BOC files


def format_boc_record(record_id: str, boc: SparseBoc) -> str:
    return record_id + "\t" + " ".join(f"{c}:{w!r}" for c, w in boc)


def parse_boc_record(line: str, lineno: int = 0, source=None) -> tuple[str, SparseBoc]:
    record_id, sep, body = line.rstrip("\n").partition("\t")
    if not sep or not record_id:
        raise FormatError("expected <record_id><TAB><pairs>", lineno, source)
    entries = []
    for item in body.split():
        cid, colon, w = item.rpartition(":")
        if not colon or not cid:
            raise FormatError(f"bad concept:weight pair {item!r}", lineno, source)
        try:
            entries.append((cid, float(w)))
        except ValueError:
            raise FormatError(f"bad weight in {item!r}", lineno, source) from None
    try:
        return record_id, SparseBoc(entries)
    except ValueError as exc:
        raise FormatError(str(exc), lineno, source) from None


def read_boc_file(path) -> list[tuple[str, SparseBoc]]:
    records = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rid, boc = parse_boc_record(line, lineno, path)
            if rid in seen:
                raise FormatError(f"duplicate record id {rid!r}", lineno, path)
            seen.add(rid)
            records.append((rid, boc))
    return records


def write_boc_file(records: Iterable[tuple[str, SparseBoc]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rid, boc in records:
            fh.write(format_boc_record(rid, boc) + "\n")
