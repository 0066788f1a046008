"""Entity-relatedness ranking and dataless classification protocols."""
from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .boc import SparseBoc, read_boc_file, sparse_cosine
from .densify import AlignmentConfig, alignment_similarity, dense_cosine, densify
from .embeddings import EmbeddingStore
from .errors import ConceptVecError, FormatError

logger = logging.getLogger(__name__)

RELATED, UNRELATED = 1, 0


# ---------------------------------------------------------------------------
# ranking metrics


def dcg_at_k(rels: Sequence[int], k: int) -> float:
    return sum(r / math.log2(i + 2) for i, r in enumerate(rels[:k]))


def ndcg_at_k(rels: Sequence[int], k: int) -> float:
    """Binary-gain nDCG@k of labels given in ranked order."""
    if k < 1:
        raise ValueError("k must be >= 1")
    rels = [1 if r else 0 for r in rels]
    n_rel = sum(rels)
    if n_rel == 0:
        raise ValueError("nDCG undefined without related candidates")
    return dcg_at_k(rels, k) / dcg_at_k([1] * n_rel, k)


def average_precision(rels: Sequence[int]) -> float:
    hits, precisions = 0, []
    for i, r in enumerate(rels, 1):
        if r:
            hits += 1
            precisions.append(hits / i)
    if not hits:
        raise ValueError("average precision undefined without related candidates")
    return sum(precisions) / hits


def mean_average_precision(rankings: Sequence[Sequence[int]]) -> float:
    """Mean AP over rankings that contain at least one related item."""
    aps = [average_precision(r) for r in rankings if any(r)]
    if not aps:
        raise ValueError("no scoreable rankings")
    return sum(aps) / len(aps)


# ---------------------------------------------------------------------------
# relatedness


@dataclass
class RelatednessQuery:
    query: str
    candidates: list[tuple[str, int]]


def rank_candidates(q: RelatednessQuery, store: EmbeddingStore) -> list[tuple[str, int, float]]:
    """Candidates by descending cosine to the query; missing ones score -1.

    Raises ``KeyError`` if the query entity has no embedding.
    """
    qvec = store.vector(q.query).astype(np.float64)
    scored = []
    for cid, label in q.candidates:
        key = store.resolve(cid)
        if key is None:
            score = -1.0
        else:
            vec = store.input[store.index[key]]
            try:
                score = dense_cosine(qvec, vec)
            except ValueError:
                score = -1.0
        scored.append((cid, label, score))
    scored.sort(key=lambda t: (-t[2], t[0]))
    return scored


def read_relatedness(path) -> list[RelatednessQuery]:
    """Read ``query<TAB>candidate<TAB>label`` rows grouped by query id."""
    queries: dict[str, RelatednessQuery] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3 or parts[2] not in ("0", "1"):
                raise FormatError("expected query<TAB>candidate<TAB>0|1", lineno, path)
            q = queries.setdefault(parts[0], RelatednessQuery(parts[0], []))
            q.candidates.append((parts[1], int(parts[2])))
    return list(queries.values())


@dataclass
class EvalReport:
    """Metric values, sweep series and bookkeeping counts.

    For single-label assignment micro-averaged F1 equals accuracy; both
    names are filled.
    """

    strategy: str
    metrics: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, str, str, float]]:
        if self.sweep:
            return [("micro_f1", self.strategy, str(n), f1) for n, f1 in self.sweep]
        out = []
        for name, value in self.metrics.items():
            metric, _, n = name.partition("@")
            out.append((metric, self.strategy, n or "all", value))
        return out

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["metric", "strategy", "n", "value"])
        for metric, strategy, n, value in self.rows():
            w.writerow([metric, strategy, n, f"{value:.6f}"])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"strategy: {self.strategy}"]
        for name, value in self.metrics.items():
            lines.append(f"  {name:<12} {value:.4f}")
        if self.sweep:
            lines.append("  n      micro-F1")
            lines.extend(f"  {n:<6} {f1:.4f}" for n, f1 in self.sweep)
        for name, value in self.counts.items():
            lines.append(f"  {name}: {value}")
        return "\n".join(lines)


def evaluate_relatedness(queries: Sequence[RelatednessQuery], store: EmbeddingStore,
                         ks=(1, 5, 10), strategy: str = "embedding") -> EvalReport:
    """nDCG@k and MAP over queries; unscoreable queries are counted, not scored."""
    rankings = []
    missing = no_related = 0
    for q in queries:
        if not any(label for _, label in q.candidates):
            no_related += 1
            continue
        try:
            ranked = rank_candidates(q, store)
        except KeyError:
            missing += 1
            continue
        rankings.append([label for _, label, _ in ranked])
    report = EvalReport(strategy, counts={
        "queries": len(queries), "scored": len(rankings),
        "skipped_missing_query": missing, "skipped_no_related": no_related})
    if not rankings:
        raise ConceptVecError("no scoreable relatedness queries")
    for k in ks:
        report.metrics[f"ndcg@{k}"] = float(np.mean([ndcg_at_k(r, k) for r in rankings]))
    report.metrics["map"] = mean_average_precision(rankings)
    return report


# ---------------------------------------------------------------------------
# dataless classification


class SparseStrategy:
    """Exact-match cosine on the sparse vectors."""

    name = "sparse"

    def prepare(self, boc: SparseBoc):
        return boc

    def similarity(self, a, b) -> float:
        return sparse_cosine(a, b)


class DenseStrategy:
    """Densify every record once, then compare by cosine."""

    name = "dense"

    def __init__(self, store: EmbeddingStore):
        self.store = store

    def prepare(self, boc: SparseBoc):
        return densify(boc, self.store)

    def similarity(self, a, b) -> float:
        return dense_cosine(a, b)


class AlignmentStrategy:
    def __init__(self, store: EmbeddingStore, cfg: AlignmentConfig):
        self.store = store
        self.cfg = cfg
        self.name = cfg.mechanism

    def prepare(self, boc: SparseBoc):
        return boc

    def similarity(self, a, b) -> float:
        return alignment_similarity(a, b, self.store, self.cfg)


def make_strategy(name: str, store: EmbeddingStore | None = None, threshold: float = 0.85):
    if name == "sparse":
        return SparseStrategy()
    if store is None:
        raise ValueError(f"strategy {name!r} needs embeddings")
    if name == "dense":
        return DenseStrategy(store)
    return AlignmentStrategy(store, AlignmentConfig(threshold, name))


@dataclass
class DatalessTask:
    labels: list[tuple[str, SparseBoc]]
    instances: list[tuple[str, SparseBoc, int]]
    category_map: dict | None = None

    def __post_init__(self):
        if len(self.labels) < 2:
            raise ValueError("a dataless task needs at least two labels")
        for name, boc in self.labels:
            if len(boc) == 0:
                raise ValueError(f"label {name!r} has an empty BOC")
        for iid, _, gold in self.instances:
            if not 0 <= gold < len(self.labels):
                raise ValueError(f"instance {iid!r} has invalid gold index {gold}")

    @property
    def label_names(self) -> list[str]:
        return [n for n, _ in self.labels]

    def truncated(self, n: int) -> "DatalessTask":
        return DatalessTask([(name, b.truncate(n)) for name, b in self.labels],
                            [(i, b.truncate(n) if len(b) else b, g)
                             for i, b, g in self.instances],
                            self.category_map)


def read_tsv_pairs(path) -> list[tuple[str, str]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise FormatError("expected two tab-separated columns", lineno, path)
            rows.append((parts[0], parts[1]))
    return rows


def load_dataless_task(labels_path, instances_path, gold_path,
                       category_map_path=None) -> tuple[DatalessTask, int]:
    """Assemble a task from BOC and TSV files.

    A gold label that is not itself a task label is mapped through the
    category map when one is given, so fine and coarse tasks can share one
    gold file. Instances whose label still matches no task label are left
    out; their number is returned alongside the task.
    """
    labels = read_boc_file(labels_path)
    instances = read_boc_file(instances_path)
    gold = dict(read_tsv_pairs(gold_path))
    cmap = dict(read_tsv_pairs(category_map_path)) if category_map_path else None
    position = {name: i for i, (name, _) in enumerate(labels)}
    kept, dropped = [], 0
    for iid, boc in instances:
        if iid not in gold:
            raise FormatError(f"instance {iid!r} has no gold label", source=gold_path)
        label = gold[iid]
        if label not in position and cmap is not None:
            label = cmap.get(label, label)
        if label not in position:
            dropped += 1
            continue
        kept.append((iid, boc, position[label]))
    return DatalessTask(labels, kept, cmap), dropped


def classify_dataless(task: DatalessTask, strategy) -> EvalReport:
    """Assign each instance to its most similar label (ties: lowest index)."""
    labels = [strategy.prepare(b) for _, b in task.labels]
    correct = failed = 0
    for _, boc, gold in task.instances:
        try:
            rep = strategy.prepare(boc)
            sims = [strategy.similarity(lab, rep) for lab in labels]
        except (ConceptVecError, ValueError):
            failed += 1
            continue
        correct += int(np.argmax(sims)) == gold
    total = len(task.instances)
    f1 = correct / total if total else 0.0
    return EvalReport(strategy.name, metrics={"micro_f1": f1, "accuracy": f1},
                      counts={"instances": total, "correct": correct, "failed": failed})


def dimension_sweep(task: DatalessTask, strategy, dims: Sequence[int]) -> EvalReport:
    """Micro-F1 after truncating every BOC to its top ``n`` entries, per ``n``."""
    dims = list(dims)
    if dims != sorted(dims) or any(n < 1 for n in dims):
        raise ValueError("dims must be positive and ascending")
    report = EvalReport(strategy.name)
    failed = []
    for n in dims:
        r = classify_dataless(task.truncated(n), strategy)
        report.sweep.append((n, r.metrics["micro_f1"]))
        failed.append(r.counts["failed"])
    best_n, best = best_point(report.sweep)
    report.metrics["best_micro_f1"] = best
    report.counts.update(best_n=best_n, instances=len(task.instances), failed_per_n=failed)
    return report


def best_point(series) -> tuple[int, float]:
    """Highest F1 in a sweep and the smallest n reaching it."""
    best = max(f1 for _, f1 in series)
    return next((n, f1) for n, f1 in series if f1 == best)


def dims_to_match(series, target: float) -> int | None:
    """Smallest n whose F1 reaches ``target``, if any."""
    return next((n for n, f1 in series if f1 >= target), None)


def score_at(series) -> str:
    n, f1 = best_point(series)
    return f"{100 * f1:.2f}@{n}"
