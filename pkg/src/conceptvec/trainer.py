"""Skip-gram training with negative sampling for the CRC and 3C models.

Both models share one trainer; they differ only in the token stream fed
to it (``corpus.crc_stream`` vs ``corpus.threec_stream``). Windows are
fixed at ``window`` tokens on each side and never cross documents.
"""
from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from . import _kernels
from .corpus import Vocabulary
from .embeddings import EmbeddingStore
from .errors import NothingToTrainError, TrainingDivergedError

logger = logging.getLogger(__name__)

learning_rate = _kernels.learning_rate


@dataclass
class TrainConfig:
    # dim/window/epochs follow the published setup; negatives, learning
    # rates and sample are assumptions (not stated there).
    dim: int = 500
    window: int = 9
    epochs: int = 10
    negatives: int = 5
    initial_lr: float = 0.025
    min_lr: float = 1e-4
    seed: int = 1
    workers: int = 1
    model: str = "crc"
    sample: float = 0.0

    def __post_init__(self):
        for name in ("dim", "window", "negatives", "epochs", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0 < self.min_lr <= self.initial_lr:
            raise ValueError("need 0 < min_lr <= initial_lr")
        if self.sample < 0:
            raise ValueError("sample must be >= 0")
        self.model = self.model.lower()
        if self.model not in ("crc", "3c"):
            raise ValueError(f"unknown model {self.model!r}")

    def describe(self) -> str:
        return " ".join(f"{k}={v}" for k, v in asdict(self).items())


# ---------------------------------------------------------------------------
# contexts


def generate_contexts(stream: Iterable[str], vocab: Vocabulary,
                      window: int) -> Iterator[tuple[int, int]]:
    """Yield (target_id, context_id) pairs in training order.

    Out-of-vocabulary keys are removed before windowing, so they do not
    occupy window slots.
    """
    if window < 1:
        raise ValueError("window must be >= 1")
    ids = vocab.encode(stream)
    n = len(ids)
    for i in range(n):
        for j in range(max(0, i - window), min(n, i + window + 1)):
            if j != i:
                yield int(ids[i]), int(ids[j])


def count_pairs(lengths, window: int) -> int:
    """Number of context pairs produced by streams of the given lengths."""
    lengths = np.asarray(lengths, dtype=np.int64)
    m = np.minimum(lengths, window + 1)
    return int(np.sum(m * (m - 1) + 2 * window * (lengths - m)))


# ---------------------------------------------------------------------------
# objective and gradients


def log_sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(x)))


def _sigmoid(x):
    return np.exp(log_sigmoid(x))


@dataclass
class NSGradient:
    """Ascent gradients of one negative-sampling term.

    ``negatives`` rows line up with the drawn negative ids, one per slot;
    repeated ids are not merged.
    """

    target: int
    context: int
    negatives: np.ndarray
    d_input: np.ndarray
    d_context: np.ndarray
    d_negatives: np.ndarray

    def dense(self, shape) -> tuple[np.ndarray, np.ndarray]:
        """Accumulate into full (input, output) gradient matrices."""
        g_in = np.zeros(shape)
        g_out = np.zeros(shape)
        g_in[self.target] += self.d_input
        g_out[self.context] += self.d_context
        np.add.at(g_out, self.negatives, self.d_negatives)
        return g_in, g_out


def ns_objective(store: EmbeddingStore, target: int, context: int,
                 negatives: Sequence[int]) -> float:
    u = store.input[target].astype(np.float64)
    pos = float(store.output[context] @ u)
    neg = store.output[np.asarray(negatives)].astype(np.float64) @ u
    return float(log_sigmoid(pos) + np.sum(log_sigmoid(-neg)))


def ns_step_gradient(store: EmbeddingStore, target: int, context: int,
                     negatives: Sequence[int]) -> NSGradient:
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.size == 0:
        raise ValueError("negatives must be non-empty")
    u = store.input[target]
    v_ctx = store.output[context]
    v_neg = store.output[negatives]
    g_pos = 1.0 - _sigmoid(v_ctx @ u)
    g_neg = -_sigmoid(v_neg @ u)
    return NSGradient(
        target=int(target),
        context=int(context),
        negatives=negatives,
        d_input=g_pos * v_ctx + g_neg @ v_neg,
        d_context=g_pos * u,
        d_negatives=g_neg[:, None] * u[None, :],
    )


def exact_softmax_loss(store: EmbeddingStore, target: int, context: int) -> float:
    """Full-vocabulary -log p(context | target); only for small vocabularies."""
    logits = store.output.astype(np.float64) @ store.input[target].astype(np.float64)
    top = logits.max()
    return float(top + np.log(np.sum(np.exp(logits - top))) - logits[context])


def sample_validation_pairs(streams, vocab: Vocabulary, window: int, size: int,
                            negatives: int, seed: int = 0):
    """Draw a frozen set of (target, context, negatives) for monitoring."""
    pairs = [p for s in streams for p in generate_contexts(s, vocab, window)]
    if not pairs:
        raise NothingToTrainError()
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(pairs), size=min(size, len(pairs)), replace=False)
    negs = rng.choice(len(vocab), size=(len(picks), negatives), p=vocab.noise)
    return [(pairs[p][0], pairs[p][1], negs[i]) for i, p in enumerate(picks)]


def vocabulary_gaps(streams, vocab: Vocabulary) -> list[str]:
    """Vocabulary keys that never occur in ``streams``."""
    seen = set()
    for s in streams:
        seen.update(s)
    return [k for k in vocab.keys if k not in seen]


def mean_objective(store: EmbeddingStore, samples) -> float:
    return float(np.mean([ns_objective(store, t, c, n) for t, c, n in samples]))


# ---------------------------------------------------------------------------
# training


def _pack(encoded: list[np.ndarray]):
    lengths = np.array([len(e) for e in encoded], dtype=np.int64)
    ends = np.cumsum(lengths)
    starts = ends - lengths
    tokens = np.concatenate(encoded) if encoded else np.empty(0, dtype=np.int32)
    return tokens.astype(np.int32), starts, ends, lengths


def _partition(lengths: np.ndarray, window: int, workers: int) -> list[slice]:
    """Split documents into contiguous groups of roughly equal pair counts."""
    m = np.minimum(lengths, window + 1)
    per_doc = m * (m - 1) + 2 * window * (lengths - m)
    cum = np.cumsum(per_doc)
    total = cum[-1] if len(cum) else 0
    bounds = [0]
    for w in range(1, workers):
        bounds.append(int(np.searchsorted(cum, total * w / workers, side="right")))
    bounds.append(len(lengths))
    return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:])]


def init_store(vocab: Vocabulary, dim: int, seed: int, dtype=np.float32) -> EmbeddingStore:
    rng = np.random.default_rng(seed)
    w_in = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(vocab), dim)).astype(dtype)
    w_out = np.zeros((len(vocab), dim), dtype=dtype)
    return EmbeddingStore(list(vocab.keys), w_in, w_out, vocab)


def _check_finite(store: EmbeddingStore, epoch: int) -> None:
    for name, mat in (("input", store.input), ("output", store.output)):
        bad = ~np.isfinite(mat)
        if bad.any():
            rows = np.unique(np.nonzero(bad)[0])
            raise TrainingDivergedError(
                f"non-finite values in {name} matrix after epoch {epoch + 1}: "
                f"{int(bad.sum())} entries in {len(rows)} rows "
                f"(first keys: {[store.keys[r] for r in rows[:5]]}); lower the learning rate")


def train(streams: Iterable[Iterable[str]], vocab: Vocabulary, cfg: TrainConfig,
          callback: Callable[[int, EmbeddingStore], None] | None = None,
          dtype=np.float32) -> EmbeddingStore:
    """Fit input/output embeddings by SGD over every context pair.

    The learning rate decays linearly from ``initial_lr`` to ``min_lr``
    over all pairs of all epochs. ``callback(epoch, store)`` runs after each
    epoch. Results are bit-reproducible for ``workers == 1``; with more
    workers the threads update the shared matrices without locks.
    """
    encoded = [vocab.encode(s) for s in streams]
    tokens, starts, ends, lengths = _pack(encoded)
    rng = np.random.default_rng(cfg.seed)
    store = init_store(vocab, cfg.dim, cfg.seed, dtype)

    keep = vocab.keep_probabilities(cfg.sample)
    epochs = []
    for _ in range(cfg.epochs):
        if cfg.sample > 0:
            mask = rng.random(len(tokens)) < keep[tokens]
            kept = [tokens[a:b][mask[a:b]] for a, b in zip(starts, ends)]
            epochs.append(_pack(kept))
        else:
            epochs.append((tokens, starts, ends, lengths))

    parts = _partition(lengths, cfg.window, cfg.workers)
    totals = np.zeros(len(parts), dtype=np.int64)
    for _, _, _, lens in epochs:
        totals += [count_pairs(lens[p], cfg.window) for p in parts]
    if totals.sum() == 0:
        raise NothingToTrainError()

    cdf = vocab.noise_cdf
    states = [np.array([cfg.seed * 1000003 + w + 1], dtype=np.uint64)
              for w in range(len(parts))]
    done = [0] * len(parts)
    logger.info("training %s: %d pairs over %d epochs, vocab %d, %s",
                cfg.model, int(totals.sum()), cfg.epochs, len(vocab), cfg.describe())

    def run(w, toks, st, en):
        if totals[w] == 0:
            return done[w]
        return _kernels.train_span(toks, st[parts[w]], en[parts[w]], cfg.window,
                                   cfg.negatives, cdf, store.input, store.output,
                                   cfg.initial_lr, cfg.min_lr, done[w], int(totals[w]),
                                   states[w])

    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(len(parts)) if len(parts) > 1 else None
    try:
        for epoch, (toks, st, en, _) in enumerate(epochs):
            if pool is None:
                done[0] = run(0, toks, st, en)
            else:
                futures = [pool.submit(run, w, toks, st, en) for w in range(len(parts))]
                done = [f.result() for f in futures]
            _check_finite(store, epoch)
            if callback is not None:
                callback(epoch, store)
    finally:
        if pool is not None:
            pool.shutdown()
    elapsed = time.perf_counter() - t0
    n_tokens = sum(len(e[0]) for e in epochs)
    logger.info("trained %d tokens in %.2fs (%.0f tokens/s)", n_tokens, elapsed,
                n_tokens / max(elapsed, 1e-9))
    return store
