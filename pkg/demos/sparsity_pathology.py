"""
Why sparse concept vectors fail on short texts
==============================================

Two texts about the same topic can mention entirely different concepts.
Their sparse vectors then share no dimension and their cosine is zero.
Averaging concept embeddings fixes that.
"""

import time

from conceptvec.corpus import build_vocabulary, corpus_streams
from conceptvec.evaluation import dimension_sweep, make_strategy
from conceptvec.synthetic import cluster_corpus, disjoint_dataless_task
from conceptvec.trainer import TrainConfig, train

# a synthetic corpus: 3 topic clusters of 10 concepts, ~200k tokens
docs, cluster_of = cluster_corpus(seed=0)
print(f"{len(docs)} documents, {len(cluster_of)} concepts")

# 3C model: skip-gram over the concept mentions only
streams = corpus_streams(docs, "3c")
vocab = build_vocabulary(streams, kind_filter="concepts")
t0 = time.perf_counter()
store = train(streams, vocab, TrainConfig(dim=50, window=5, epochs=10, model="3c"))
print(f"trained in {time.perf_counter() - t0:.1f}s")

# labels use the first 3 concepts of a cluster, instances only the rest
task = disjoint_dataless_task(cluster_of, classes=(0, 1), seed=7)

dims = [1, 2, 3, 5]
for strategy in (make_strategy("sparse"), make_strategy("dense", store)):
    report = dimension_sweep(task, strategy, dims)
    row = "  ".join(f"n={n}: {f1:.2f}" for n, f1 in report.sweep)
    print(f"{strategy.name:>7}  {row}")

# sparse stays at chance (every similarity is 0, ties go to the first
# label); the dense vectors separate the classes from a single concept
