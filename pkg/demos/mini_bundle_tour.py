"""
Both evaluations on the bundled mini corpus
===========================================

Train CRC embeddings (words and concepts in one stream) on the small
bundled corpus, then score entity relatedness and dataless classification
with sparse, densified and aligned vectors.
"""

from conceptvec.corpus import RedirectMap, build_vocabulary, corpus_streams, read_corpus
from conceptvec.evaluation import (dimension_sweep, evaluate_relatedness, load_dataless_task,
                                   make_strategy, read_relatedness, score_at)
from conceptvec.synthetic import bundled_data_dir
from conceptvec.trainer import TrainConfig, train

data = bundled_data_dir()
docs = read_corpus(data / "mini_corpus.txt", RedirectMap.from_tsv(data / "redirects.tsv"))
streams = corpus_streams(docs, "crc")
vocab = build_vocabulary(streams)
print(f"{len(docs)} articles, vocabulary of {len(vocab)}")

# smaller than the default setup so the tour runs in well under a minute
store = train(streams, vocab, TrainConfig(dim=100, window=5, epochs=5))

# entity relatedness: rank candidates by cosine to the query concept
report = evaluate_relatedness(read_relatedness(data / "relatedness.tsv"), store)
print(report.table())

# dataless classification: each instance goes to its most similar label
dims = [1, 2, 5, 10, 25, 50, 100]
for name in ("hockey_baseball", "autos_motorcycles", "sport_religion"):
    task, _ = load_dataless_task(data / f"labels_{name}.boc", data / "instances.boc",
                                 data / "gold.tsv", data / "category_map.tsv")
    print(f"\n{name}: {len(task.instances)} instances")
    for strategy in ("sparse", "dense", "hungarian"):
        sweep = dimension_sweep(task, make_strategy(strategy, store), dims)
        row = " ".join(f"{f1:.2f}" for _, f1 in sweep.sweep)
        print(f"  {strategy:>9}  {row}   best {score_at(sweep.sweep)}")
