"""Seeded synthetic corpora with known topical structure.

Two generators live here:

* :func:`cluster_corpus` builds a small corpus whose concepts fall into
  disjoint co-occurrence clusters. It is used to check that training
  separates the clusters.
* :func:`write_mini_bundle` writes the newsgroup-flavoured mini corpus
  shipped in ``conceptvec/data`` together with its redirect file,
  relatedness queries and dataless classification tasks.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .boc import SparseBoc, build_boc, build_index, write_boc_file
from .corpus import AnnotatedDocument, Concept, RedirectMap, Word, read_corpus
from .evaluation import DatalessTask

GENERAL = """the a of to and in is it that was for on are with as this be at by have
from or an they which one you were all we can there their has been if more when
will would who so no about some what out up into them than its only other new
also time two may then do first any like now my over such our man me even most
made after many before must through back years where much your way well down should
because each just those how too good very make still own see men work long get here
between both under never same last another while might great old off come since
against go came right used take three""".split()

# fine topic -> (coarse category, topic words)
TOPICS = {
    "rec.sport.hockey": ("Sport", "hockey puck ice rink goalie nhl skate stick slapshot "
                         "defenseman penalty powerplay playoffs faceoff zamboni blueline "
                         "hattrick icing overtime winger"),
    "rec.sport.baseball": ("Sport", "baseball pitcher inning homerun bat batter catcher "
                           "dugout mlb bullpen strikeout shortstop outfield umpire pitch "
                           "bunt doubleheader slugger infield era"),
    "rec.autos": ("Sport", "car engine sedan transmission dealer horsepower brakes tires "
                  "mileage fuel coupe chassis wagon sunroof gearbox ignition radiator "
                  "convertible hatchback warranty"),
    "rec.motorcycles": ("Sport", "motorcycle bike rider helmet harley throttle handlebar "
                        "sidecar clutch saddle biker kickstand fairing exhaust superbike "
                        "chopper moped leathers wheelie piston"),
    "talk.politics.guns": ("Politics", "gun firearm rifle handgun ammunition pistol nra "
                           "caliber holster trigger shotgun magazine permit concealed "
                           "background militia amendment ballistics cartridge revolver"),
    "talk.politics.mideast": ("Politics", "israel palestinian arab gaza lebanon syria "
                              "jerusalem occupation settlement intifada ceasefire refugees "
                              "zionism territories hezbollah checkpoint border armenian "
                              "turkish diplomacy"),
    "talk.politics.misc": ("Politics", "congress senate taxes clinton election legislation "
                           "budget deficit lobby policy vote republican democrat bill "
                           "governor campaign veto constitution welfare reform"),
    "soc.religion.christian": ("Religion", "church jesus christ bible gospel prayer "
                               "salvation faith scripture baptism sermon pastor resurrection "
                               "sin grace worship apostle catholic protestant sacrament"),
    "alt.atheism": ("Religion", "atheist atheism god belief evidence religion argument "
                    "morality existence skeptic theism agnostic reason rational proof dogma "
                    "secular humanist deity claim"),
    "talk.religion.misc": ("Religion", "cult koresh waco biblical prophecy moral faithful "
                           "religious spiritual ritual sect doctrine heresy divine believer "
                           "tradition theology occult pagan mysticism"),
}

COARSE = {
    "Sport": "team game season player win score league coach fans match".split(),
    "Politics": "government law rights state people president war military public "
                "country".split(),
    "Religion": "soul spirit heaven holy truth church faith belief sacred worship".split(),
}

# Task name -> label names, mirroring the fine- and coarse-grained setups
FINE_TASKS = {
    "hockey_baseball": ["rec.sport.hockey", "rec.sport.baseball"],
    "autos_motorcycles": ["rec.autos", "rec.motorcycles"],
    "guns_mideast_misc": ["talk.politics.guns", "talk.politics.mideast", "talk.politics.misc"],
}
COARSE_TASKS = {
    "sport_politics": ["Sport", "Politics"],
    "sport_religion": ["Sport", "Religion"],
}


def topic_words(topic: str) -> list[str]:
    return TOPICS[topic][1].split()


# ---------------------------------------------------------------------------
# cluster corpus


def cluster_corpus(n_clusters: int = 3, concepts_per_cluster: int = 10,
                   n_tokens: int = 200_000, doc_len: int = 100, concept_rate: float = 0.4,
                   seed: int = 0) -> tuple[list[AnnotatedDocument], dict[str, int]]:
    """Documents that each draw concepts from a single cluster.

    Returns the documents and a map concept id -> cluster. Words are drawn
    from a per-cluster word list (70%) or a shared list.
    """
    rng = np.random.default_rng(seed)
    cluster_of = {}
    concepts = []
    for c in range(n_clusters):
        ids = [f"K{c}_{j}" for j in range(concepts_per_cluster)]
        concepts.append(ids)
        cluster_of.update((cid, c) for cid in ids)
    words = [[f"w{c}x{j}" for j in range(20)] for c in range(n_clusters)]
    docs = []
    total = 0
    while total < n_tokens:
        c = int(rng.integers(n_clusters))
        kinds = rng.random(doc_len)
        tokens = []
        for r in kinds:
            if r < concept_rate:
                tokens.append(Concept(concepts[c][rng.integers(concepts_per_cluster)]))
            elif rng.random() < 0.7:
                tokens.append(Word(words[c][rng.integers(20)]))
            else:
                tokens.append(Word(GENERAL[rng.integers(len(GENERAL))]))
        docs.append(AnnotatedDocument(f"d{len(docs)}", tokens))
        total += doc_len
    return docs, cluster_of


def disjoint_dataless_task(cluster_of: dict[str, int], classes=(0, 1), label_size: int = 3,
                           instance_size: int = 5, per_class: int = 50,
                           seed: int = 0) -> DatalessTask:
    """Dataless task whose labels and instances never share a concept id.

    Each label uses the first ``label_size`` concepts of its cluster;
    instances draw from the remaining concepts of the same cluster.
    """
    rng = np.random.default_rng(seed)
    members = {c: sorted(k for k, v in cluster_of.items() if v == c) for c in classes}
    labels = []
    instances = []
    for gold, c in enumerate(classes):
        head, rest = members[c][:label_size], members[c][label_size:]
        labels.append((f"cluster{c}", SparseBoc((cid, 1.0 + i) for i, cid in enumerate(head))))
        for i in range(per_class):
            picks = rng.choice(len(rest), size=min(instance_size, len(rest)), replace=False)
            weights = rng.uniform(0.1, 5.0, size=len(picks))
            instances.append((f"c{c}_{i}", SparseBoc((rest[p], w) for p, w in
                                                     zip(picks, weights)), gold))
    return DatalessTask(labels, instances)


# ---------------------------------------------------------------------------
# mini bundle


def _concept_ids():
    out = {}
    for t, topic in enumerate(TOPICS):
        out[topic] = [str(10000 + 100 * t + j) for j in range(24)]
    return out


def _words_for(rng, n, topic, signature, p_sig, p_topic, p_coarse, sibling=None, p_sib=0.0):
    coarse = COARSE[TOPICS[topic][0]]
    tw = topic_words(topic)
    sib = topic_words(sibling) if sibling else None
    out = []
    for r in rng.random(n):
        if r < p_sig and signature:
            out.append(signature[rng.integers(len(signature))])
        elif r < p_sig + p_topic:
            out.append(tw[rng.integers(len(tw))])
        elif r < p_sig + p_topic + p_sib and sib:
            out.append(sib[rng.integers(len(sib))])
        elif r < p_sig + p_topic + p_sib + p_coarse:
            out.append(coarse[rng.integers(len(coarse))])
        else:
            out.append(GENERAL[rng.integers(len(GENERAL))])
    return out


def _sentences(words: list[str], rng) -> str:
    out, i = [], 0
    while i < len(words):
        n = int(rng.integers(8, 16))
        chunk = words[i:i + n]
        chunk[0] = chunk[0].capitalize()
        if len(chunk) > 5 and rng.random() < 0.4:
            chunk[len(chunk) // 2] += ","
        out.append(" ".join(chunk) + ".")
        i += n
    return " ".join(out)


def mini_corpus_text(seed: int = 2017, article_len: int = 560) -> tuple[str, str]:
    """Return (corpus text, redirect TSV text) for the mini concept corpus."""
    rng = np.random.default_rng(seed)
    ids = _concept_ids()
    topics = list(TOPICS)
    by_coarse = {}
    for topic, (coarse, _) in TOPICS.items():
        by_coarse.setdefault(coarse, []).append(topic)
    all_ids = [cid for t in topics for cid in ids[t]]

    # every fifth concept gets an alias; every third alias is itself aliased
    aliases: dict[str, list[str]] = {}
    redirect_rows = []
    next_alias = 90000
    for n, cid in enumerate(all_ids):
        if n % 5 == 0:
            a1 = str(next_alias)
            next_alias += 1
            redirect_rows.append((a1, cid))
            aliases[cid] = [a1]
            if n % 15 == 0:
                a2 = str(next_alias)
                next_alias += 1
                redirect_rows.append((a2, a1))
                aliases[cid].append(a2)

    def mention(cid, topic):
        tw = topic_words(topic)
        surface = " ".join(tw[i] for i in rng.choice(len(tw), size=2, replace=False))
        ref = cid
        if cid in aliases and rng.random() < 0.3:
            ref = aliases[cid][rng.integers(len(aliases[cid]))]
        return f"[[{ref}|{surface}]]"

    topic_of = {cid: t for t in topics for cid in ids[t]}
    chunks = []
    for topic in topics:
        coarse = TOPICS[topic][0]
        tw = topic_words(topic)
        for j, cid in enumerate(ids[topic]):
            signature = [tw[(3 * j + k) % len(tw)] for k in range(3)]
            words = _words_for(rng, article_len, topic, signature, 0.12, 0.36, 0.12)
            for pos in range(len(words)):
                if rng.random() < 0.15:
                    r = rng.random()
                    if r < 0.8:
                        other = ids[topic][rng.integers(24)]
                    elif r < 0.92:
                        sib = by_coarse[coarse][rng.integers(len(by_coarse[coarse]))]
                        other = ids[sib][rng.integers(24)]
                    else:
                        other = all_ids[rng.integers(len(all_ids))]
                    words[pos] = mention(other, topic_of[other])
            chunks.append(f"#doc {cid}\n{_sentences(words, rng)}\n")
    redirects = "".join(f"{a}\t{b}\n" for a, b in redirect_rows)
    return "\n".join(chunks), redirects


def write_mini_bundle(outdir, seed: int = 2017) -> dict[str, Path]:
    """Write the mini corpus and every derived evaluation file into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed + 1)
    paths = {}

    corpus, redirects = mini_corpus_text(seed)
    paths["corpus"] = outdir / "mini_corpus.txt"
    paths["corpus"].write_text(corpus, encoding="utf-8")
    paths["redirects"] = outdir / "redirects.tsv"
    paths["redirects"].write_text(redirects, encoding="utf-8")

    docs = read_corpus(paths["corpus"], RedirectMap.from_tsv(paths["redirects"]))
    index = build_index(docs)
    ids = _concept_ids()
    topics = list(TOPICS)

    paths["category_map"] = outdir / "category_map.tsv"
    paths["category_map"].write_text(
        "".join(f"{t}\t{c}\n" for t, (c, _) in TOPICS.items()), encoding="utf-8")

    # labels: name plus a few descriptive keywords
    def describe(topic):
        return " ".join(topic.split(".")[-1:] + topic_words(topic)[:6])

    fine_labels = {t: build_boc(describe(t), index, 100) for t in topics}
    coarse_labels = {}
    for coarse, kw in COARSE.items():
        members = [t for t in topics if TOPICS[t][0] == coarse]
        text = " ".join([coarse.lower()] + kw[:4] + [describe(t) for t in members])
        coarse_labels[coarse] = build_boc(text, index, 100)
    for task, names in FINE_TASKS.items():
        paths[f"labels_{task}"] = outdir / f"labels_{task}.boc"
        write_boc_file([(n, fine_labels[n]) for n in names], paths[f"labels_{task}"])
    for task, names in COARSE_TASKS.items():
        paths[f"labels_{task}"] = outdir / f"labels_{task}.boc"
        write_boc_file([(n, coarse_labels[n]) for n in names], paths[f"labels_{task}"])

    # instances: short posts with some vocabulary borrowed from a sibling topic
    siblings = {t: [s for s in topics if s != t and TOPICS[s][0] == TOPICS[t][0]]
                for t in topics}
    records, gold = [], []
    for topic in topics:
        for i in range(40):
            sib = siblings[topic][rng.integers(len(siblings[topic]))]
            words = _words_for(rng, 60, topic, None, 0.0, 0.22, 0.15, sib, 0.10)
            rid = f"{topic}/{i:03d}"
            boc = build_boc(" ".join(words), index, 100)
            records.append((rid, boc))
            gold.append(f"{rid}\t{topic}\n")
    paths["instances"] = outdir / "instances.boc"
    write_boc_file(records, paths["instances"])
    paths["gold"] = outdir / "gold.tsv"
    paths["gold"].write_text("".join(gold), encoding="utf-8")

    # relatedness: related = mostly same topic plus two sibling-topic concepts
    rows = []
    for q in range(60):
        topic = topics[q % len(topics)]
        query = ids[topic][3 * (q // len(topics))]
        same = [c for c in ids[topic] if c != query]
        near = [c for s in siblings[topic] for c in ids[s]]
        far = [c for t in topics if TOPICS[t][0] != TOPICS[topic][0] for c in ids[t]]
        picked_near = list(rng.choice(near, size=8, replace=False))
        related = list(rng.choice(same, size=6, replace=False)) + picked_near[:2]
        unrelated = picked_near[2:] + \
            list(rng.choice(far, size=16, replace=False))
        cands = [(c, 1) for c in related] + [(c, 0) for c in unrelated]
        order = rng.permutation(len(cands))
        rows.extend(f"{query}\t{cands[k][0]}\t{cands[k][1]}\n" for k in order)
    paths["relatedness"] = outdir / "relatedness.tsv"
    paths["relatedness"].write_text("".join(rows), encoding="utf-8")
    return paths


def bundled_data_dir() -> Path:
    return Path(__file__).parent / "data"
