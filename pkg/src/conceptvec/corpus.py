"""Concept-annotated corpus reading, token streams and vocabulary.

Corpus files are UTF-8 text. Documents are groups of lines separated by
blank lines; the first line of a group is ``#doc <doc_id>``. Concept
mentions are written inline as ``[[<concept_id>|<surface text>]]`` and a
literal ``[[`` in running text is escaped as ``\\[\\[``::

    #doc 1042
    The [[C42|big apple]] is large, said [[C7|the mayor]].

A mention becomes a single concept token; the surface text is dropped.
Token streams are plain lists of string keys: words are lowercased
surfaces and concepts carry a ``c:`` prefix (``c:C42``).
"""
from __future__ import annotations

import io
import logging
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Iterator, Mapping

import numpy as np

from .errors import EmptyVocabularyError, FormatError

logger = logging.getLogger(__name__)

CONCEPT_PREFIX = "c:"
NOISE_EXPONENT = 0.75
DEFAULT_WORD_MIN_COUNT = 5
DEFAULT_CONCEPT_MIN_COUNT = 1

WORD = "word"
CONCEPT = "concept"

# escaped literal | complete mention | dangling opener
_MARKUP = re.compile(r"(\\\[\\\[)|\[\[(.*?)\]\]|(\[\[)")


@dataclass(frozen=True)
class Word:
    surface: str

    @property
    def key(self) -> str:
        return self.surface


@dataclass(frozen=True)
class Concept:
    concept_id: str

    @property
    def key(self) -> str:
        return CONCEPT_PREFIX + self.concept_id


Token = Word | Concept


@dataclass
class AnnotatedDocument:
    doc_id: str
    tokens: list


@dataclass
class ParseStats:
    documents: int = 0
    skipped_empty: int = 0
    mentions: int = 0
    redirected: int = 0


def concept_key(concept_id: str) -> str:
    return CONCEPT_PREFIX + concept_id


def is_concept_key(key: str) -> bool:
    return key.startswith(CONCEPT_PREFIX)


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_words(text: str) -> list[str]:
    """Split on whitespace, strip surrounding punctuation, lowercase."""
    out = []
    for raw in text.split():
        start, end = 0, len(raw)
        while start < end and _is_punct(raw[start]):
            start += 1
        while end > start and _is_punct(raw[end - 1]):
            end -= 1
        if start < end:
            out.append(raw[start:end].lower())
    return out


# ---------------------------------------------------------------------------
# redirects


class RedirectMap(Mapping[str, str]):
    """Alias id -> canonical id, with chains collapsed at construction.

    After construction every alias resolves in a single lookup and no
    canonical id appears as a key. Cycles are rejected.
    """

    def __init__(self, pairs: Mapping[str, str] | Iterable[tuple[str, str]] = ()):
        raw = dict(pairs.items() if isinstance(pairs, Mapping) else pairs)
        resolved: dict[str, str] = {}
        for alias in raw:
            seen = [alias]
            target = raw[alias]
            while target in raw and target != raw[target]:
                if target in seen:
                    raise FormatError(f"redirect cycle through {target!r}")
                seen.append(target)
                target = raw[target]
            if target != alias:
                resolved[alias] = target
        self._map = resolved

    def resolve(self, concept_id: str) -> str:
        return self._map.get(concept_id, concept_id)

    def __getitem__(self, key):
        return self._map[key]

    def __iter__(self):
        return iter(self._map)

    def __len__(self):
        return len(self._map)

    @classmethod
    def from_tsv(cls, path) -> "RedirectMap":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not parts[0] or not parts[1]:
                    raise FormatError("expected alias<TAB>canonical", lineno, path)
                pairs.append((parts[0], parts[1]))
        return cls(pairs)


# ---------------------------------------------------------------------------
# parsing


def parse_line(line: str, lineno: int = 0, redirects: RedirectMap | None = None,
               stats: ParseStats | None = None) -> list:
    tokens: list = []
    buf: list[str] = []

    def flush():
        if buf:
            tokens.extend(Word(w) for w in tokenize_words("".join(buf)))
            buf.clear()

    pos = 0
    for m in _MARKUP.finditer(line):
        buf.append(line[pos:m.start()])
        pos = m.end()
        if m.group(1) is not None:
            buf.append("[[")
            continue
        if m.group(3) is not None:
            raise FormatError("unterminated concept mention", lineno)
        flush()
        concept_id = m.group(2).split("|", 1)[0].strip()
        if not concept_id:
            raise FormatError("empty concept id in mention", lineno)
        canonical = redirects.resolve(concept_id) if redirects is not None else concept_id
        if stats is not None:
            stats.mentions += 1
            stats.redirected += canonical != concept_id
        tokens.append(Concept(canonical))
    buf.append(line[pos:])
    flush()
    return tokens


def _open_text(source) -> tuple[IO[str], bool]:
    if isinstance(source, (str, Path)):
        return open(source, encoding="utf-8"), True
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8")), True
    if isinstance(source, io.TextIOBase):
        return source, False
    # assume a binary file object
    return io.TextIOWrapper(source, encoding="utf-8"), False


def parse_corpus(source, redirects: RedirectMap | None = None,
                 stats: ParseStats | None = None) -> Iterator[AnnotatedDocument]:
    """Yield documents from a corpus file, path, bytes or open stream.

    Word tokens are lowercased and every concept id is passed through
    ``redirects``. Documents without tokens are skipped and counted in
    ``stats.skipped_empty``. Raises :class:`FormatError` with the line
    number for text before the first ``#doc`` header or for an
    unterminated mention.
    """
    stats = stats if stats is not None else ParseStats()
    fh, owned = _open_text(source)
    doc_id = None
    tokens: list = []

    def finish():
        if doc_id is None:
            return None
        if not tokens:
            stats.skipped_empty += 1
            logger.debug("skipping empty document %s", doc_id)
            return None
        stats.documents += 1
        return AnnotatedDocument(doc_id, list(tokens))

    try:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                doc = finish()
                if doc is not None:
                    yield doc
                doc_id, tokens = None, []
                continue
            if doc_id is None:
                if not line.startswith("#doc "):
                    raise FormatError("expected '#doc <id>' header", lineno)
                doc_id = line[5:].strip()
                if not doc_id:
                    raise FormatError("empty document id", lineno)
                continue
            tokens.extend(parse_line(line, lineno, redirects, stats))
        doc = finish()
        if doc is not None:
            yield doc
    except FormatError as exc:
        if exc.source is None and isinstance(source, (str, Path)):
            raise FormatError(exc.message, exc.line, source) from None
        raise
    finally:
        if owned:
            fh.close()
    if stats.skipped_empty:
        logger.warning("skipped %d empty documents", stats.skipped_empty)


def read_corpus(path, redirects: RedirectMap | None = None,
                stats: ParseStats | None = None) -> list[AnnotatedDocument]:
    return list(parse_corpus(path, redirects, stats))


def _escape(text: str) -> str:
    return text.replace("[[", "\\[\\[")


def serialize_document(doc: AnnotatedDocument) -> str:
    parts = []
    for tok in doc.tokens:
        if isinstance(tok, Concept):
            parts.append(f"[[{tok.concept_id}|{tok.concept_id}]]")
        else:
            parts.append(_escape(tok.surface))
    return f"#doc {doc.doc_id}\n{' '.join(parts)}\n"


def write_corpus(docs: Iterable[AnnotatedDocument], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(serialize_document(d) for d in docs))


# ---------------------------------------------------------------------------
# token streams


def crc_stream(doc: AnnotatedDocument) -> list[str]:
    """Mixed word and concept keys, in document order."""
    return [tok.key for tok in doc.tokens]


def threec_stream(doc: AnnotatedDocument) -> list[str]:
    """Concept keys only, in document order."""
    return [tok.key for tok in doc.tokens if isinstance(tok, Concept)]


STREAMS = {"crc": crc_stream, "3c": threec_stream}


def corpus_streams(docs: Iterable[AnnotatedDocument], model: str = "crc") -> list[list[str]]:
    try:
        fn = STREAMS[model.lower()]
    except KeyError:
        raise ValueError(f"unknown model {model!r}; expected 'crc' or '3c'") from None
    return [s for s in map(fn, docs) if s]


# ---------------------------------------------------------------------------
# vocabulary


def count_tokens(streams: Iterable[Iterable[str]]) -> Counter:
    counts: Counter = Counter()
    for stream in streams:
        counts.update(stream)
    return counts


@dataclass
class Vocabulary:
    """Dense id <-> key mapping with counts and a noise distribution.

    Entries are ordered by descending count, ties broken by key. The noise
    distribution is proportional to ``count ** 0.75``.
    """

    keys: list[str]
    counts: np.ndarray
    noise_exponent: float = NOISE_EXPONENT
    index: dict = field(init=False, repr=False)
    noise: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if len(self.keys) != len(self.counts):
            raise ValueError("keys and counts differ in length")
        if not self.keys:
            raise EmptyVocabularyError()
        self.index = {k: i for i, k in enumerate(self.keys)}
        if len(self.index) != len(self.keys):
            raise ValueError("duplicate vocabulary keys")
        weights = self.counts.astype(np.float64) ** self.noise_exponent
        self.noise = weights / math.fsum(weights)

    @classmethod
    def from_counts(cls, counts: Mapping[str, int], min_count: int | None = None,
                    kind_filter: str = "all", noise_exponent: float = NOISE_EXPONENT,
                    ) -> "Vocabulary":
        """Prune and index a merged count map.

        With ``min_count=None`` words need 5 occurrences and concepts 1;
        an explicit value applies to both kinds.
        """
        if min_count is not None and min_count < 1:
            raise ValueError("min_count must be >= 1")
        if kind_filter not in ("all", "concepts"):
            raise ValueError(f"unknown kind_filter {kind_filter!r}")
        kept = []
        for key, n in counts.items():
            concept = is_concept_key(key)
            if kind_filter == "concepts" and not concept:
                continue
            if min_count is not None:
                threshold = min_count
            else:
                threshold = DEFAULT_CONCEPT_MIN_COUNT if concept else DEFAULT_WORD_MIN_COUNT
            if n >= threshold:
                kept.append((key, n))
        if not kept:
            raise EmptyVocabularyError()
        kept.sort(key=lambda kv: (-kv[1], kv[0]))
        return cls([k for k, _ in kept], np.array([n for _, n in kept]), noise_exponent)

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key) -> bool:
        return key in self.index

    def id_of(self, key: str) -> int:
        return self.index[key]

    def key_of(self, idx: int) -> str:
        return self.keys[idx]

    def kind_of(self, idx: int) -> str:
        return CONCEPT if is_concept_key(self.keys[idx]) else WORD

    @property
    def noise_cdf(self) -> np.ndarray:
        cdf = np.cumsum(self.noise)
        cdf[-1] = 1.0
        return cdf

    def encode(self, stream: Iterable[str]) -> np.ndarray:
        """Map a key stream to ids, dropping out-of-vocabulary keys."""
        index = self.index
        return np.fromiter((index[k] for k in stream if k in index), dtype=np.int32)

    def keep_probabilities(self, sample: float) -> np.ndarray:
        """Frequent-token subsampling keep probabilities (1.0 when disabled)."""
        if sample <= 0:
            return np.ones(len(self), dtype=np.float64)
        freq = self.counts / self.counts.sum()
        keep = (np.sqrt(freq / sample) + 1.0) * (sample / freq)
        return np.minimum(keep, 1.0)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for i, (key, n) in enumerate(zip(self.keys, self.counts)):
                fh.write(f"{i}\t{self.kind_of(i)}\t{key}\t{n}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        keys, counts = [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 4:
                    raise FormatError("expected id<TAB>kind<TAB>key<TAB>count", lineno, path)
                idx, kind, key, n = parts
                if not idx.isdigit() or int(idx) != len(keys):
                    raise FormatError(f"non-contiguous id {idx!r}", lineno, path)
                if kind != (CONCEPT if is_concept_key(key) else WORD):
                    raise FormatError(f"kind {kind!r} does not match key {key!r}", lineno, path)
                try:
                    counts.append(int(n))
                except ValueError:
                    raise FormatError(f"bad count {n!r}", lineno, path) from None
                keys.append(key)
        if not keys:
            raise EmptyVocabularyError()
        return cls(keys, np.array(counts))


def build_vocabulary(streams: Iterable[Iterable[str]], min_count: int | None = None,
                     kind_filter: str = "all") -> Vocabulary:
    return Vocabulary.from_counts(count_tokens(streams), min_count, kind_filter)
