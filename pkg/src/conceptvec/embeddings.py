"""Embedding matrices and their on-disk formats.

Text format (word2vec-text compatible)::

    V dim
    key v_1 ... v_dim

Binary format: magic ``CVEC1``, little-endian u64 V and u64 dim, V keys as
u32 length + UTF-8 bytes, then V*dim little-endian float32 values in
row-major order.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CONCEPT_PREFIX, Vocabulary
from .errors import FormatError

MAGIC = b"CVEC1"
TEXT, BINARY = "text", "binary"


@dataclass
class EmbeddingStore:
    """Input (published) and output embedding matrices over one key space.

    ``output`` is ``None`` for stores read back from disk, which only carry
    the input matrix.
    """

    keys: list[str]
    input: np.ndarray
    output: np.ndarray | None = None
    vocab: Vocabulary | None = field(default=None, repr=False)
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        if self.input.ndim != 2 or self.input.shape[0] != len(self.keys):
            raise ValueError(f"input matrix shape {self.input.shape} does not match "
                             f"{len(self.keys)} keys")
        if self.output is not None and self.output.shape != self.input.shape:
            raise ValueError("input and output matrices differ in shape")
        self.index = {k: i for i, k in enumerate(self.keys)}

    @property
    def dim(self) -> int:
        return self.input.shape[1]

    def __len__(self) -> int:
        return len(self.keys)

    def __contains__(self, key) -> bool:
        return key in self.index

    def resolve(self, key: str) -> str | None:
        """Return ``key`` or its ``c:``-prefixed form, whichever is stored."""
        if key in self.index:
            return key
        if CONCEPT_PREFIX + key in self.index:
            return CONCEPT_PREFIX + key
        return None

    def vector(self, key: str) -> np.ndarray:
        resolved = self.resolve(key)
        if resolved is None:
            raise KeyError(key)
        return self.input[self.index[resolved]]

    def concept_rows(self, concept_ids) -> tuple[list[int], list[int]]:
        """Row numbers of the stored concepts and positions of the missing ones."""
        index = self.index
        rows, missing = [], []
        for pos, cid in enumerate(concept_ids):
            r = index.get(CONCEPT_PREFIX + cid)
            if r is None:
                missing.append(pos)
            else:
                rows.append(r)
        return rows, missing

    def rows(self, rows) -> np.ndarray:
        return self.input[rows]


def save_vectors(keys, matrix: np.ndarray, path, fmt: str = BINARY) -> None:
    matrix = np.asarray(matrix)
    if matrix.ndim != 2 or matrix.shape[0] != len(keys):
        raise ValueError("matrix rows must match keys")
    n, dim = matrix.shape
    if fmt == TEXT:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{n} {dim}\n")
            for key, row in zip(keys, matrix):
                fh.write(key + " " + " ".join(f"{x:.6g}" for x in row) + "\n")
    elif fmt == BINARY:
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<QQ", n, dim))
            for key in keys:
                raw = key.encode("utf-8")
                fh.write(struct.pack("<I", len(raw)))
                fh.write(raw)
            fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())
    else:
        raise ValueError(f"unknown embedding format {fmt!r}")


def save_embeddings(store: EmbeddingStore, path, fmt: str = BINARY) -> None:
    save_vectors(store.keys, store.input, path, fmt)


def _load_binary(path) -> tuple[list[str], np.ndarray]:
    data = Path(path).read_bytes()
    try:
        n, dim = struct.unpack_from("<QQ", data, len(MAGIC))
        pos = len(MAGIC) + 16
        keys = []
        for _ in range(n):
            (length,) = struct.unpack_from("<I", data, pos)
            pos += 4
            keys.append(data[pos:pos + length].decode("utf-8"))
            pos += length
    except (struct.error, UnicodeDecodeError) as exc:
        raise FormatError(f"truncated or corrupt key table: {exc}", source=path) from None
    expected = n * dim * 4
    if len(data) - pos != expected:
        raise FormatError(f"header says {n}x{dim} floats but payload has "
                          f"{len(data) - pos} bytes", source=path)
    matrix = np.frombuffer(data, dtype="<f4", count=n * dim, offset=pos)
    return keys, matrix.reshape(n, dim).astype(np.float32)


def _load_text(path) -> tuple[list[str], np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or not all(h.isdigit() for h in header):
            raise FormatError("expected 'V dim' header", 1, path)
        n, dim = map(int, header)
        keys, rows = [], []
        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            if len(parts) != dim + 1:
                raise FormatError(f"row has {len(parts) - 1} values, header says {dim}",
                                  lineno, path)
            keys.append(parts[0])
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise FormatError("non-numeric value", lineno, path) from None
    if len(keys) != n:
        raise FormatError(f"header says {n} rows, found {len(keys)}", source=path)
    return keys, np.array(rows, dtype=np.float32).reshape(n, dim)


def load_vectors(path) -> tuple[list[str], np.ndarray]:
    with open(path, "rb") as fh:
        head = fh.read(len(MAGIC))
    if head == MAGIC:
        return _load_binary(path)
    return _load_text(path)


def load_embeddings(path) -> EmbeddingStore:
    """Read either format; the returned store has no output matrix."""
    keys, matrix = load_vectors(path)
    return EmbeddingStore(keys, matrix)
