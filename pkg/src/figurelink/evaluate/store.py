"""Embedding stores and the EMB1 binary file format.

EMB1 layout (little-endian throughout): magic b"EMB1", uint32 N, uint32 D,
uint8 modality (0 = image, 1 = text), then N ids as uint16 length-prefixed
UTF-8, then N*D float32 row-major values.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"EMB1"
MODALITY_IMAGE = "image"
MODALITY_TEXT = "text"
_MODALITY_CODES = {MODALITY_IMAGE: 0, MODALITY_TEXT: 1}
_MODALITY_NAMES = {v: k for k, v in _MODALITY_CODES.items()}

UNIT_NORM_TOL = 1e-6


class StoreFormatError(ValueError):
    pass


@dataclass
class EmbeddingStore:
    ids: list[str]
    vectors: np.ndarray
    modality: str

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2:
            raise ValueError("vectors must be an N x D matrix")
        if len(self.ids) != self.vectors.shape[0]:
            raise ValueError("ids and vectors disagree on N")
        if len(set(self.ids)) != len(self.ids):
            raise ValueError("ids must be unique")
        if self.modality not in _MODALITY_CODES:
            raise ValueError(f"unknown modality {self.modality!r}")
        norms = np.linalg.norm(self.vectors.astype(np.float64), axis=1)
        if self.vectors.shape[0] and np.abs(norms - 1.0).max() > UNIT_NORM_TOL:
            raise ValueError("store rows must be unit-normalized")

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def index_of(self, item_id: str) -> int:
        if not hasattr(self, "_id_index"):
            self._id_index = {v: i for i, v in enumerate(self.ids)}
        return self._id_index[item_id]

    @classmethod
    def from_raw(cls, ids, vectors, modality) -> "EmbeddingStore":
        """Build a store from unnormalized vectors."""
        vectors = np.asarray(vectors, dtype=np.float64)
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise ValueError("zero-norm row")
        return cls(list(ids), (vectors / norms).astype(np.float32), modality)


def write_store(path, store: EmbeddingStore) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", store.n, store.dim))
        fh.write(struct.pack("<B", _MODALITY_CODES[store.modality]))
        for item_id in store.ids:
            raw = item_id.encode("utf-8")
            if len(raw) > 0xFFFF:
                raise StoreFormatError("id longer than uint16 length prefix allows")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(store.vectors, dtype="<f4").tobytes())


def read_store(path) -> EmbeddingStore:
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise StoreFormatError("bad magic bytes")
    n, dim = struct.unpack_from("<II", data, 4)
    (modality_code,) = struct.unpack_from("<B", data, 12)
    if modality_code not in _MODALITY_NAMES:
        raise StoreFormatError(f"unknown modality code {modality_code}")
    pos = 13
    ids = []
    for _ in range(n):
        (length,) = struct.unpack_from("<H", data, pos)
        pos += 2
        ids.append(data[pos:pos + length].decode("utf-8"))
        pos += length
    expected = n * dim * 4
    raw = data[pos:pos + expected]
    if len(raw) != expected:
        raise StoreFormatError("truncated vector payload")
    vectors = np.frombuffer(raw, dtype="<f4").reshape(n, dim).copy()
    return EmbeddingStore(ids, vectors, _MODALITY_NAMES[modality_code])
