"""Approximate nearest-neighbor search over an embedding store.

A partition (inverted-file) index: rows are clustered by spherical k-means
and a query probes only the n_probe nearest clusters. With n_probe >=
n_lists the search is exhaustive and matches exact_topk entry for entry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .retrieval import exact_topk, rank_order
from .store import EmbeddingStore


class IndexNotBuilt(RuntimeError):
    pass


@dataclass
class IndexParams:
    n_lists: int | None = None   # default: ceil(sqrt(N))
    n_probe: int = 28
    kmeans_iters: int = 10
    seed: int = 0


def _spherical_kmeans(vectors: np.ndarray, k: int, iters: int, seed: int):
    rng = np.random.default_rng(seed)
    n = vectors.shape[0]
    centroids = vectors[rng.choice(n, size=k, replace=False)].copy()
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(iters):
        sims = vectors @ centroids.T
        assign = sims.argmax(axis=1)
        for c in range(k):
            members = vectors[assign == c]
            if len(members) == 0:
                # reseed an empty cluster on the worst-served point
                worst = sims.max(axis=1).argmin()
                centroids[c] = vectors[worst]
                continue
            mean = members.mean(axis=0)
            norm = np.linalg.norm(mean)
            centroids[c] = mean / norm if norm > 0 else members[0]
    sims = vectors @ centroids.T
    assign = sims.argmax(axis=1)
    return centroids, assign


class AnnIndex:
    """Partition index with a fixed search interface."""

    def __init__(self, params: IndexParams | None = None):
        self.params = params or IndexParams()
        self._store: EmbeddingStore | None = None

    def build(self, store: EmbeddingStore) -> "AnnIndex":
        if store.n == 0:
            raise ValueError("cannot index an empty store")
        k = self.params.n_lists or max(1, math.ceil(math.sqrt(store.n)))
        k = min(k, store.n)
        vectors = store.vectors.astype(np.float64)
        self._centroids, assign = _spherical_kmeans(
            vectors, k, self.params.kmeans_iters, self.params.seed)
        self._lists = [np.nonzero(assign == c)[0] for c in range(k)]
        self._store = store
        self._vectors = vectors
        self.n_lists = k
        return self

    @property
    def exhaustive(self) -> bool:
        if self._store is None:
            raise IndexNotBuilt("call build() first")
        return self.params.n_probe >= self.n_lists

    def search(self, query: np.ndarray, k: int):
        """Top-k candidates ranked by exact similarity within probed lists."""
        if self._store is None:
            raise IndexNotBuilt("call build() first")
        store = self._store
        query = np.asarray(query, dtype=np.float64).ravel()
        if self.exhaustive:
            return exact_topk(query, store, min(k, store.n))
        probe = min(self.params.n_probe, self.n_lists)
        centroid_sims = self._centroids @ query
        probed = np.argsort(-centroid_sims)[:probe]
        candidates = np.concatenate([self._lists[c] for c in probed])
        if candidates.size == 0:
            return []
        sims = self._vectors[candidates] @ query
        ids = [store.ids[i] for i in candidates]
        order = rank_order(ids, sims)[:k]
        return [(ids[i], float(sims[i])) for i in order]


def measure_recall(index: AnnIndex, store: EmbeddingStore,
                   queries: np.ndarray, k: int) -> float:
    """Fraction of exact top-k ids recovered by the index, averaged over
    queries; this is the per-run measured recall the index reports."""
    total = 0.0
    for q in queries:
        exact_ids = {i for i, _ in exact_topk(q, store, k)}
        ann_ids = {i for i, _ in index.search(q, k)}
        total += len(exact_ids & ann_ids) / k
    return total / len(queries)
