"""Exact top-k retrieval and cross-modal Recall@k.

Ordering is always descending similarity with ties broken by ascending id,
so every ranking here is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .store import EmbeddingStore

DEFAULT_K_VALUES = (1, 5, 10)


class DimensionMismatch(ValueError):
    pass


class MissingPair(KeyError):
    pass


@dataclass
class RetrievalRun:
    k_values: list[int]
    hits: list[int | None]          # per-query rank of ground truth (1-based)
    recall_at: dict[int, float]


def _similarities(query: np.ndarray, store: EmbeddingStore) -> np.ndarray:
    query = np.asarray(query, dtype=np.float64).ravel()
    if query.shape[0] != store.dim:
        raise DimensionMismatch(
            f"query dim {query.shape[0]} vs store dim {store.dim}"
        )
    return store.vectors.astype(np.float64) @ query


def rank_order(ids: list[str], sims: np.ndarray) -> np.ndarray:
    """Indices sorted by descending similarity, ascending id on ties."""
    # lexsort: last key is primary
    return np.lexsort((np.array(ids), -sims))


def exact_topk(query: np.ndarray, store: EmbeddingStore, k: int):
    """The k most similar entries, exactly."""
    if k < 1 or k > store.n:
        raise ValueError(f"k={k} out of range for store of {store.n}")
    sims = _similarities(query, store)
    order = rank_order(store.ids, sims)[:k]
    return [(store.ids[i], float(sims[i])) for i in order]


def rank_of(query: np.ndarray, store: EmbeddingStore, target_id: str) -> int:
    """1-based rank of target_id under the exact ordering."""
    sims = _similarities(query, store)
    t = store.index_of(target_id)
    ts = sims[t]
    better = np.count_nonzero(sims > ts)
    tied_ids = [store.ids[i] for i in np.nonzero(sims == ts)[0] if i != t]
    better += sum(1 for i in tied_ids if i < target_id)
    return better + 1


def _run_direction(queries: EmbeddingStore, targets: EmbeddingStore,
                   pairing: dict[str, str], k_values) -> RetrievalRun:
    hits: list[int | None] = []
    for qi, qid in enumerate(queries.ids):
        tid = pairing.get(qid)
        if tid is None:
            raise MissingPair(qid)
        try:
            targets.index_of(tid)
        except KeyError:
            raise MissingPair(tid) from None
        hits.append(rank_of(queries.vectors[qi], targets, tid))
    n = len(hits)
    recall = {k: (sum(1 for r in hits if r is not None and r <= k) / n if n else 0.0)
              for k in k_values}
    return RetrievalRun(list(k_values), hits, recall)


def recall_at_k(queries: EmbeddingStore, targets: EmbeddingStore,
                pairing: dict[str, str], k_values=DEFAULT_K_VALUES):
    """Recall@k in both directions.

    pairing maps query ids to target ids and must be a bijection; the
    reverse direction uses the inverted map.
    """
    if queries.dim != targets.dim:
        raise DimensionMismatch(f"{queries.dim} vs {targets.dim}")
    inverse = {v: k for k, v in pairing.items()}
    if len(inverse) != len(pairing):
        raise MissingPair("pairing is not a bijection")
    forward = _run_direction(queries, targets, pairing, k_values)
    backward = _run_direction(targets, queries, inverse, k_values)
    return {
        f"{queries.modality}_to_{targets.modality}": forward,
        f"{targets.modality}_to_{queries.modality}": backward,
    }
