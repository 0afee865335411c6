"""Weighted k-NN classification and neighborhood-consistency analysis."""

import numpy as np

from ._backend import kernels
from .errors import ParameterError
from .memory_bank import MemoryBank
from .neighborhood import compute_instance_entropies, discover_neighbors, round_ratio, select_curriculum


def _check_labeled(embeddings, labels):
    embeddings = np.asarray(embeddings, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if embeddings.ndim != 2 or embeddings.shape[0] == 0:
        raise ParameterError("need a non-empty (N, D) embedding matrix")
    if labels.shape != (embeddings.shape[0],):
        raise ParameterError(
            f"labels shape {labels.shape} does not cover {embeddings.shape[0]} embeddings"
        )
    return embeddings, labels


def weighted_knn_predict_batch(embeddings, labels, queries, k: int, tau: float) -> np.ndarray:
    """Predict a class per query row by exponentially weighted neighbor votes.

    The top-k most similar stored embeddings (ties toward the lower index)
    vote for their class with weight exp(similarity / tau); the class with
    the highest total wins, ties toward the lower class index. k is clamped
    to the store size.
    """
    embeddings, labels = _check_labeled(embeddings, labels)
    queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    if queries.shape[1] != embeddings.shape[1]:
        raise ParameterError(
            f"query dim {queries.shape[1]} mismatches embeddings dim {embeddings.shape[1]}"
        )
    if k < 1:
        raise ParameterError(f"k must be >= 1, got {k}")
    if tau <= 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    k = min(k, embeddings.shape[0])
    n_classes = int(labels.max()) + 1
    sims = queries @ embeddings.T
    top = kernels.topk_desc_rows(sims, k)
    predictions = np.empty(queries.shape[0], dtype=np.int64)
    for i in range(queries.shape[0]):
        weights = np.exp(sims[i, top[i]] / tau)
        scores = np.zeros(n_classes)
        np.add.at(scores, labels[top[i]], weights)
        predictions[i] = int(np.argmax(scores))
    return predictions


def weighted_knn_predict(embeddings, labels, query, k: int, tau: float) -> int:
    """Single-query form of :func:`weighted_knn_predict_batch`."""
    return int(weighted_knn_predict_batch(embeddings, labels, np.asarray(query)[None], k, tau)[0])


def top1_accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ParameterError(f"length mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ParameterError("cannot score an empty prediction set")
    return float((predictions == labels).mean())


def neighborhood_consistency(neighbors, selected, labels) -> float:
    """Fraction of selected instances whose every neighbor shares their label.

    An empty selection is vacuously consistent (1.0). Uses cheat labels;
    this is a post-hoc diagnostic, never a training signal.
    """
    neighbors = np.asarray(neighbors, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    selected = np.asarray(selected, dtype=np.int64)
    if neighbors.ndim != 2 or labels.shape[0] != neighbors.shape[0]:
        raise ParameterError("labels must cover every instance in the neighbor table")
    if selected.size == 0:
        return 1.0
    own = labels[selected][:, None]
    return float(np.all(labels[neighbors[selected]] == own, axis=1).mean())


def consistency_curve(bank: MemoryBank, labels, k: int, tau: float, rounds: int):
    """(round, selection ratio, consistency) rows over the linear curriculum.

    Computed post hoc from one bank snapshot: neighbor lists and entropies
    are fixed, only the selection ratio varies with the round index.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape[0] != bank.count:
        raise ParameterError(f"labels cover {labels.shape[0]} of {bank.count} instances")
    neighbors = discover_neighbors(bank, k)
    entropies = compute_instance_entropies(bank, tau)
    rows = []
    for round_index in range(1, rounds + 1):
        ratio = round_ratio(round_index, rounds)
        selected, _ = select_curriculum(entropies, ratio)
        rows.append((round_index, ratio, neighborhood_consistency(neighbors, selected, labels)))
    return rows
