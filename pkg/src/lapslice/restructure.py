"""Embedding-distance candidate pairs and the greedy homophily-maximizing
edge-addition loop.

Candidate pairs are all unordered node pairs ranked by embedding distance
(ascending, ties broken by node ids). Starting from an empty edge set and a
neutral score of 0.5, batches of the closest remaining pairs are added while
the homophily score (computed on a configurable labeled subset) does not
drop; the batch that causes the first strict drop is removed by default.
"""

from __future__ import annotations

import dataclasses
import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError
from .graph import Graph, graph_with_edges
from .io import save_edge_list

log = logging.getLogger(__name__)

__all__ = [
    "DistanceIndex",
    "RestructureResult",
    "pairwise_distances",
    "topk_edges",
    "greedy_restructure",
    "export_restructured",
    "restructured_graph",
]

_METRICS = ("density", "edge", "node", "norm")


@dataclass(frozen=True)
class DistanceIndex:
    """Unordered candidate pairs sorted by ascending embedding distance.

    Ties are broken by (i, j) ascending. When truncated, only the
    `retained` smallest pairs of the full N(N-1)/2 are kept.
    """

    ii: np.ndarray
    jj: np.ndarray
    distances: np.ndarray
    num_nodes: int
    truncated: bool

    @property
    def retained(self) -> int:
        return int(self.distances.shape[0])

    def pair(self, rank: int) -> tuple[int, int, float]:
        return int(self.ii[rank]), int(self.jj[rank]), float(self.distances[rank])


def pairwise_distances(
    h: np.ndarray, truncate_to: int | None = None, chunk_rows: int = 256
) -> DistanceIndex:
    """Euclidean distances between all rows of h, self-pairs excluded.

    Works chunkwise over rows so at most O(chunk_rows * N) candidate values
    are materialized at once; with `truncate_to` only that many smallest
    pairs are retained.
    """
    h = np.asarray(h, dtype=np.float64)
    n = h.shape[0]
    if n < 2:
        raise DataError("need at least 2 rows")
    if truncate_to is not None and truncate_to < 1:
        raise ConfigError("truncate_to must be >= 1")
    total_pairs = n * (n - 1) // 2
    limit = total_pairs if truncate_to is None else min(truncate_to, total_pairs)
    sq_norms = np.sum(h * h, axis=1)

    best_d = np.empty(0)
    best_i = np.empty(0, dtype=np.int64)
    best_j = np.empty(0, dtype=np.int64)
    for start in range(0, n - 1, chunk_rows):
        stop = min(start + chunk_rows, n - 1)
        rows = np.arange(start, stop)
        # squared distances of rows [start, stop) against all later columns
        cross = h[rows] @ h.T
        d2 = sq_norms[rows][:, None] - 2.0 * cross + sq_norms[None, :]
        cols = np.arange(n)
        mask = cols[None, :] > rows[:, None]
        ci, cj = np.nonzero(mask)
        cand_d = np.maximum(d2[ci, cj], 0.0)
        cand_i = rows[ci]
        cand_j = cols[cj]
        pool_d = np.concatenate([best_d, cand_d])
        pool_i = np.concatenate([best_i, cand_i])
        pool_j = np.concatenate([best_j, cand_j])
        if pool_d.shape[0] > limit:
            # partial select, then exact ordering is restored at the end
            keep = np.argpartition(pool_d, limit - 1)[:limit]
            # argpartition splits ties arbitrarily; re-include equal-valued
            # candidates at the boundary so the final lexicographic tie-break
            # is applied to the true candidate set
            cut = pool_d[keep].max()
            keep = np.flatnonzero(pool_d <= cut)
        else:
            keep = np.arange(pool_d.shape[0])
        best_d, best_i, best_j = pool_d[keep], pool_i[keep], pool_j[keep]
    order = np.lexsort((best_j, best_i, best_d))[:limit]
    return DistanceIndex(
        ii=best_i[order],
        jj=best_j[order],
        distances=np.sqrt(best_d[order]),
        num_nodes=n,
        truncated=limit < total_pairs,
    )


def topk_edges(idx: DistanceIndex, k: int) -> np.ndarray:
    """The k closest pairs as an edge array."""
    if k < 0:
        raise ConfigError("k must be >= 0")
    if k > idx.retained:
        raise DataError(
            f"k={k} exceeds the {idx.retained} retained pairs"
            + (" (index is truncated)" if idx.truncated else "")
        )
    return np.column_stack([idx.ii[:k], idx.jj[:k]])


@dataclass(frozen=True)
class RestructureResult:
    """Outcome of the greedy loop.

    edges           : symmetric edge set kept at the stop point
    trace_edge_counts / trace_scores : score trajectory, one entry per
                      evaluated batch (including a final rejected batch)
    stop_step       : number of kept batches
    metric          : scoring metric name
    step_size       : batch size n
    exhausted       : True when candidates ran out before any score drop
    """

    edges: np.ndarray
    trace_edge_counts: tuple[int, ...]
    trace_scores: tuple[float, ...]
    stop_step: int
    metric: str
    step_size: int
    exhausted: bool

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    def trace_dict(self) -> dict:
        return {
            "edge_counts": list(self.trace_edge_counts),
            "scores": list(self.trace_scores),
            "stop_step": self.stop_step,
            "metric": self.metric,
            "step_size": self.step_size,
            "exhausted": self.exhausted,
        }


class _ScoreCounters:
    """Incremental homophily scoring over a fixed labeled subset.

    Maintains per-class intra/inter pair counts and per-node neighbor
    counts, so each added batch costs O(batch + K^2) instead of a rescan.
    Scores match the homophily module exactly (verified in tests).
    """

    def __init__(self, labels: np.ndarray, subset: np.ndarray | None, metric: str):
        y = np.asarray(labels, dtype=np.int64)
        keep = y >= 0
        if subset is not None:
            keep &= np.asarray(subset, dtype=bool)
        self.scorable = keep
        self.labels = y
        self.classes = np.unique(y[keep])
        if self.classes.size == 0:
            raise DataError("no labeled nodes in the scoring subset")
        if self.classes.size < 2 and metric in ("density", "norm"):
            raise DataError(f"{metric} scoring needs >= 2 classes in the subset")
        self.compact = np.full(int(self.classes.max()) + 1, -1, dtype=np.int64)
        self.compact[self.classes] = np.arange(self.classes.size)
        sizes = np.array([np.sum(y[keep] == c) for c in self.classes], dtype=np.float64)
        self.sizes = sizes
        self.n_sub = int(keep.sum())
        k = self.classes.size
        self.intra = np.zeros(k, dtype=np.int64)
        self.inter = np.zeros((k, k), dtype=np.int64)
        self.metric = metric
        # per-node neighbor slots (proper edges only)
        self.node_total = np.zeros(y.shape[0], dtype=np.int64)
        self.node_same = np.zeros(y.shape[0], dtype=np.int64)
        self.edges_same = 0
        self.edges_total = 0

    def add_pairs(self, uu: np.ndarray, vv: np.ndarray) -> None:
        keep = self.scorable[uu] & self.scorable[vv]
        uu, vv = uu[keep], vv[keep]
        if uu.size == 0:
            return
        ia = self.compact[self.labels[uu]]
        ib = self.compact[self.labels[vv]]
        same = ia == ib
        loops = uu == vv
        k = self.classes.size
        self.intra += np.bincount(ia[same], minlength=k)
        cross = ~same
        if cross.any():
            flat = np.concatenate([ia[cross] * k + ib[cross], ib[cross] * k + ia[cross]])
            self.inter += np.bincount(flat, minlength=k * k).reshape(k, k)
        proper = ~loops
        if proper.any():
            self.edges_total += int(proper.sum())
            self.edges_same += int((same & proper).sum())
            np.add.at(self.node_total, uu[proper], 1)
            np.add.at(self.node_total, vv[proper], 1)
            eq = (same & proper).astype(np.int64)[proper]
            np.add.at(self.node_same, uu[proper], eq)
            np.add.at(self.node_same, vv[proper], eq)

    def score(self) -> float:
        if self.metric == "density":
            d_intra = 2.0 * self.intra / (self.sizes * (self.sizes + 1.0))
            d_inter = self.inter / np.outer(self.sizes, self.sizes)
            off = d_inter + np.diag(np.full(self.classes.size, -np.inf))
            return float((1.0 + (d_intra - off.max(axis=1)).min()) / 2.0)
        if self.metric == "edge":
            return 0.0 if self.edges_total == 0 else self.edges_same / self.edges_total
        if self.metric == "node":
            qual = self.scorable & (self.node_total > 0)
            if not qual.any():
                return 0.0
            return float(np.mean(self.node_same[qual] / self.node_total[qual]))
        # norm
        acc = 0.0
        for i, c in enumerate(self.classes):
            members = self.scorable & (self.labels == c)
            denom = self.node_total[members].sum()
            h_k = self.node_same[members].sum() / denom if denom > 0 else 0.0
            acc += max(0.0, h_k - self.sizes[i] / self.n_sub)
        return acc / (self.classes.size - 1)


def greedy_restructure(
    idx: DistanceIndex,
    labels,
    subset=None,
    metric: str = "density",
    n: int = 1,
    keep_dropping_batch: bool = False,
) -> RestructureResult:
    """Add candidate pairs in ascending-distance batches of n while the
    homophily score stays at or above its previous value.

    The score starts at the neutral 0.5, so a first batch scoring below 0.5
    stops immediately with an empty result (a warning is logged). By default
    the batch that caused the first strict drop is removed; set
    `keep_dropping_batch` to retain it.
    """
    if metric not in _METRICS:
        raise ConfigError(f"metric must be one of {_METRICS}")
    if n < 1:
        raise ConfigError("step size n must be >= 1")
    counters = _ScoreCounters(np.asarray(labels), subset, metric)
    scores: list[float] = []
    edge_counts: list[int] = []
    previous = 0.5
    taken = 0
    stop_step = 0
    dropped = False
    last_batch_size = 0
    while taken < idx.retained:
        stop = min(taken + n, idx.retained)
        uu, vv = idx.ii[taken:stop], idx.jj[taken:stop]
        counters.add_pairs(uu, vv)
        last_batch_size = stop - taken
        taken = stop
        current = counters.score()
        edge_counts.append(taken)
        scores.append(current)
        if current < previous:
            dropped = True
            break
        previous = current
        stop_step += 1
    exhausted = not dropped
    if exhausted:
        log.warning(
            "candidate pairs exhausted after %d pairs without a score drop", taken
        )
    if dropped and not keep_dropping_batch:
        kept_pairs = taken - last_batch_size
    else:
        kept_pairs = taken
        if dropped:
            stop_step += 1
    if kept_pairs == 0:
        log.warning("first batch scored below the neutral 0.5; result is empty")
    edges = np.column_stack([idx.ii[:kept_pairs], idx.jj[:kept_pairs]])
    return RestructureResult(
        edges=edges,
        trace_edge_counts=tuple(edge_counts),
        trace_scores=tuple(scores),
        stop_step=stop_step,
        metric=metric,
        step_size=n,
        exhausted=exhausted,
    )


def export_restructured(g: Graph, result: RestructureResult, path, config_echo=None):
    """Write the restructured edge list plus a JSON trace sidecar at
    `<path>.json`. Returns (edge_path, sidecar_path)."""
    save_edge_list(path, g.num_nodes, result.edges)
    sidecar = str(path) + ".json"
    doc = {
        "num_nodes": g.num_nodes,
        "num_edges": result.num_edges,
        "trace": result.trace_dict(),
        "config": config_echo or {},
    }
    with open(sidecar, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return str(path), sidecar


def restructured_graph(g: Graph, result: RestructureResult) -> Graph:
    """The restructured edge set as a new Graph carrying g's metadata."""
    return graph_with_edges(g, result.edges)
