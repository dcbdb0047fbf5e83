"""Homophily metrics over labeled (sub)graphs.

Four scores are provided:

  edge_homophily    : fraction of edges joining same-label endpoints
  node_homophily    : mean over nodes of the same-label neighbor fraction
  norm_homophily    : class-wise homophily in excess of class prevalence,
                      clipped at zero and averaged over K - 1
  density_homophily : scaled minimum over classes of (intra-class edge
                      density minus the largest inter-class edge density);
                      0.5 is neutral, 1 fully homophilic, 0 fully
                      heterophilic

All metrics restrict to the induced subgraph of labeled nodes inside an
optional subset mask. Self-loops are legal edges: they count toward the
intra-class densities (whose denominator |Y_k|(|Y_k| + 1)/2 counts self
pairs) and nowhere else.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .errors import DataError, MetricUndefinedError
from .graph import Graph

__all__ = [
    "HomophilyReport",
    "edge_homophily",
    "node_homophily",
    "norm_homophily",
    "intra_density",
    "inter_density",
    "density_homophily",
]


@dataclass(frozen=True)
class HomophilyReport:
    """All four scores plus the per-class density decomposition.

    h_edge / h_node / h_norm are None when undefined on the subset (no
    qualifying edges, nodes, or fewer than two classes).
    """

    h_edge: float | None
    h_node: float | None
    h_norm: float | None
    h_den: float
    h_hat_den: float
    intra_densities: dict[int, float]
    inter_densities: dict[int, dict[int, float]]
    class_sizes: dict[int, int]
    subset_nodes: int
    excluded_isolated_nodes: int

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["intra_densities"] = {str(k): v for k, v in self.intra_densities.items()}
        d["inter_densities"] = {
            str(k): {str(j): v for j, v in row.items()}
            for k, row in self.inter_densities.items()
        }
        d["class_sizes"] = {str(k): v for k, v in self.class_sizes.items()}
        return d

    def to_json(self, **kwargs) -> str:
        kwargs.setdefault("sort_keys", True)
        return json.dumps(self.to_dict(), **kwargs)


class _LabeledView:
    """Induced subgraph of labeled nodes within a subset mask, split into
    self-loop and proper edges, with per-class bookkeeping."""

    def __init__(self, g: Graph, subset):
        if g.labels is None:
            raise DataError("graph has no labels")
        keep = g.labeled_mask()
        if subset is not None:
            subset = np.asarray(subset, dtype=bool)
            if subset.shape != (g.num_nodes,):
                raise DataError("subset mask must have shape (N,)")
            keep = keep & subset
        self.node_mask = keep
        self.labels = g.labels
        self.classes = np.unique(g.labels[keep]) if keep.any() else np.array([], int)
        self.class_sizes = {
            int(k): int(np.sum(g.labels[keep] == k)) for k in self.classes
        }
        e = g.edges
        if e.size:
            both = keep[e[:, 0]] & keep[e[:, 1]]
            e = e[both]
        self.self_loops = e[e[:, 0] == e[:, 1]] if e.size else e
        self.proper_edges = e[e[:, 0] != e[:, 1]] if e.size else e

    @property
    def num_nodes(self) -> int:
        return int(self.node_mask.sum())


def edge_homophily(g: Graph, subset=None) -> float:
    """Fraction of (non-self-loop) edges whose endpoints share a label,
    among edges with both endpoints labeled and in the subset."""
    view = _LabeledView(g, subset)
    e = view.proper_edges
    if e.shape[0] == 0:
        raise MetricUndefinedError("edge homophily undefined: no qualifying edges")
    same = view.labels[e[:, 0]] == view.labels[e[:, 1]]
    return float(np.mean(same))


def _neighbor_counts(view: _LabeledView):
    """Per labeled node: total labeled neighbors and same-label neighbors."""
    n = view.labels.shape[0]
    total = np.zeros(n, dtype=np.int64)
    same = np.zeros(n, dtype=np.int64)
    e = view.proper_edges
    if e.shape[0]:
        u, v = e[:, 0], e[:, 1]
        np.add.at(total, u, 1)
        np.add.at(total, v, 1)
        eq = (view.labels[u] == view.labels[v]).astype(np.int64)
        np.add.at(same, u, eq)
        np.add.at(same, v, eq)
    return total, same


def node_homophily(g: Graph, subset=None) -> float:
    """Mean over qualifying nodes of |same-label neighbors| / |neighbors|.

    Nodes with no labeled neighbor in the subset are excluded from the
    average (their ratio has an empty denominator).
    """
    view = _LabeledView(g, subset)
    total, same = _neighbor_counts(view)
    qual = view.node_mask & (total > 0)
    if not qual.any():
        raise MetricUndefinedError("node homophily undefined: no qualifying nodes")
    return float(np.mean(same[qual] / total[qual]))


def norm_homophily(g: Graph, subset=None) -> float:
    """Class-prevalence-adjusted homophily, averaged over K - 1 classes.

    For each class k, h_k is the same-label fraction of all neighbor slots
    of class-k nodes; the score averages [h_k - |Y_k|/N]_+ where N is the
    labeled-subset size.
    """
    view = _LabeledView(g, subset)
    k = view.classes.shape[0]
    if k < 2:
        raise MetricUndefinedError("norm homophily undefined: needs >= 2 classes")
    total, same = _neighbor_counts(view)
    n_sub = view.num_nodes
    acc = 0.0
    for c in view.classes:
        members = view.node_mask & (view.labels == c)
        denom = total[members].sum()
        h_k = same[members].sum() / denom if denom > 0 else 0.0
        acc += max(0.0, h_k - view.class_sizes[int(c)] / n_sub)
    return acc / (k - 1)


def _density_tables(view: _LabeledView):
    classes = view.classes
    k = len(classes)
    compact = np.full(int(classes.max()) + 1 if k else 1, -1, dtype=np.int64)
    compact[classes] = np.arange(k)
    intra = np.zeros(k, dtype=np.int64)
    inter = np.zeros((k, k), dtype=np.int64)
    for e in (view.proper_edges, view.self_loops):
        if e.shape[0] == 0:
            continue
        ia = compact[view.labels[e[:, 0]]]
        ib = compact[view.labels[e[:, 1]]]
        same = ia == ib
        intra += np.bincount(ia[same], minlength=k)
        cross = ~same
        if cross.any():
            flat = np.concatenate([ia[cross] * k + ib[cross], ib[cross] * k + ia[cross]])
            inter += np.bincount(flat, minlength=k * k).reshape(k, k)
    sizes = np.array([view.class_sizes[int(c)] for c in classes], dtype=np.float64)
    d_intra = 2.0 * intra / (sizes * (sizes + 1.0))
    d_inter = inter / np.outer(sizes, sizes)
    return classes, d_intra, d_inter


def intra_density(g: Graph, k: int, subset=None) -> float:
    """Intra-class edge density of class k: edges (self-loops included)
    over all unordered node pairs of the class including self pairs."""
    view = _LabeledView(g, subset)
    classes, d_intra, _ = _density_tables(view)
    where = np.flatnonzero(classes == k)
    if where.size == 0:
        raise DataError(f"class {k} absent from subset")
    return float(d_intra[where[0]])


def inter_density(g: Graph, k: int, j: int, subset=None) -> float:
    """Inter-class edge density between classes k != j: cross edges (each
    counted once) over |Y_k| * |Y_j|. Symmetric in (k, j)."""
    if k == j:
        raise DataError("inter_density requires two distinct classes")
    view = _LabeledView(g, subset)
    classes, _, d_inter = _density_tables(view)
    wk = np.flatnonzero(classes == k)
    wj = np.flatnonzero(classes == j)
    if wk.size == 0 or wj.size == 0:
        raise DataError(f"class {k if wk.size == 0 else j} absent from subset")
    return float(d_inter[wk[0], wj[0]])


def density_homophily(g: Graph, subset=None):
    """Density-aware homophily.

    Returns (h_den, h_hat_den, report) where
    h_hat_den = min_k (d_k - max_{j != k} d_kj) and h_den = (1 + h_hat_den)/2.
    """
    view = _LabeledView(g, subset)
    classes, d_intra, d_inter = _density_tables(view)
    k = len(classes)
    if k < 2:
        raise MetricUndefinedError("density homophily undefined: needs >= 2 classes")
    off = d_inter + np.diag(np.full(k, -np.inf))
    gaps = d_intra - off.max(axis=1)
    h_hat = float(gaps.min())
    h_den = (1.0 + h_hat) / 2.0

    try:
        h_edge = edge_homophily(g, subset)
    except MetricUndefinedError:
        h_edge = None
    try:
        h_node = node_homophily(g, subset)
    except MetricUndefinedError:
        h_node = None
    try:
        h_norm = norm_homophily(g, subset)
    except MetricUndefinedError:
        h_norm = None
    total, _ = _neighbor_counts(view)
    excluded = int(np.sum(view.node_mask & (total == 0)))
    report = HomophilyReport(
        h_edge=h_edge,
        h_node=h_node,
        h_norm=h_norm,
        h_den=h_den,
        h_hat_den=h_hat,
        intra_densities={int(c): float(d) for c, d in zip(classes, d_intra)},
        inter_densities={
            int(ci): {
                int(cj): float(d_inter[i, j])
                for j, cj in enumerate(classes)
                if j != i
            }
            for i, ci in enumerate(classes)
        },
        class_sizes=dict(view.class_sizes),
        subset_nodes=view.num_nodes,
        excluded_isolated_nodes=excluded,
    )
    return h_den, h_hat, report
