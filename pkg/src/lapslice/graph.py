"""Immutable graph container, normalized Laplacian, and synthetic generators.

Graphs are undirected, unweighted, with optional self-loops. Each undirected
edge is stored exactly once as a pair (u, v) with u <= v, sorted
lexicographically, so two graphs with the same edge set compare equal and all
downstream computations are deterministic.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import DataError

__all__ = [
    "Graph",
    "SparseSymmetricMatrix",
    "IngestStats",
    "canonical_edges",
    "normalized_laplacian",
    "generate_er",
    "generate_sbm",
    "generate_grid",
    "generate_class_features",
    "graph_with_edges",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


def canonical_edges(edges) -> np.ndarray:
    """Deduplicate and canonicalize an edge array: u <= v, lexsorted, unique."""
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    if e.size == 0:
        return np.empty((0, 2), dtype=np.int64)
    lo = np.minimum(e[:, 0], e[:, 1])
    hi = np.maximum(e[:, 0], e[:, 1])
    return np.unique(np.column_stack([lo, hi]), axis=0)


@dataclass(frozen=True)
class IngestStats:
    """Bookkeeping from file ingestion (both edge-count conventions)."""

    raw_edge_lines: int
    dedup_edges: int
    self_loops: int
    remapped_ids: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class Graph:
    """Undirected graph with optional features, labels and split masks.

    Parameters
    ----------
    num_nodes : int
        Node count N; node ids are dense integers in [0, N).
    edges : (E, 2) int array
        Each undirected pair once, u <= v. Self-loops permitted.
    features : (N, F) float array, optional
    labels : (N,) int array, optional
        Class ids in [0, K); -1 marks an unlabeled node.
    train_mask, val_mask, test_mask : (N,) bool arrays, optional
        Pairwise disjoint when present.
    """

    num_nodes: int
    edges: np.ndarray
    features: np.ndarray | None = None
    labels: np.ndarray | None = None
    train_mask: np.ndarray | None = None
    val_mask: np.ndarray | None = None
    test_mask: np.ndarray | None = None
    ingest: IngestStats | None = dataclasses.field(default=None, compare=False)

    def __post_init__(self):
        n = int(self.num_nodes)
        if n < 0:
            raise DataError("num_nodes must be >= 0")
        e = canonical_edges(self.edges)
        if e.size and (e.min() < 0 or e.max() >= n):
            raise DataError(
                f"edge endpoint out of range [0, {n}): found {e.min()}..{e.max()}"
            )
        object.__setattr__(self, "edges", _frozen(e))
        if self.features is not None:
            x = np.asarray(self.features, dtype=np.float64)
            if x.ndim != 2 or x.shape[0] != n:
                raise DataError(f"features must be (N, F) with N={n}, got {x.shape}")
            object.__setattr__(self, "features", _frozen(x))
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=np.int64)
            if y.shape != (n,):
                raise DataError(f"labels must have shape ({n},), got {y.shape}")
            if y.size and y.min() < -1:
                raise DataError("labels must be >= -1 (-1 = unlabeled)")
            object.__setattr__(self, "labels", _frozen(y))
        masks = []
        for name in ("train_mask", "val_mask", "test_mask"):
            m = getattr(self, name)
            if m is None:
                continue
            m = np.asarray(m, dtype=bool)
            if m.shape != (n,):
                raise DataError(f"{name} must have shape ({n},), got {m.shape}")
            object.__setattr__(self, name, _frozen(m))
            masks.append(m)
        for i in range(len(masks)):
            for j in range(i + 1, len(masks)):
                if np.any(masks[i] & masks[j]):
                    raise DataError("split masks must be pairwise disjoint")

    # -- derived quantities ------------------------------------------------

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def num_features(self) -> int:
        return 0 if self.features is None else int(self.features.shape[1])

    @property
    def num_classes(self) -> int:
        """1 + max label id over labeled nodes (0 when unlabeled)."""
        if self.labels is None:
            return 0
        labeled = self.labels[self.labels >= 0]
        return 0 if labeled.size == 0 else int(labeled.max()) + 1

    def labeled_mask(self) -> np.ndarray:
        if self.labels is None:
            return np.zeros(self.num_nodes, dtype=bool)
        return self.labels >= 0

    def adjacency(self) -> sp.csr_array:
        """Symmetric 0/1 CSR adjacency; a self-loop contributes A_ii = 1."""
        n = self.num_nodes
        e = self.edges
        if e.size == 0:
            return sp.csr_array((n, n), dtype=np.float64)
        u, v = e[:, 0], e[:, 1]
        off = u != v
        rows = np.concatenate([u, v[off]])
        cols = np.concatenate([v, u[off]])
        data = np.ones(rows.shape[0], dtype=np.float64)
        a = sp.csr_array((data, (rows, cols)), shape=(n, n))
        a.sum_duplicates()
        return a

    def degrees(self) -> np.ndarray:
        """Row sums of the adjacency (self-loop counts once)."""
        return np.asarray(self.adjacency().sum(axis=1)).reshape(-1)

    def masks_dict(self) -> dict[str, np.ndarray | None]:
        return {
            "train": self.train_mask,
            "val": self.val_mask,
            "test": self.test_mask,
        }


def graph_with_edges(g: Graph, edges) -> Graph:
    """New Graph with a replaced edge set, keeping features/labels/masks."""
    return Graph(
        num_nodes=g.num_nodes,
        edges=edges,
        features=g.features,
        labels=g.labels,
        train_mask=g.train_mask,
        val_mask=g.val_mask,
        test_mask=g.test_mask,
    )


class SparseSymmetricMatrix:
    """Symmetric N x N real matrix in compressed sparse form.

    Immutable after construction; `matvec`/`matmat` are read-only and safe to
    call concurrently.
    """

    __slots__ = ("_csr", "_n")

    def __init__(self, matrix, tol: float = 0.0):
        csr = sp.csr_array(matrix, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise DataError(f"matrix must be square, got {csr.shape}")
        asym = abs(csr - csr.T)
        max_asym = asym.max() if asym.nnz else 0.0
        if max_asym > tol:
            raise DataError(f"matrix is not symmetric (max |A - A^T| = {max_asym})")
        csr.sum_duplicates()
        self._csr = csr
        self._n = csr.shape[0]

    @property
    def dimension(self) -> int:
        return self._n

    @property
    def shape(self) -> tuple[int, int]:
        return (self._n, self._n)

    @property
    def nnz(self) -> int:
        return int(self._csr.nnz)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        return self._csr @ x

    def matmat(self, m: np.ndarray) -> np.ndarray:
        m = np.asarray(m, dtype=np.float64)
        return self._csr @ m

    def __matmul__(self, other):
        return self._csr @ np.asarray(other, dtype=np.float64)

    def to_dense(self) -> np.ndarray:
        return self._csr.toarray()

    def to_csr(self) -> sp.csr_array:
        return self._csr.copy()

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        coo = self._csr.tocoo()
        return coo.row.copy(), coo.col.copy(), coo.data.copy()


def normalized_laplacian(g: Graph) -> SparseSymmetricMatrix:
    """L = I - D^{-1/2} A D^{-1/2}; isolated nodes get an identity row.

    The spectrum is contained in [0, 2]. For a degree-0 node the
    D^{-1/2} entry is taken as 0, which leaves the bare identity entry on
    that row.
    """
    n = g.num_nodes
    a = g.adjacency()
    deg = np.asarray(a.sum(axis=1)).reshape(-1)
    with np.errstate(divide="ignore"):
        dinv = np.where(deg > 0, 1.0 / np.sqrt(np.maximum(deg, 1e-300)), 0.0)
    d = sp.dia_array((dinv[None, :], [0]), shape=(n, n))
    lap = sp.eye_array(n, format="csr") - (d @ a @ d)
    return SparseSymmetricMatrix(lap, tol=1e-12)


# -- synthetic generators --------------------------------------------------


def _labels_from_scheme(n: int, scheme) -> np.ndarray | None:
    """None -> unlabeled; int K -> balanced round-robin; array -> as given."""
    if scheme is None:
        return None
    if np.isscalar(scheme):
        k = int(scheme)
        if k < 1:
            raise DataError("label class count must be >= 1")
        return np.arange(n, dtype=np.int64) % k
    y = np.asarray(scheme, dtype=np.int64)
    if y.shape != (n,):
        raise DataError(f"label array must have shape ({n},)")
    return y


def generate_er(
    n: int,
    p: float,
    labels=None,
    seed: int = 0,
    self_loops: bool = True,
) -> Graph:
    """Erdos-Renyi graph: each unordered pair included independently with
    probability p. Self-loop pairs are sampled too unless disabled.
    """
    if n < 1:
        raise DataError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise DataError("p must be in [0, 1]")
    rng = np.random.default_rng(seed)
    iu = np.triu_indices(n, k=0 if self_loops else 1)
    keep = rng.random(iu[0].shape[0]) < p
    edges = np.column_stack([iu[0][keep], iu[1][keep]])
    return Graph(num_nodes=n, edges=edges, labels=_labels_from_scheme(n, labels))


def generate_sbm(
    class_sizes,
    p_intra: float,
    p_inter: float,
    seed: int = 0,
    self_loops: bool = True,
) -> Graph:
    """Stochastic block model; labels are block membership.

    Intra-class pairs (including self-pairs unless disabled) appear with
    probability p_intra, inter-class pairs with p_inter.
    """
    sizes = [int(s) for s in class_sizes]
    if any(s < 1 for s in sizes):
        raise DataError("class sizes must be >= 1")
    for name, p in (("p_intra", p_intra), ("p_inter", p_inter)):
        if not 0.0 <= p <= 1.0:
            raise DataError(f"{name} must be in [0, 1]")
    n = sum(sizes)
    starts = np.cumsum([0] + sizes)
    labels = np.concatenate(
        [np.full(s, k, dtype=np.int64) for k, s in enumerate(sizes)]
    )
    rng = np.random.default_rng(seed)
    blocks = []
    for k in range(len(sizes)):
        lo_k = starts[k]
        iu = np.triu_indices(sizes[k], k=0 if self_loops else 1)
        keep = rng.random(iu[0].shape[0]) < p_intra
        if keep.any():
            blocks.append(np.column_stack([iu[0][keep] + lo_k, iu[1][keep] + lo_k]))
        for j in range(k + 1, len(sizes)):
            lo_j = starts[j]
            keep = rng.random(sizes[k] * sizes[j]) < p_inter
            if keep.any():
                uu, vv = np.divmod(np.flatnonzero(keep), sizes[j])
                blocks.append(np.column_stack([uu + lo_k, vv + lo_j]))
    edges = np.concatenate(blocks) if blocks else np.empty((0, 2), dtype=np.int64)
    return Graph(num_nodes=n, edges=edges, labels=labels)


def generate_grid(width: int, height: int) -> Graph:
    """4-neighbor lattice; node id = row * width + col."""
    if width < 1 or height < 1:
        raise DataError("width and height must be >= 1")
    ids = np.arange(width * height, dtype=np.int64).reshape(height, width)
    right = np.column_stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()])
    down = np.column_stack([ids[:-1, :].ravel(), ids[1:, :].ravel()])
    return Graph(num_nodes=width * height, edges=np.concatenate([right, down]))


def generate_class_features(
    labels: np.ndarray,
    dim: int,
    shift: float = 1.0,
    seed: int = 0,
) -> np.ndarray:
    """Gaussian features with a class-dependent mean shift (test fixture).

    Class k gets mean shift * e_{k mod dim} added to unit Gaussian noise.
    """
    y = np.asarray(labels, dtype=np.int64)
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0, 1.0, size=(y.shape[0], dim))
    for k in np.unique(y[y >= 0]):
        x[y == k, int(k) % dim] += shift
    return x
