"""Exact dense spectral tools: eigendecomposition, ideal band-pass filtering,
and a plain spectral-clustering baseline.

Everything here is the slow-but-exact reference path used as ground truth in
tests and as a small-graph fallback. The scalable matvec-only path lives in
`slicers`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapExceededError, DataError
from .graph import Graph, SparseSymmetricMatrix, normalized_laplacian

__all__ = [
    "EigenSystem",
    "eigendecompose",
    "exact_filter",
    "exact_bandpass",
    "sc_features",
    "simplified_sc",
    "DENSE_CAP_DEFAULT",
]

DENSE_CAP_DEFAULT = 2000

# Eigenvalues this close to a band boundary are snapped onto it before the
# include/exclude rule is applied.
BOUNDARY_SNAP = 1e-10


@dataclass(frozen=True)
class EigenSystem:
    """Full eigendecomposition of a symmetric matrix.

    values : ascending eigenvalues, shape (N,)
    vectors: orthonormal eigenvector columns, shape (N, N)
    """

    values: np.ndarray
    vectors: np.ndarray

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


def eigendecompose(
    matrix: SparseSymmetricMatrix, cap: int = DENSE_CAP_DEFAULT
) -> EigenSystem:
    """Dense symmetric eigendecomposition, eigenvalues ascending.

    Refuses matrices larger than `cap` on a side; dense O(N^3) work is only
    intended for oracle-scale inputs.
    """
    n = matrix.dimension
    if n > cap:
        raise CapExceededError(f"dense eigendecomposition refused: N={n} > cap={cap}")
    vals, vecs = scipy.linalg.eigh(matrix.to_dense())
    return EigenSystem(values=vals, vectors=vecs)


def exact_filter(es: EigenSystem, gains: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Apply U diag(gains) U^T to the columns of m."""
    gains = np.asarray(gains, dtype=np.float64)
    if gains.shape != es.values.shape:
        raise DataError("gains must match the eigenvalue count")
    m = np.asarray(m, dtype=np.float64)
    squeeze = m.ndim == 1
    if squeeze:
        m = m[:, None]
    out = es.vectors @ (gains[:, None] * (es.vectors.T @ m))
    return out[:, 0] if squeeze else out


def _band_gains(values: np.ndarray, e1: float, e2: float) -> np.ndarray:
    lam = values.copy()
    lam[np.abs(lam - e1) <= BOUNDARY_SNAP] = e1
    lam[np.abs(lam - e2) <= BOUNDARY_SNAP] = e2
    passed = (lam > e1) & (lam <= e2)
    if e1 == 0.0:
        # A strict lower bound would always drop the zero eigenvalue; the
        # low-pass convention includes it so band partitions sum to identity.
        passed |= lam == 0.0
    return passed.astype(np.float64)


def exact_bandpass(
    es: EigenSystem, e1: float, e2: float, m: np.ndarray
) -> np.ndarray:
    """Ideal rectangular band-pass: keep eigencomponents with e1 < lam <= e2
    (lam = 0 included when e1 = 0), zero the rest."""
    if not 0.0 <= e1 <= e2 <= 2.0:
        raise DataError(f"band must satisfy 0 <= e1 <= e2 <= 2, got ({e1}, {e2})")
    return exact_filter(es, _band_gains(es.values, e1, e2), m)


def sc_features(es: EigenSystem, lambda_low: float) -> np.ndarray:
    """Low-pass-filtered one-hot node signals, one per row.

    Row i is diag(g) U^T delta_i with g the ideal low-pass at lambda_low,
    i.e. the matrix U diag(g) with rows indexed by nodes.
    """
    if not 0.0 <= lambda_low <= 2.0:
        raise DataError(f"lambda_low must be in [0, 2], got {lambda_low}")
    gains = _band_gains(es.values, 0.0, lambda_low)
    return es.vectors * gains[None, :]


def simplified_sc(
    g: Graph,
    leading_count: int,
    n_clusters: int,
    seed: int = 0,
    cap: int = DENSE_CAP_DEFAULT,
) -> np.ndarray:
    """Plain spectral clustering baseline.

    Eigendecompose the normalized Laplacian, represent node i by the i-th
    entries of the `leading_count` eigenvectors with smallest eigenvalues,
    and K-means those vectors (k-means++, 10 restarts, 100 iterations,
    fixed seed). Returns a cluster id per node.
    """
    n = g.num_nodes
    if not 1 < leading_count <= n:
        raise DataError(f"leading_count must be in (1, {n}], got {leading_count}")
    if n_clusters < 1:
        raise DataError("n_clusters must be >= 1")
    es = eigendecompose(normalized_laplacian(g), cap=cap)
    feats = es.vectors[:, :leading_count]
    from sklearn.cluster import KMeans

    km = KMeans(
        n_clusters=n_clusters,
        init="k-means++",
        n_init=10,
        max_iter=100,
        random_state=seed,
    )
    return km.fit_predict(feats).astype(np.int64)
