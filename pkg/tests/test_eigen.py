import numpy as np
import pytest

from lapslice import (
    CapExceededError,
    Graph,
    eigendecompose,
    exact_bandpass,
    generate_er,
    generate_grid,
    normalized_laplacian,
    sc_features,
    simplified_sc,
)


def eig(g):
    return eigendecompose(normalized_laplacian(g))


class TestEigendecompose:
    def test_two_node_path(self):
        es = eig(Graph(num_nodes=2, edges=[(0, 1)]))
        np.testing.assert_allclose(es.values, [0.0, 2.0], atol=1e-12)

    def test_two_triangles_zero_multiplicity(self, two_triangles):
        es = eig(two_triangles)
        assert np.sum(np.abs(es.values) < 1e-9) == 2

    def test_trace_identity(self):
        g = generate_er(50, 0.2, seed=0, self_loops=False)
        es = eig(g)
        assert abs(es.values.sum() - g.num_nodes) < 1e-6

    def test_reconstruction_and_orthonormality(self):
        g = generate_er(80, 0.1, seed=2)
        lap = normalized_laplacian(g)
        es = eigendecompose(lap)
        recon = es.vectors @ np.diag(es.values) @ es.vectors.T
        assert np.linalg.norm(recon - lap.to_dense()) < 1e-8
        gram = es.vectors.T @ es.vectors
        assert np.linalg.norm(gram - np.eye(g.num_nodes)) < 1e-8

    def test_ascending(self):
        es = eig(generate_er(40, 0.3, seed=1))
        assert np.all(np.diff(es.values) >= 0)

    def test_cap(self):
        g = generate_er(30, 0.1, seed=0)
        with pytest.raises(CapExceededError):
            eigendecompose(normalized_laplacian(g), cap=10)


class TestExactBandpass:
    def test_projector_keeps_passed_eigenvector(self):
        es = eig(generate_er(30, 0.3, seed=5))
        k = 7
        lam = es.values[k]
        u = es.vectors[:, k]
        out = exact_bandpass(es, max(0.0, lam - 0.01), min(2.0, lam + 0.01), u)
        np.testing.assert_allclose(out, u, atol=1e-10)

    def test_projector_kills_excluded_eigenvector(self):
        es = eig(generate_er(30, 0.3, seed=5))
        u = es.vectors[:, 7]
        lam = es.values[7]
        out = exact_bandpass(es, min(lam + 0.05, 2.0), 2.0, u)
        np.testing.assert_allclose(out, 0.0, atol=1e-10)

    def test_full_spectrum_identity(self):
        es = eig(generate_er(30, 0.3, seed=6))
        m = np.random.default_rng(0).normal(size=(30, 3))
        np.testing.assert_allclose(exact_bandpass(es, 0.0, 2.0, m), m, atol=1e-8)

    def test_band_additivity_partition(self):
        es = eig(generate_er(60, 0.15, seed=9))
        m = np.random.default_rng(1).normal(size=(60, 2))
        edges = [0.0, 0.5, 1.0, 1.5, 2.0]
        total = sum(
            exact_bandpass(es, e1, e2, m) for e1, e2 in zip(edges, edges[1:])
        )
        assert np.linalg.norm(total - m) < 1e-7

    def test_projector_idempotent(self):
        es = eig(generate_er(40, 0.2, seed=3))
        m = np.random.default_rng(2).normal(size=(40, 2))
        once = exact_bandpass(es, 0.4, 1.2, m)
        twice = exact_bandpass(es, 0.4, 1.2, once)
        assert np.linalg.norm(once - twice) < 1e-8


class TestScFeatures:
    def test_full_pass_distances_sqrt2(self):
        es = eig(generate_er(20, 0.4, seed=4))
        f = sc_features(es, 2.0)
        d = np.linalg.norm(f[:, None, :] - f[None, :, :], axis=2)
        off = d[~np.eye(20, dtype=bool)]
        np.testing.assert_allclose(off, np.sqrt(2.0), atol=1e-8)

    def test_only_constant_passes_near_zero(self):
        # Regular connected graph: the zero eigenvector is constant, so a
        # cutoff below the spectral gap collapses all rows onto one point.
        cycle = Graph(num_nodes=10, edges=[(i, (i + 1) % 10) for i in range(10)])
        es = eig(cycle)
        lam2 = es.values[1]
        f = sc_features(es, lam2 / 2)
        d = np.linalg.norm(f[:, None, :] - f[None, :, :], axis=2)
        assert d.max() < 1e-8

    def test_two_triangles_midband_separates(self, two_triangles):
        es = eig(two_triangles)
        f = sc_features(es, 0.5)
        d = np.linalg.norm(f[:, None, :] - f[None, :, :], axis=2)
        intra = [d[0, 1], d[0, 2], d[1, 2], d[3, 4], d[3, 5], d[4, 5]]
        inter = [d[i, j] for i in range(3) for j in range(3, 6)]
        assert max(intra) < min(inter)

    def test_matches_leading_eigenvector_distances(self):
        # Same spectral content as taking the leading eigenvectors directly,
        # provided no eigenvalue sits exactly at the cutoff.
        g = generate_er(40, 0.2, seed=8)
        es = eig(g)
        cut = (es.values[9] + es.values[10]) / 2
        f = sc_features(es, cut)
        lead = es.vectors[:, :10]
        df = np.linalg.norm(f[:, None, :] - f[None, :, :], axis=2)
        dl = np.linalg.norm(lead[:, None, :] - lead[None, :, :], axis=2)
        assert np.abs(df - dl).max() < 1e-8


class TestSimplifiedSc:
    def test_two_triangles_perfectly_separated(self, two_triangles):
        assign = simplified_sc(two_triangles, leading_count=2, n_clusters=2, seed=0)
        # Zero-cut partition: clusters coincide with components.
        assert len(set(assign[:3])) == 1
        assert len(set(assign[3:])) == 1
        assert assign[0] != assign[3]

    def test_k_one(self):
        g = generate_er(12, 0.4, seed=2)
        assert set(simplified_sc(g, 3, 1, seed=0)) == {0}

    def test_k_equals_n(self):
        g = generate_grid(5, 1)  # path: distinct feature rows
        assign = simplified_sc(g, leading_count=5, n_clusters=5, seed=0)
        assert len(set(assign.tolist())) == 5

    def test_deterministic(self):
        g = generate_er(25, 0.25, seed=6, labels=2)
        a = simplified_sc(g, 4, 3, seed=1)
        b = simplified_sc(g, 4, 3, seed=1)
        assert np.array_equal(a, b)
