import numpy as np
import pytest

from lapslice import (
    DataError,
    Graph,
    SlicerBank,
    SlicerParams,
    apply_slicer,
    build_dictionary,
    generate_er,
    load_dictionary,
    normalized_laplacian,
    sample_random_signals,
    save_dictionary,
)


def two_triangles_graph():
    return Graph(
        num_nodes=6,
        edges=[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
    )


class TestBuildDictionary:
    def test_single_band_no_features_equals_apply(self):
        g = generate_er(30, 0.2, seed=1)
        rs = sample_random_signals(30, 8, seed=2)
        bank = SlicerBank((SlicerParams(a=0.55),))
        d = build_dictionary(g, bank, rs)
        assert d.num_columns == 8
        direct = apply_slicer(normalized_laplacian(g), bank[0], rs.matrix)
        np.testing.assert_allclose(d.gamma, direct, atol=1e-12)

    def test_column_count_with_features(self):
        g = generate_er(20, 0.3, seed=4)
        g = Graph(num_nodes=20, edges=g.edges,
                  features=np.random.default_rng(0).normal(size=(20, 5)))
        rs = sample_random_signals(20, 8, seed=0)
        d = build_dictionary(g, SlicerBank.default(), rs)
        assert d.num_columns == 20 * (8 + 5)
        assert d.num_bands == 20
        assert d.feature_cols == 5
        assert d.band_ranges[0] == (0, 13)
        assert d.band_ranges[-1] == (19 * 13, 20 * 13)

    def test_row_mismatch_rejected(self):
        g = generate_er(10, 0.5, seed=0)
        rs = sample_random_signals(12, 4, seed=0)
        with pytest.raises(DataError):
            build_dictionary(g, SlicerBank.default(), rs)

    def test_low_band_separates_components(self):
        # Lowest band of the dictionary reflects component structure: rows
        # within a triangle stay closer than rows across triangles.
        g = two_triangles_graph()
        rs = sample_random_signals(6, 64, seed=7)
        bank = SlicerBank.default()
        d = build_dictionary(g, bank, rs)
        block = d.band_block(0)
        dist = np.linalg.norm(block[:, None, :] - block[None, :, :], axis=2)
        intra = [dist[0, 1], dist[0, 2], dist[1, 2], dist[3, 4], dist[3, 5], dist[4, 5]]
        inter = [dist[i, j] for i in range(3) for j in range(3, 6)]
        assert max(intra) < min(inter)


class TestDictionaryIo:
    def test_round_trip(self, tmp_path):
        g = generate_er(25, 0.2, seed=3)
        rs = sample_random_signals(25, 6, seed=5)
        d = build_dictionary(g, SlicerBank.default(count=4), rs)
        path = tmp_path / "gamma.dict"
        save_dictionary(path, d)
        loaded = load_dictionary(path)
        assert np.array_equal(loaded.gamma, d.gamma)
        assert loaded.band_ranges == d.band_ranges
        assert loaded.eta == d.eta
        assert loaded.feature_cols == d.feature_cols

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.dict"
        path.write_bytes(b"NOPE" + b"\x00" * 64)
        with pytest.raises(DataError):
            load_dictionary(path)

    def test_truncated_payload(self, tmp_path):
        g = generate_er(10, 0.3, seed=1)
        rs = sample_random_signals(10, 4, seed=1)
        d = build_dictionary(g, SlicerBank.default(count=2), rs)
        path = tmp_path / "gamma.dict"
        save_dictionary(path, d)
        data = path.read_bytes()
        path.write_bytes(data[:-16])
        with pytest.raises(DataError):
            load_dictionary(path)
