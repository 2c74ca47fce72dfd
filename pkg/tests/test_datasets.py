"""LINQS parsing, feature scaling, stratified splits, and the graph cache."""

import numpy as np
import pytest

from conftest import TINY_CITES, TINY_CONTENT, write_tiny_dataset
from modgcn.datasets import (DatasetSource, SplitSpec, content_hash,
                             load_dataset, load_graph_cache, load_linqs,
                             preprocess_features, resolve_dataset,
                             save_graph_cache, stratified_split)
from modgcn.sparse import build_graph


def tiny_source(tmp_path, content=TINY_CONTENT, cites=TINY_CITES):
    base = write_tiny_dataset(tmp_path, content=content, cites=cites)
    return DatasetSource(base / "tiny.content", base / "tiny.cites", "tiny")


class TestResolve:
    def test_known_name_under_data_dir(self, tmp_path):
        base = tmp_path / "cora"
        base.mkdir()
        (base / "cora.content").write_text(TINY_CONTENT)
        (base / "cora.cites").write_text(TINY_CITES)
        src = resolve_dataset("cora", str(tmp_path))
        assert src.name == "cora"
        assert src.content_path.is_file()

    def test_directory_path(self, tiny_dataset):
        src = resolve_dataset(str(tiny_dataset), "ignored")
        assert src.name == "tiny"

    def test_missing_files_error_is_single_line(self, tmp_path):
        with pytest.raises(ValueError) as err:
            resolve_dataset("cora", str(tmp_path / "nowhere"))
        assert "\n" not in str(err.value)


class TestLoadLinqs:
    def test_tiny_fixture_shapes(self, tmp_path):
        g = load_linqs(tiny_source(tmp_path))
        assert g.num_nodes == 3
        assert g.features.shape == (3, 3)
        assert g.num_edges == 1
        # classes sorted lexicographically: biology=0, physics=1
        np.testing.assert_array_equal(g.labels, [1, 0, 1])
        np.testing.assert_array_equal(
            g.adjacency.to_dense(),
            [[0, 1, 0], [1, 0, 0], [0, 0, 0]])

    def test_unknown_citation_dropped_with_warning(self, tmp_path):
        src = tiny_source(tmp_path, cites="n1\tn2\nn1\tghost\n")
        with pytest.warns(UserWarning, match="dropped 1 citation"):
            g = load_linqs(src)
        assert g.num_edges == 1

    def test_malformed_content_line(self, tmp_path):
        bad = TINY_CONTENT + "n4\t1\tphysics\n"  # wrong column count
        with pytest.raises(ValueError, match="columns"):
            load_linqs(tiny_source(tmp_path, content=bad))

    def test_malformed_cites_line(self, tmp_path):
        with pytest.raises(ValueError, match="cited citing"):
            load_linqs(tiny_source(tmp_path, cites="n1\tn2\tn3\n"))

    def test_empty_content_file(self, tmp_path):
        with pytest.raises(ValueError, match="empty"):
            load_linqs(tiny_source(tmp_path, content=""))

    def test_duplicate_ids_rejected(self, tmp_path):
        dup = TINY_CONTENT + "n1\t0\t0\t0\tbiology\n"
        with pytest.raises(ValueError, match="duplicate"):
            load_linqs(tiny_source(tmp_path, content=dup))

    def test_self_check_rejects_truncated_known_dataset(self, tmp_path):
        base = write_tiny_dataset(tmp_path, name="cora")
        src = DatasetSource(base / "cora.content", base / "cora.cites",
                            "cora")
        with pytest.raises(ValueError, match="expected"):
            load_linqs(src)


class TestPreprocess:
    def test_row_normalize(self):
        g = build_graph([(0, 1)], np.array([[1.0, 1.0, 2.0],
                                            [0.0, 0.0, 0.0]]),
                        np.array([0, 1]))
        out = preprocess_features(g, "row_normalize")
        np.testing.assert_allclose(out.features[0], [0.25, 0.25, 0.5])
        np.testing.assert_array_equal(out.features[1], [0.0, 0.0, 0.0])

    def test_none_is_identity(self):
        g = build_graph([(0, 1)], np.array([[1.0], [2.0]]),
                        np.array([0, 1]))
        out = preprocess_features(g, "none")
        assert out.features is g.features

    def test_unknown_mode(self):
        g = build_graph([(0, 1)], np.zeros((2, 1)), np.array([0, 1]))
        with pytest.raises(ValueError, match="feature mode"):
            preprocess_features(g, "standardize")


def synthetic_graph(n=200, num_classes=4, seed=0):
    rng = np.random.default_rng(seed)
    edges = [(int(rng.integers(0, n)), int(rng.integers(0, n)))
             for _ in range(3 * n)]
    labels = np.arange(n) % num_classes
    return build_graph(edges, rng.standard_normal((n, 3)), labels)


class TestStratifiedSplit:
    def test_sizes_and_disjointness(self):
        g = synthetic_graph()
        train, test = stratified_split(g, SplitSpec(5, test_size=100,
                                                    seed=1))
        assert len(train) == 5 * 4
        assert len(test) == 100
        assert len(np.intersect1d(train, test)) == 0

    def test_per_class_counts_equal(self):
        g = synthetic_graph()
        train, _ = stratified_split(g, SplitSpec(7, test_size=50, seed=2))
        counts = np.bincount(g.labels[train], minlength=4)
        np.testing.assert_array_equal(counts, [7, 7, 7, 7])

    def test_same_seed_same_split(self):
        g = synthetic_graph()
        a = stratified_split(g, SplitSpec(5, test_size=100, seed=3))
        b = stratified_split(g, SplitSpec(5, test_size=100, seed=3))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_different_seed_different_split(self):
        g = synthetic_graph()
        a, _ = stratified_split(g, SplitSpec(5, test_size=100, seed=4))
        b, _ = stratified_split(g, SplitSpec(5, test_size=100, seed=5))
        assert not np.array_equal(a, b)

    def test_property_balance_and_disjointness_1000_seeds(self):
        g = synthetic_graph()
        for seed in range(1000):
            train, test = stratified_split(g, SplitSpec(3, test_size=40,
                                                        seed=seed))
            assert len(np.intersect1d(train, test)) == 0
            np.testing.assert_array_equal(
                np.bincount(g.labels[train], minlength=4), [3, 3, 3, 3])

    def test_class_too_small(self):
        # 17 of class 0 but only 3 of class 1: the total is plenty,
        # the per-class quota is not
        labels = np.array([0] * 17 + [1] * 3)
        g = build_graph([(i, i + 1) for i in range(19)],
                        np.ones((20, 2)), labels)
        with pytest.raises(ValueError, match="class"):
            stratified_split(g, SplitSpec(4, test_size=2, seed=0))

    def test_test_set_too_large(self):
        g = synthetic_graph(n=20)
        with pytest.raises(ValueError, match="labeled nodes"):
            stratified_split(g, SplitSpec(2, test_size=500, seed=0))


class TestCache:
    def test_round_trip_identical(self, tmp_path):
        g = synthetic_graph(n=30)
        path = tmp_path / "g.npz"
        save_graph_cache(g, path)
        loaded = load_graph_cache(path)
        np.testing.assert_array_equal(loaded.adjacency.to_dense(),
                                      g.adjacency.to_dense())
        np.testing.assert_array_equal(loaded.features, g.features)
        np.testing.assert_array_equal(loaded.labels, g.labels)
        assert loaded.num_classes == g.num_classes
        assert loaded.num_edges == g.num_edges

    def test_content_hash_tracks_file_changes(self, tmp_path):
        src = tiny_source(tmp_path)
        before = content_hash(src)
        src.cites_path.write_text("n2\tn3\n")
        assert content_hash(src) != before

    def test_load_dataset_uses_and_refreshes_cache(self, tmp_path):
        write_tiny_dataset(tmp_path)
        g1 = load_dataset(str(tmp_path / "tiny"), str(tmp_path))
        caches = list((tmp_path / ".cache").glob("*.npz"))
        assert len(caches) == 1
        g2 = load_dataset(str(tmp_path / "tiny"), str(tmp_path))
        np.testing.assert_array_equal(g1.features, g2.features)
        np.testing.assert_array_equal(g1.adjacency.to_dense(),
                                      g2.adjacency.to_dense())

    def test_load_dataset_without_cache(self, tmp_path):
        write_tiny_dataset(tmp_path)
        load_dataset(str(tmp_path / "tiny"), str(tmp_path), use_cache=False)
        assert not (tmp_path / ".cache").exists()
