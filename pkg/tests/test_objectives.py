"""Loss values, fused gradients, and the per-variant objective wiring."""

import numpy as np
import pytest

from conftest import random_graph, two_cliques_graph
from modgcn.layers import softmax_rows
from modgcn.model import ModelSpec, build_model
from modgcn.objectives import (LabelMask, masked_cross_entropy,
                               modularity_loss, objective_for,
                               supervised_loss, combined_loss_aux,
                               combined_loss_output_reg)
from modgcn.sparse import degree_vector


class TestLabelMask:
    def test_builds_onehot_on_train_rows_only(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 4])
        assert mask.onehot.shape == (8, 2)
        np.testing.assert_array_equal(mask.onehot.sum(axis=1),
                                      [1, 0, 0, 0, 1, 0, 0, 0])

    def test_rejects_empty_and_out_of_range(self):
        g = two_cliques_graph()
        with pytest.raises(ValueError, match="empty"):
            LabelMask.from_graph(g, [])
        with pytest.raises(ValueError, match="out of range"):
            LabelMask.from_graph(g, [99])

    def test_rejects_unlabeled_train_node(self):
        g = two_cliques_graph()
        labels = g.labels.copy()
        labels[0] = -1
        g2 = type(g)(g.adjacency, g.features, labels, g.num_classes,
                     g.num_edges)
        with pytest.raises(ValueError, match="unlabeled"):
            LabelMask.from_graph(g2, [0])


class TestMaskedCrossEntropy:
    def test_uniform_probabilities_give_m_log_k(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 1, 4])
        z = np.full((8, 2), 0.5)
        loss, _ = masked_cross_entropy(z, mask)
        assert loss == pytest.approx(3 * np.log(2.0), abs=1e-12)

    def test_perfect_predictions_give_zero(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 4])
        loss, grad = masked_cross_entropy(mask.onehot.copy(), mask)
        assert loss == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_array_equal(grad, np.zeros((8, 2)))

    def test_gradient_is_z_minus_y_on_labeled_rows(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [1, 5])
        rng = np.random.default_rng(0)
        z = softmax_rows(rng.standard_normal((8, 2)))
        _, grad = masked_cross_entropy(z, mask)
        np.testing.assert_allclose(grad[[1, 5]],
                                   z[[1, 5]] - mask.onehot[[1, 5]])
        untouched = [i for i in range(8) if i not in (1, 5)]
        np.testing.assert_array_equal(grad[untouched], np.zeros((6, 2)))

    def test_log_clamp_bounds_the_loss(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0])
        z = np.zeros((8, 2))  # picked probability exactly 0
        loss, _ = masked_cross_entropy(z, mask)
        assert loss == pytest.approx(-np.log(1e-12))


class TestModularityLoss:
    def test_loss_is_negated_score(self):
        g = two_cliques_graph()
        h = np.zeros((8, 2))
        h[:4, 0] = h[4:, 1] = 1.0
        loss, _ = modularity_loss(g, degree_vector(g), h)
        assert loss == pytest.approx(-(12.0 / 13.0 - 0.5), abs=1e-14)

    def test_gradient_matches_dense_formula(self):
        rng = np.random.default_rng(1)
        g = random_graph(rng, 12, p=0.3)
        h = rng.standard_normal((12, 3))
        a = g.adjacency.to_dense()
        k = a.sum(axis=1)
        b = a - np.outer(k, k) / (2.0 * g.num_edges)
        _, grad = modularity_loss(g, degree_vector(g), h)
        np.testing.assert_allclose(grad, -(2.0 / (2.0 * g.num_edges)) * b @ h,
                                   atol=1e-12)


class TestObjectiveWiring:
    def test_plain_report_has_zero_modularity(self):
        g = two_cliques_graph()
        model = build_model(ModelSpec(), g, seed=0)
        mask = LabelMask.from_graph(g, [0, 4])
        report, grads, fwd = supervised_loss(model, g, mask)
        assert report.modularity_term == 0.0
        assert report.total == report.supervised
        assert set(grads) == {"layer1.w0", "layer1.b",
                              "layer2.w0", "layer2.b"}

    def test_output_reg_total_arithmetic(self):
        g = two_cliques_graph()
        model = build_model(ModelSpec(variant="mod", alpha=0.3), g, seed=0)
        mask = LabelMask.from_graph(g, [0, 4])
        report, _, _ = combined_loss_output_reg(model, g, mask, 0.3)
        assert report.total == pytest.approx(
            0.7 * report.supervised - 0.3 * report.modularity_term, abs=1e-12)
        assert report.alpha == 0.3

    def test_aux_objective_routes_alpha_to_aux_head(self):
        g = two_cliques_graph()
        model = build_model(ModelSpec(variant="aux", alpha=0.5), g, seed=0)
        mask = LabelMask.from_graph(g, [0, 4])
        report, grads, _ = combined_loss_aux(model, g, mask, 0.5)
        assert "aux.w" in grads and "aux.b" in grads
        assert report.total == pytest.approx(
            0.5 * report.supervised - 0.5 * report.modularity_term, abs=1e-12)

    def test_aux_gradients_are_exact_zeros_at_alpha_zero(self):
        g = two_cliques_graph()
        model = build_model(ModelSpec(variant="aux", alpha=0.0), g, seed=0)
        mask = LabelMask.from_graph(g, [0, 4])
        _, grads, _ = combined_loss_aux(model, g, mask, 0.0)
        assert np.all(grads["aux.w"] == 0.0)
        assert np.all(grads["aux.b"] == 0.0)

    def test_alpha_validation(self):
        g = two_cliques_graph()
        model = build_model(ModelSpec(variant="mod", alpha=0.5), g, seed=0)
        mask = LabelMask.from_graph(g, [0, 4])
        with pytest.raises(ValueError, match="alpha"):
            combined_loss_output_reg(model, g, mask, 1.5)

    def test_variant_head_mismatch_is_rejected(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 4])
        aux_model = build_model(ModelSpec(variant="aux", alpha=0.5), g, seed=0)
        plain_model = build_model(ModelSpec(), g, seed=0)
        with pytest.raises(ValueError, match="without an aux head"):
            combined_loss_output_reg(aux_model, g, mask, 0.5)
        with pytest.raises(ValueError, match="with an aux head"):
            combined_loss_aux(plain_model, g, mask, 0.5)

    def test_objective_for_dispatches_on_variant(self):
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 4])
        for spec in (ModelSpec(), ModelSpec(variant="mod", alpha=0.4),
                     ModelSpec(variant="aux", alpha=0.4)):
            model = build_model(spec, g, seed=1)
            report, grads, fwd = objective_for(model, g, mask)
            assert np.isfinite(report.total)
            assert set(grads) == set(model.params())

    def test_sparse_features_match_dense_features(self):
        from modgcn.sparse import CsrMatrix
        g = two_cliques_graph()
        mask = LabelMask.from_graph(g, [0, 4])
        model = build_model(ModelSpec(variant="mod", alpha=0.3), g, seed=2)
        dense_report, dense_grads, _ = objective_for(model, g, mask)
        sparse_report, sparse_grads, _ = objective_for(
            model, g, mask, features=CsrMatrix.from_dense(g.features))
        assert sparse_report.total == pytest.approx(dense_report.total,
                                                    abs=1e-12)
        for key in dense_grads:
            np.testing.assert_allclose(sparse_grads[key], dense_grads[key],
                                       atol=1e-12)
