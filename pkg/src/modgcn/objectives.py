"""Masked cross-entropy, the modularity term, and their combinations.

The cross-entropy is summed (not averaged) over the labeled nodes, so the
trade-off weight alpha keeps the same meaning across label budgets; note
this interacts with the learning rate when changing budgets.
"""

from dataclasses import dataclass

import numpy as np

from .layers import softmax_rows_backward
from .model import Model
from .sparse import DegreeVector, Graph, degree_vector, modularity_apply

LOG_CLAMP = 1e-12


@dataclass(frozen=True)
class LabelMask:
    """Training-label selection: node ids plus a one-hot target matrix."""

    train_ids: np.ndarray
    onehot: np.ndarray

    @classmethod
    def from_graph(cls, g: Graph, train_ids) -> "LabelMask":
        train_ids = np.asarray(train_ids, dtype=np.int64)
        if len(train_ids) == 0:
            raise ValueError("empty training set")
        if train_ids.min() < 0 or train_ids.max() >= g.num_nodes:
            raise ValueError("train id out of range")
        labels = g.labels[train_ids]
        if np.any(labels < 0):
            raise ValueError("training set contains unlabeled nodes")
        onehot = np.zeros((g.num_nodes, g.num_classes))
        onehot[train_ids, labels] = 1.0
        return cls(train_ids, onehot)


@dataclass(frozen=True)
class LossReport:
    """total = (1 - alpha) * supervised - alpha * modularity_term."""

    total: float
    supervised: float
    modularity_term: float
    alpha: float


def masked_cross_entropy(z: np.ndarray, mask: LabelMask):
    """Cross-entropy summed over labeled rows of the probability matrix z.

    Returns (loss, gradient w.r.t. the pre-softmax logits): the softmax and
    cross-entropy backward passes are fused, giving (z - y) on labeled rows
    and zero elsewhere.
    """
    ids = mask.train_ids
    if len(ids) == 0:
        raise ValueError("empty training set")
    picked = np.sum(z[ids] * mask.onehot[ids], axis=1)
    loss = -float(np.sum(np.log(np.maximum(picked, LOG_CLAMP))))
    grad_pre = np.zeros_like(z)
    grad_pre[ids] = z[ids] - mask.onehot[ids]
    return loss, grad_pre


def modularity_loss(g: Graph, degrees: DegreeVector, h: np.ndarray):
    """Negated normalized modularity: loss = -tr(H^T B H) / 2e.

    Returns (loss, gradient w.r.t. H); B is symmetric, so the gradient is
    -(2 / 2e) * B @ H, computed through the lazy operator.
    """
    bh = modularity_apply(g, degrees, h)
    two_e = 2.0 * g.num_edges
    loss = -float(np.sum(h * bh)) / two_e
    return loss, -(2.0 / two_e) * bh


def supervised_loss(model: Model, graph: Graph, mask: LabelMask, features=None):
    """Pure cross-entropy training signal (the plain variant).

    Returns (LossReport, parameter gradients, ForwardResult).
    """
    fwd = model.forward(graph.features if features is None else features)
    sup, grad_pre = masked_cross_entropy(fwd.output, mask)
    grads = _backprop_encoder(model, fwd, grad_pre)
    if model.aux is not None:
        _add_zero_aux_grads(model, grads)
    return LossReport(sup, sup, 0.0, 0.0), grads, fwd


def combined_loss_output_reg(model: Model, graph: Graph, mask: LabelMask,
                             alpha: float, features=None):
    """Output-layer regularization: the modularity term is scored on the
    output softmax matrix and both signals share every parameter.

    Returns (LossReport, parameter gradients, ForwardResult).
    """
    _check_alpha(alpha)
    if model.aux is not None:
        raise ValueError("output-reg objective expects a model without an aux head")
    fwd = model.forward(graph.features if features is None else features)
    z = fwd.output
    degrees = degree_vector(graph)
    sup, grad_pre_sup = masked_cross_entropy(z, mask)
    mod_loss, grad_z_mod = modularity_loss(graph, degrees, z)
    q = -mod_loss
    delta2 = (1.0 - alpha) * grad_pre_sup
    if alpha > 0.0:
        # route the modularity gradient through the output softmax
        delta2 += alpha * softmax_rows_backward(z, grad_z_mod)
    grads = _backprop_encoder(model, fwd, delta2)
    total = (1.0 - alpha) * sup - alpha * q
    return LossReport(total, sup, q, alpha), grads, fwd


def combined_loss_aux(model: Model, graph: Graph, mask: LabelMask,
                      alpha: float, features=None):
    """Auxiliary-head objective with per-branch gradient routing.

    The supervised loss is scored on the output layer and the modularity
    term on the auxiliary cluster-assignment head. Post-branch supervised
    weights receive only the (1 - alpha)-scaled supervised signal, the aux
    head only the alpha-scaled modularity signal, and the shared first layer
    the sum of both.

    Returns (LossReport, parameter gradients, ForwardResult).
    """
    _check_alpha(alpha)
    if model.aux is None:
        raise ValueError("aux objective expects a model with an aux head")
    fwd = model.forward(graph.features if features is None else features)
    degrees = degree_vector(graph)
    sup, grad_pre_sup = masked_cross_entropy(fwd.output, mask)
    mod_loss, grad_aux = modularity_loss(graph, degrees, fwd.aux_out)
    q = -mod_loss

    delta2 = (1.0 - alpha) * grad_pre_sup
    grad_hidden, gw2, gb2 = model.layer2.backward_from_pre(fwd.cache2, delta2)
    # scaling the upstream gradient by alpha scales every aux gradient with it,
    # so alpha = 0 yields exact zeros
    grad_in_aux, gw_aux, gb_aux = model.aux.backward(fwd.cache_aux, alpha * grad_aux)
    grad_hidden = grad_hidden + grad_in_aux
    _, gw1, gb1 = model.layer1.backward(fwd.cache1, grad_hidden)

    grads = dict(model.layer1.grad_items("layer1", gw1, gb1))
    grads.update(model.layer2.grad_items("layer2", gw2, gb2))
    grads["aux.w"] = gw_aux
    grads["aux.b"] = gb_aux
    total = (1.0 - alpha) * sup - alpha * q
    return LossReport(total, sup, q, alpha), grads, fwd


def objective_for(model: Model, graph: Graph, mask: LabelMask, features=None):
    """Evaluate the objective selected by the model's spec variant."""
    variant = model.spec.variant
    if variant == "plain":
        return supervised_loss(model, graph, mask, features=features)
    if variant == "mod":
        return combined_loss_output_reg(model, graph, mask,
                                        model.spec.effective_alpha, features=features)
    return combined_loss_aux(model, graph, mask,
                             model.spec.effective_alpha, features=features)


def _check_alpha(alpha: float) -> None:
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")


def _backprop_encoder(model: Model, fwd, delta2: np.ndarray) -> dict:
    """Chain rule through both graph-conv layers from the output
    pre-activation gradient."""
    grad_hidden, gw2, gb2 = model.layer2.backward_from_pre(fwd.cache2, delta2)
    _, gw1, gb1 = model.layer1.backward(fwd.cache1, grad_hidden)
    grads = dict(model.layer1.grad_items("layer1", gw1, gb1))
    grads.update(model.layer2.grad_items("layer2", gw2, gb2))
    return grads


def _add_zero_aux_grads(model: Model, grads: dict) -> None:
    grads["aux.w"] = np.zeros_like(model.aux.weight)
    grads["aux.b"] = np.zeros_like(model.aux.bias)
