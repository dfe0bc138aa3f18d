from __future__ import annotations

import numpy as np
import pytest

from emocnet.layers import (
    FullyConnected,
    MaxPool2D,
    ReLU,
    ShapeError,
    Softmax,
)
from emocnet.network import (
    Network,
    ParamLayout,
    expand_final_classifier,
    network_from_config,
)

from conftest import finite_difference, max_rel_error, random_convnet, random_mlp


def test_zero_weight_net_outputs_uniform_posterior():
    net = Network([FullyConnected(3, 2), Softmax()], (3,),
                  theta=np.zeros(3 * 2 + 2))
    p = net.forward(np.array([0.7, -1.2, 3.0]))
    assert np.array_equal(p, np.array([0.5, 0.5]))


def test_maxpool_picks_window_maximum():
    pool = MaxPool2D(2)
    x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
    y, _ = pool.forward(x, [])
    assert y.shape == (1, 1, 1)
    assert y[0, 0, 0] == 4.0


def _loop_forward(net, x):
    """Straight-line re-implementation of the forward pass with plain loops."""
    per_layer = net.layout.unflatten(net.theta)
    a = np.array(x, dtype=float)
    for i, layer in enumerate(net.layers):
        if isinstance(layer, FullyConnected):
            w, b = per_layer[i]
            v = a.reshape(-1)
            out = np.zeros(layer.out_features)
            for r in range(layer.out_features):
                acc = 0.0
                for c in range(layer.in_features):
                    acc += w[r, c] * v[c]
                out[r] = acc + b[r]
            a = out
        elif isinstance(layer, ReLU):
            a = np.where(a > 0, a, 0.0)
        elif isinstance(layer, Softmax):
            e = np.exp(a - a.max())
            a = e / e.sum()
        else:
            raise AssertionError("loop oracle only covers mlp layers")
    return a


def test_forward_matches_plain_loop_oracle(rng):
    net = Network(
        [FullyConnected(4, 6), ReLU(), FullyConnected(6, 3), Softmax()],
        (4,), rng=rng, weight_scale=0.5,
    )
    x = rng.normal(size=4)
    assert max_rel_error(net.forward(x), _loop_forward(net, x)) <= 1e-12


def test_forward_shape_mismatch_raises(rng):
    net = random_mlp(rng)
    with pytest.raises(ShapeError):
        net.forward(np.zeros(net.input_shape[0] + 1))


def test_forward_is_deterministic(rng):
    net = random_mlp(rng)
    x = rng.normal(size=net.input_shape)
    assert np.array_equal(net.forward(x), net.forward(x))


def test_posterior_is_valid_distribution():
    for i in range(10):
        rng = np.random.default_rng(i)
        net = random_mlp(rng)
        p = net.forward(rng.normal(size=net.input_shape) * 5)
        assert np.all(p >= 0.0) and np.all(p <= 1.0)
        assert abs(p.sum() - 1.0) <= 1e-9


def test_softmax_must_be_final_and_only_final():
    with pytest.raises(ShapeError):
        Network([FullyConnected(2, 2)], (2,))
    with pytest.raises(ShapeError):
        Network([Softmax(), FullyConnected(2, 2), Softmax()], (2,))


def test_backward_zero_cotangent_gives_zero_gradient(rng):
    net = random_mlp(rng)
    x = rng.normal(size=net.input_shape)
    g = net.backward_scalar(x, np.zeros(net.num_classes))
    assert np.array_equal(g, np.zeros(net.param_count))


def test_backward_matches_finite_differences_over_seeds():
    worst = 0.0
    for i in range(20):
        rng = np.random.default_rng(np.random.SeedSequence([77, i]))
        net = random_convnet(rng) if i % 4 == 0 else random_mlp(rng)
        assert net.param_count <= 500
        x = rng.normal(size=net.input_shape)
        ct = rng.normal(size=net.num_classes)
        grad = net.backward_scalar(x, ct)
        fd = finite_difference(lambda: float(ct @ net.forward(x)), net.theta)
        worst = max(worst, max_rel_error(grad, fd))
    assert worst <= 1e-4


def test_linear_softmax_gradient_closed_form(rng):
    # single affine layer + softmax: dp_c / dW[j, k] = (delta_jc - p_j) p_c x_k
    d, c_total = 4, 3
    net = Network([FullyConnected(d, c_total), Softmax()], (d,), rng=rng,
                  weight_scale=0.5)
    x = rng.normal(size=d)
    p = net.forward(x)
    for c in range(c_total):
        onehot = np.zeros(c_total)
        onehot[c] = 1.0
        grad = net.backward_scalar(x, onehot)
        w_grad = grad[: d * c_total].reshape(c_total, d)
        b_grad = grad[d * c_total :]
        for j in range(c_total):
            expected_row = ((1.0 if j == c else 0.0) - p[j]) * p[c] * x
            assert max_rel_error(w_grad[j], expected_row) <= 1e-10
            assert abs(b_grad[j] - ((1.0 if j == c else 0.0) - p[j]) * p[c]) <= 1e-12


def test_jacobian_columns_sum_to_zero(rng):
    net = random_mlp(rng)
    jac = net.output_jacobian(rng.normal(size=net.input_shape))
    assert np.abs(jac.sum(axis=0)).max() <= 1e-9


def test_jacobian_rows_match_finite_differences():
    rng = np.random.default_rng(5)
    net = random_mlp(rng)
    x = rng.normal(size=net.input_shape)
    jac = net.output_jacobian(x)
    for c in range(net.num_classes):
        fd = finite_difference(lambda: float(net.forward(x)[c]), net.theta)
        assert max_rel_error(jac[c], fd) <= 1e-4


def test_jacobian_rows_equal_backward_scalar_bitwise(rng):
    net = random_convnet(rng)
    x = rng.normal(size=net.input_shape)
    jac = net.output_jacobian(x)
    for c in range(net.num_classes):
        onehot = np.zeros(net.num_classes)
        onehot[c] = 1.0
        assert np.array_equal(jac[c], net.backward_scalar(x, onehot))


def test_softmax_only_network_has_empty_jacobian():
    net = Network([Softmax()], (4,))
    assert net.param_count == 0
    jac = net.output_jacobian(np.array([0.1, 0.2, 0.3, 0.4]))
    assert jac.shape == (4, 0)


def test_param_layout_round_trip(rng):
    net = random_convnet(rng)
    layout: ParamLayout = net.layout
    rebuilt = layout.flatten(layout.unflatten(net.theta))
    assert np.array_equal(rebuilt, net.theta)
    assert layout.total == sum(seg.size for seg in layout.segments)


def test_network_from_config_appends_classifier(rng):
    net = network_from_config(
        [{"kind": "fully_connected", "out_features": 8}, {"kind": "relu"}],
        (5,), num_classes=4, rng=rng,
    )
    assert net.num_classes == 4
    assert isinstance(net.layers[-1], Softmax)
    p = net.forward(rng.normal(size=5))
    assert abs(p.sum() - 1.0) <= 1e-9


def test_expand_final_classifier_keeps_old_rows(rng):
    net = network_from_config([{"kind": "fully_connected", "out_features": 6},
                               {"kind": "relu"}], (4,), 3, rng=rng)
    velocity = rng.normal(size=net.param_count)
    x = rng.normal(size=4)
    before = net.forward(x)
    wider, new_velocity = expand_final_classifier(net, 1, rng, velocity=velocity)
    assert wider.num_classes == 4
    after = wider.forward(x)
    # old-class logits unchanged, so old posteriors keep their ratios
    ratios = after[:3] / before
    assert np.allclose(ratios, ratios[0])
    assert new_velocity.shape == (wider.param_count,)
    # velocity for surviving segments is preserved
    old_per_layer = net.layout.unflatten(velocity)
    new_per_layer = wider.layout.unflatten(new_velocity)
    assert np.array_equal(old_per_layer[0][0], new_per_layer[0][0])
    assert np.array_equal(new_per_layer[2][0][:3], old_per_layer[2][0])
    assert np.array_equal(new_per_layer[2][0][3], np.zeros(6))
