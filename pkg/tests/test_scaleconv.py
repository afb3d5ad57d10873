import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disco.basis import build_interp_baseline
from disco.equivariance import equivariance_error
from disco.errors import ConfigurationError, DomainError, SizeError
from disco.grid import convolve
from disco.scaleconv import (
    ScaleConvLayer,
    ScaleFeatureMap,
    act,
    lift,
    random_network,
    scale_convolve,
    synthetic_images,
)
from disco.scales import ScaleSet


def one_hot_layer(basis, j, extent=1, s_out=0):
    w = np.zeros((1, 1, extent, basis.num_functions))
    w[0, 0, s_out, j] = 1.0
    return ScaleConvLayer(basis, w)


def test_lift_delta_and_broadcast(sqrt2_set):
    img = np.arange(16.0).reshape(4, 4)
    f = lift(img, sqrt2_set)
    assert f.shape == (1, 1, 4, 4, 4)
    assert np.array_equal(f.values[0, 0, 0], img) and not f.values[0, 0, 1:].any()
    g = lift(np.stack([img, img]), sqrt2_set, mode="broadcast")
    assert g.shape == (2, 1, 4, 4, 4)
    assert all(np.array_equal(g.values[1, 0, s], img) for s in range(4))
    with pytest.raises(DomainError):
        lift(img, sqrt2_set, mode="spread")
    with pytest.raises(SizeError):
        lift(np.ones(5), sqrt2_set)


def test_act_zero_is_identity(sqrt2_set):
    f = lift(synthetic_images(2, 12, 0), sqrt2_set, mode="broadcast")
    g = act(f, 0)
    assert np.array_equal(g.values, f.values) and g.values is not f.values


def test_act_moves_slices_and_invalidates_top(integer_set):
    rng = np.random.default_rng(0)
    f = ScaleFeatureMap(rng.normal(size=(1, 1, 3, 8, 8)), integer_set)
    g = act(f, 1)
    assert g.shape == (1, 1, 3, 4, 4)
    assert list(g.valid) == [True, True, False]
    # nearest 2:1 keeps the even samples
    np.testing.assert_array_equal(g.values[0, 0, 0], f.values[0, 0, 1][::2, ::2])
    assert not g.values[0, 0, 2].any()
    with pytest.raises(DomainError):
        act(f, 3)


def test_act_composites_for_nearest(integer_set):
    rng = np.random.default_rng(1)
    f = ScaleFeatureMap(rng.normal(size=(2, 1, 3, 16, 16)), integer_set)
    once = act(act(f, 1), 1)
    twice = act(f, 2)
    assert list(once.valid) == list(twice.valid)
    v = once.valid
    np.testing.assert_array_equal(once.values[:, :, v], twice.values[:, :, v])


def test_identity_weights_keep_input(disco_basis):
    # basis function 4 is the centered delta on every slot
    f = lift(synthetic_images(2, 16, 1), disco_basis.scale_set, mode="broadcast")
    out = scale_convolve(f, one_hot_layer(disco_basis, 4))
    np.testing.assert_allclose(out.values, f.values, atol=1e-12)


def test_single_scale_matches_conv2d():
    ss = ScaleSet.parse("1", 3)
    b = build_interp_baseline(3, ss)
    rng = np.random.default_rng(2)
    w = rng.normal(size=(2, 3, 1, 9))
    x = rng.normal(size=(1, 3, 1, 10, 10))
    out = scale_convolve(ScaleFeatureMap(x, ss), ScaleConvLayer(b, w))
    for o in range(2):
        ref = sum(convolve(x[0, c, 0], w[o, c, 0].reshape(3, 3)) for c in range(3))
        np.testing.assert_allclose(out.values[0, o, 0], ref, atol=1e-12)


def test_scale_offsets_read_higher_slices(integer_basis):
    rng = np.random.default_rng(3)
    x = rng.normal(size=(1, 1, 3, 12, 12))
    layer = one_hot_layer(integer_basis, 4, extent=2, s_out=1)
    out = scale_convolve(ScaleFeatureMap(x, integer_basis.scale_set), layer)
    # offset 1 with a delta kernel copies slice sigma + 1; the top slice has nothing above it
    np.testing.assert_allclose(out.values[0, 0, :2], x[0, 0, 1:], atol=1e-12)
    assert not out.values[0, 0, 2].any()


def test_integer_scale_set_is_equivariant(integer_basis):
    net = random_network(integer_basis, 2, 3, extent=2, seed=4)
    imgs = synthetic_images(3, 32, 5)
    assert equivariance_error(net, imgs, integer_basis.scale_set).delta < 1e-20


def test_sparse_equals_dense(disco_basis):
    net = random_network(disco_basis, 2, 3, extent=2, seed=0)
    f = lift(synthetic_images(2, 20, 3), disco_basis.scale_set, mode="broadcast")
    np.testing.assert_allclose(net(f, sparse=True).values, net(f, sparse=False).values, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2**31))
def test_layer_is_linear(a, b, seed):
    basis = build_interp_baseline(3, ScaleSet.parse("1,sqrt2,2", 3))
    rng = np.random.default_rng(seed)
    layer = ScaleConvLayer(basis, rng.normal(size=(2, 2, 2, 9)))
    x, y = rng.normal(size=(2, 1, 2, 3, 12, 12))
    ss = basis.scale_set
    lhs = scale_convolve(ScaleFeatureMap(a * x + b * y, ss), layer).values
    rhs = a * scale_convolve(ScaleFeatureMap(x, ss), layer).values \
        + b * scale_convolve(ScaleFeatureMap(y, ss), layer).values
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * max(np.linalg.norm(rhs), 1.0)


@settings(max_examples=15, deadline=None)
@given(st.integers(-7, 7), st.integers(-7, 7), st.integers(0, 2**31))
def test_translation_equivariance(sy, sx, seed):
    basis = build_interp_baseline(3, ScaleSet.parse("1,sqrt2,2", 3))
    net = random_network(basis, 2, 2, seed=seed % 1000)
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(1, 1, 3, 14, 14))
    ss = basis.scale_set
    a = net(ScaleFeatureMap(np.roll(x, (sy, sx), axis=(3, 4)), ss)).values
    b = np.roll(net(ScaleFeatureMap(x, ss)).values, (sy, sx), axis=(3, 4))
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_layer_validation(disco_basis, integer_basis):
    with pytest.raises(SizeError):
        ScaleConvLayer(disco_basis, np.ones((1, 1, 1, 8)))
    with pytest.raises(ConfigurationError):
        ScaleConvLayer(disco_basis, np.ones((1, 1, 5, 9)))
    with pytest.raises(DomainError):
        ScaleConvLayer(disco_basis, np.full((1, 1, 1, 9), np.inf))
    layer = ScaleConvLayer(disco_basis, np.ones((1, 2, 1, 9)))
    f = lift(np.ones((1, 12, 12)), disco_basis.scale_set)
    with pytest.raises(ConfigurationError):
        scale_convolve(f, layer)  # channel mismatch
    with pytest.raises(ConfigurationError):
        scale_convolve(lift(np.ones((1, 12, 12)), integer_basis.scale_set), layer)
    small = lift(np.ones((1, 6, 6)), disco_basis.scale_set)
    with pytest.raises(SizeError):
        scale_convolve(small, ScaleConvLayer(disco_basis, np.ones((1, 1, 1, 9))))


def test_invalid_slices_stay_zero(integer_basis):
    f = ScaleFeatureMap(np.ones((1, 1, 3, 12, 12)), integer_basis.scale_set, valid=[True, True, False])
    out = scale_convolve(f, one_hot_layer(integer_basis, 4))
    assert list(out.valid) == [True, True, False] and not out.values[0, 0, 2].any()


def test_synthetic_images_deterministic():
    a, b = synthetic_images(3, 16, 9), synthetic_images(3, 16, 9)
    assert a.shape == (3, 16, 16) and np.array_equal(a, b)
    assert not np.array_equal(a, synthetic_images(3, 16, 10))
