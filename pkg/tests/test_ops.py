"""Numeric-core contracts checked against independent brute-force oracles."""

import numpy as np
import pytest

from caekit import ops
from caekit.ops import KernelBank


# ---------------------------------------------------------------------------
# oracles: straight-line nested loops, no shared code with the implementation
# ---------------------------------------------------------------------------

def conv2d_oracle(x, weights, bias, stride, padding):
    """Quadruple-nested-loop cross-correlation over every output position."""
    c_out, c_in, k_h, k_w = weights.shape
    _, h, w = x.shape
    if padding == "same":
        out_h = -(-h // stride)
        out_w = -(-w // stride)
        pt = max((out_h - 1) * stride + k_h - h, 0) // 2
        pl = max((out_w - 1) * stride + k_w - w, 0) // 2
    else:
        out_h = (h - k_h) // stride + 1
        out_w = (w - k_w) // stride + 1
        pt = pl = 0
    y = np.zeros((c_out, out_h, out_w))
    for o in range(c_out):
        for i in range(out_h):
            for j in range(out_w):
                acc = 0.0
                for c in range(c_in):
                    for a in range(k_h):
                        for b in range(k_w):
                            r = i * stride + a - pt
                            s = j * stride + b - pl
                            if 0 <= r < h and 0 <= s < w:
                                acc += x[c, r, s] * weights[o, c, a, b]
                y[o, i, j] = acc + bias[o]
    return y


def maxpool_oracle(x, window, stride):
    c, h, w = x.shape
    out_h = (h - window) // stride + 1
    out_w = (w - window) // stride + 1
    y = np.zeros((c, out_h, out_w))
    arg = np.zeros((c, out_h, out_w, 2), dtype=int)
    for ch in range(c):
        for i in range(out_h):
            for j in range(out_w):
                best = -np.inf
                for a in range(window):
                    for b in range(window):
                        v = x[ch, i * stride + a, j * stride + b]
                        if v > best:
                            best = v
                            arg[ch, i, j] = (a, b)
                y[ch, i, j] = best
    return y, arg


def upsample_oracle(x, f):
    c, h, w = x.shape
    y = np.zeros((c, h * f, w * f))
    for ch in range(c):
        for r in range(h * f):
            for s in range(w * f):
                y[ch, r, s] = x[ch, r // f, s // f]
    return y


# ---------------------------------------------------------------------------
# conv2d
# ---------------------------------------------------------------------------

def test_conv_identity_kernel():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(1, 3, 3))
    bank = KernelBank(np.ones((1, 1, 1, 1)), np.zeros(1))
    assert np.array_equal(ops.conv2d(x, bank, 1, "valid"), x)


def test_conv_worked_example():
    x = np.array([[[1, 2, 3], [4, 5, 6], [7, 8, 9]]], dtype=float)
    bank = KernelBank(np.array([[[[1, 0], [0, 1]]]], dtype=float), np.zeros(1))
    expected = conv2d_oracle(x, bank.weights, bank.bias, 1, "valid")
    assert np.array_equal(expected, [[[6, 8], [12, 14]]])
    assert np.array_equal(ops.conv2d(x, bank, 1, "valid"), expected)


def test_conv_zero_input_gives_bias():
    bank = KernelBank(np.ones((3, 2, 2, 2)), np.array([1.5, -2.0, 0.25]))
    y = ops.conv2d(np.zeros((2, 4, 4)), bank, 1, "valid")
    for o, b in enumerate(bank.bias):
        assert np.all(y[o] == b)


def test_conv_matches_bruteforce_on_small_random_suite():
    rng = np.random.default_rng(42)
    cases = 0
    while cases < 1000:
        c_in = int(rng.integers(1, 4))
        c_out = int(rng.integers(1, 4))
        h = int(rng.integers(1, 7))
        w = int(rng.integers(1, 7))
        k_h = int(rng.integers(1, min(h, 4) + 1))
        k_w = int(rng.integers(1, min(w, 4) + 1))
        stride = int(rng.integers(1, 3))
        padding = "same" if rng.integers(2) else "valid"
        x = rng.normal(size=(c_in, h, w))
        bank = KernelBank(rng.normal(size=(c_out, c_in, k_h, k_w)),
                          rng.normal(size=c_out))
        want = conv2d_oracle(x, bank.weights, bank.bias, stride, padding)
        got = ops.conv2d(x, bank, stride, padding)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-12)
        cases += 1


def test_conv_linear_in_input():
    rng = np.random.default_rng(7)
    bank = KernelBank(rng.normal(size=(2, 3, 3, 3)), np.zeros(2))
    x = rng.normal(size=(3, 6, 6))
    y = rng.normal(size=(3, 6, 6))
    lhs = ops.conv2d(2.5 * x - 0.5 * y, bank, 1, "same")
    rhs = 2.5 * ops.conv2d(x, bank, 1, "same") - 0.5 * ops.conv2d(y, bank, 1, "same")
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_conv_rejects_bad_shapes():
    bank = KernelBank(np.ones((1, 2, 2, 2)), np.zeros(1))
    with pytest.raises(ValueError):
        ops.conv2d(np.zeros((3, 4, 4)), bank, 1, "valid")  # channel mismatch
    big = KernelBank(np.ones((1, 1, 5, 5)), np.zeros(1))
    with pytest.raises(ValueError):
        ops.conv2d(np.zeros((1, 3, 3)), big, 1, "valid")  # kernel > input


# ---------------------------------------------------------------------------
# relu
# ---------------------------------------------------------------------------

def test_relu_basic():
    assert np.array_equal(ops.relu(np.array([[-1.0, 0.0, 2.0]])), [[0, 0, 2]])
    assert ops.relu(np.array([[-5.0]])) == 0.0


def test_relu_fixpoint_and_idempotent():
    rng = np.random.default_rng(1)
    x = np.abs(rng.normal(size=(2, 4, 4)))
    assert np.array_equal(ops.relu(x), x)
    y = rng.normal(size=(2, 4, 4))
    assert np.array_equal(ops.relu(ops.relu(y)), ops.relu(y))


def test_relu_backward_all_positive_passthrough():
    rng = np.random.default_rng(2)
    x = np.abs(rng.normal(size=(1, 3, 3))) + 0.1
    gy = rng.normal(size=(1, 3, 3))
    assert np.array_equal(ops.relu_backward(x, gy), gy)


# ---------------------------------------------------------------------------
# maxpool2d
# ---------------------------------------------------------------------------

def test_maxpool_constant():
    x = np.full((2, 4, 4), 3.25)
    y, _ = ops.maxpool2d(x, 2, 2)
    assert np.all(y == 3.25)


def test_maxpool_worked_example():
    x = np.arange(1, 17, dtype=float).reshape(1, 4, 4)
    want, _ = maxpool_oracle(x, 2, 2)
    assert np.array_equal(want, [[[6, 8], [14, 16]]])
    got, _ = ops.maxpool2d(x, 2, 2)
    assert np.array_equal(got, want)


def test_maxpool_window1_identity():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(2, 5, 5))
    y, arg = ops.maxpool2d(x, 1, 1)
    assert np.array_equal(y, x)
    assert np.all(arg == 0)


def test_maxpool_matches_bruteforce_with_ties():
    rng = np.random.default_rng(44)
    for _ in range(1000):
        c = int(rng.integers(1, 3))
        h = int(rng.integers(1, 7))
        w = int(rng.integers(1, 7))
        window = int(rng.integers(1, min(h, w) + 1))
        stride = int(rng.integers(1, 3))
        # small integer values force frequent ties; tie-break must match
        x = rng.integers(0, 3, size=(c, h, w)).astype(float)
        want, want_arg = maxpool_oracle(x, window, stride)
        got, got_arg = ops.maxpool2d(x, window, stride)
        assert np.array_equal(got, want)
        assert np.array_equal(got_arg, want_arg)


def test_maxpool_window_too_large():
    with pytest.raises(ValueError):
        ops.maxpool2d(np.zeros((1, 2, 2)), 3, 1)


def test_maxpool_backward_conserves_gradient_mass():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 6, 6))
    y, arg = ops.maxpool2d(x, 2, 2)
    gy = rng.normal(size=y.shape)
    gx = ops.maxpool2d_backward(arg, gy, x.shape, 2, 2)
    assert gx.shape == x.shape
    assert np.isclose(gx.sum(), gy.sum())


def test_maxpool_backward_routes_to_argmax():
    x = np.array([[[1.0, 2.0], [4.0, 3.0]]])
    y, arg = ops.maxpool2d(x, 2, 2)
    gx = ops.maxpool2d_backward(arg, np.array([[[10.0]]]), x.shape, 2, 2)
    assert np.array_equal(gx, [[[0, 0], [10, 0]]])


# ---------------------------------------------------------------------------
# upsample
# ---------------------------------------------------------------------------

def test_upsample_factor1_identity():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(2, 3, 3))
    assert np.array_equal(ops.upsample_nearest(x, 1), x)


def test_upsample_worked_example():
    x = np.array([[[1.0, 2.0], [3.0, 4.0]]])
    want = upsample_oracle(x, 2)
    assert np.array_equal(
        want[0], [[1, 1, 2, 2], [1, 1, 2, 2], [3, 3, 4, 4], [3, 3, 4, 4]]
    )
    assert np.array_equal(ops.upsample_nearest(x, 2), want)


def test_pool_inverts_upsample():
    rng = np.random.default_rng(8)
    for f in (1, 2, 3):
        x = rng.normal(size=(2, 4, 5))
        up = ops.upsample_nearest(x, f)
        down, _ = ops.maxpool2d(up, f, f)
        assert np.array_equal(down, x)


def test_upsample_backward_block_sum():
    gy = np.ones((1, 4, 4))
    gx = ops.upsample_backward(2, gy)
    assert np.array_equal(gx, np.full((1, 2, 2), 4.0))


def test_upsample_backward_random_blocks():
    rng = np.random.default_rng(9)
    gy = rng.normal(size=(2, 6, 6))
    gx = ops.upsample_backward(3, gy)
    want = np.zeros((2, 2, 2))
    for c in range(2):
        for r in range(6):
            for s in range(6):
                want[c, r // 3, s // 3] += gy[c, r, s]
    np.testing.assert_allclose(gx, want, atol=1e-12)


# ---------------------------------------------------------------------------
# pad / crop
# ---------------------------------------------------------------------------

def test_pad_zero_is_identity():
    rng = np.random.default_rng(10)
    x = rng.normal(size=(1, 3, 3))
    assert np.array_equal(ops.pad(x, 0, 0, 0, 0), x)


def test_pad_center_pixel():
    y = ops.pad(np.array([[[5.0]]]), 1, 1, 1, 1, 0.0)
    want = np.zeros((1, 3, 3))
    want[0, 1, 1] = 5.0
    assert np.array_equal(y, want)


def test_crop_inverts_pad():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(3, 4, 6))
    padded = ops.pad(x, 2, 1, 3, 2, 7.0)
    assert np.array_equal(ops.crop(padded, 2, 1, 3, 2), x)


def test_crop_zero_identity_and_overcrop():
    x = np.ones((1, 3, 3))
    assert np.array_equal(ops.crop(x, 0, 0, 0, 0), x)
    with pytest.raises(ValueError):
        ops.crop(x, 2, 1, 0, 0)


def test_crop_of_padded_constant():
    x = np.full((1, 2, 2), 9.0)
    assert np.array_equal(ops.crop(ops.pad(x, 1, 1, 1, 1, 0.0), 1, 1, 1, 1), x)
