"""Autodiff core: gradient oracles, shape inference, optimizer behavior.

Every op is checked against central finite differences (the independent
oracle); convolution values additionally against a quadruple-loop summation.
"""

import numpy as np
import pytest

from dmsc.optim import Adam
from dmsc.tensor import (
    Tensor,
    concat_channels,
    conv_output_size,
    deconv_output_size,
    elementwise_max,
    elementwise_sum,
    grad_check,
)

TOL = 1e-4  # relative, per the finite-difference contract


def away_from_kinks(rng, shape, margin=0.2):
    # keep coordinates at least `margin` away from 0 so relu/|.| kinks
    # cannot poison the central difference (margin >> 10*h for h=1e-5)
    x = rng.normal(size=shape)
    return x + np.sign(x) * margin


# -- value oracles ---------------------------------------------------------------


def conv2d_loops(x, k, stride):
    """Direct quadruple-loop SAME convolution, the value oracle for conv2d."""
    n, h, w, cin = x.shape
    kh, kw, _, cout = k.shape
    ho = -(-h // stride)
    wo = -(-w // stride)
    pad_h = max((ho - 1) * stride + kh - h, 0)
    pad_w = max((wo - 1) * stride + kw - w, 0)
    top, left = pad_h // 2, pad_w // 2
    xp = np.zeros((n, h + pad_h, w + pad_w, cin))
    xp[:, top : top + h, left : left + w, :] = x
    out = np.zeros((n, ho, wo, cout))
    for b in range(n):
        for i in range(ho):
            for j in range(wo):
                patch = xp[b, i * stride : i * stride + kh, j * stride : j * stride + kw, :]
                for co in range(cout):
                    out[b, i, j, co] = np.sum(patch * k[:, :, :, co])
    return out


def test_conv2d_matches_loop_oracle():
    rng = np.random.default_rng(0)
    for trial in range(6):
        h = int(rng.integers(3, 9))
        stride = int(rng.integers(1, 3))
        x = rng.normal(size=(2, h, h, 3))
        k = rng.normal(size=(3, 3, 3, 4))
        got = Tensor(x).conv2d(Tensor(k), stride).data
        want = conv2d_loops(x, k, stride)
        assert np.allclose(got, want, atol=1e-12), (h, stride)


def test_conv2d_hand_example():
    # 2x2 input [[1,2],[3,4]], all-ones 2x2 kernel, stride 1: the output cell
    # whose window covers the whole input sums to 10
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 2, 2, 1)
    k = np.ones((2, 2, 1, 1))
    out = Tensor(x).conv2d(Tensor(k), 1).data
    assert out.shape == (1, 2, 2, 1)
    assert 10.0 in out  # the fully-covered window


def test_conv2d_identity_kernel():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(1, 4, 4, 1))
    k = np.ones((1, 1, 1, 1))
    out = Tensor(x).conv2d(Tensor(k), 1).data
    assert np.array_equal(out, x)


def test_deconv2d_identity_kernel():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(1, 4, 4, 1))
    k = np.ones((1, 1, 1, 1))
    out = Tensor(x).deconv2d(Tensor(k), 1).data
    assert np.allclose(out, x, atol=1e-15)


def test_yaleb_encoder_shape():
    # 32x32x1 through a 5x5 stride-2 conv -> 16x16x10
    rng = np.random.default_rng(3)
    x = rng.normal(size=(1, 32, 32, 1))
    k = rng.normal(size=(5, 5, 1, 10))
    assert Tensor(x).conv2d(Tensor(k), 2).shape == (1, 16, 16, 10)


# -- shape inference -------------------------------------------------------------


def test_shape_inference_all_sizes():
    for size in range(1, 65):
        for stride in (1, 2):
            out = conv_output_size(size, stride)
            assert out == -(-size // stride)
            assert deconv_output_size(out, stride) == out * stride


def test_conv_deconv_shape_round_trip():
    rng = np.random.default_rng(4)
    for size in range(1, 9):
        for stride in (1, 2):
            x = rng.normal(size=(1, size, size, 2))
            k = rng.normal(size=(3, 3, 2, 5))
            z = Tensor(x).conv2d(Tensor(k), stride)
            kd = rng.normal(size=(3, 3, 2, 5))  # (kh,kw,dout,din) back to 2 channels
            back = z.deconv2d(Tensor(kd), stride)
            assert back.shape[1] == z.shape[1] * stride
            assert back.shape[2] == z.shape[2] * stride
            assert back.shape[3] == 2


def test_deconv_is_exact_conv_adjoint():
    # <conv(x,k), y> == <x, deconv(y,k)>: the same kernel array serves both
    # ops because conv reads (kh,kw,din,dout) and deconv (kh,kw,dout,din).
    rng = np.random.default_rng(5)
    for stride in (1, 2):
        for h in (4, 6, 8):
            x = rng.normal(size=(2, h, h, 3))
            k = rng.normal(size=(3, 3, 3, 5))
            cx = Tensor(x).conv2d(Tensor(k), stride)
            y = rng.normal(size=cx.shape)
            lhs = np.vdot(cx.data, y)
            rhs = np.vdot(x, Tensor(y).deconv2d(Tensor(k), stride).data)
            assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_conv2d_linearity():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(1, 6, 6, 2))
    y = rng.normal(size=(1, 6, 6, 2))
    k = Tensor(rng.normal(size=(3, 3, 2, 3)))
    a, b = 1.7, -0.4
    combined = Tensor(a * x + b * y).conv2d(k, 2).data
    separate = a * Tensor(x).conv2d(k, 2).data + b * Tensor(y).conv2d(k, 2).data
    assert np.allclose(combined, separate, atol=1e-12)


# -- gradient oracles ------------------------------------------------------------


def test_conv2d_gradients():
    rng = np.random.default_rng(7)
    for stride in (1, 2):
        x = rng.normal(size=(2, 5, 5, 3))
        k = rng.normal(size=(3, 3, 3, 4))

        def f(x, k, stride=stride):
            return x.conv2d(k, stride).frob2()

        assert grad_check(f, {"x": x, "k": k}, sample=40, seed=stride) < TOL


def test_deconv2d_gradients():
    rng = np.random.default_rng(8)
    for stride in (1, 2):
        x = rng.normal(size=(2, 4, 4, 4))
        k = rng.normal(size=(3, 3, 2, 4))

        def f(x, k, stride=stride):
            return x.deconv2d(k, stride).frob2()

        assert grad_check(f, {"x": x, "k": k}, sample=40, seed=stride) < TOL


def test_matmul_relu_chain_gradients():
    rng = np.random.default_rng(9)
    x = away_from_kinks(rng, (6, 5))
    w = rng.normal(size=(5, 4))

    def f(x, w):
        return x.matmul(w).relu().frob2()

    assert grad_check(f, {"x": x, "w": w}, seed=0) < TOL


def test_add_sub_scale_gradients():
    rng = np.random.default_rng(10)
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(4, 3))

    def f(a, b):
        return ((a + b) - (b * 0.3)).frob2()

    assert grad_check(f, {"a": a, "b": b}, seed=0) < TOL


def test_transpose_reshape_sum_gradients():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(3, 8))

    def f(x):
        return x.T.reshape((4, 6)).sum()

    assert grad_check(f, {"x": x}, seed=0) < TOL


def test_sum_gradient_is_ones():
    rng = np.random.default_rng(12)
    x = Tensor(rng.normal(size=(3, 4)))
    x.sum().backward()
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_frob2_gradient_is_2x():
    rng = np.random.default_rng(13)
    x = Tensor(rng.normal(size=(5, 2)))
    x.frob2().backward()
    assert np.allclose(x.grad, 2 * x.data, atol=1e-14)


def test_pnorm_gradients_all_exponents():
    rng = np.random.default_rng(14)
    x = away_from_kinks(rng, (5, 5), margin=0.5)
    for p in (0.3, 1.0, 1.5, 2.0):

        def f(x, p=p):
            return x.pnorm(p)

        assert grad_check(f, {"x": x}, seed=0) < TOL, p


def test_pnorm_values():
    z = Tensor(np.zeros((3, 3)))
    for p in (0.3, 1.0, 1.5, 2.0):
        assert z.pnorm(p).item() == 0.0
    single = np.zeros((2, 2))
    single[0, 1] = 3.0
    assert Tensor(single).pnorm(2.0).item() == pytest.approx(3.0, abs=1e-12)
    tri = np.array([[1.0, -2.0], [2.0, 0.0]])
    assert Tensor(tri).pnorm(1.0).item() == pytest.approx(5.0, abs=1e-12)
    # p=2 equals the Frobenius norm
    rng = np.random.default_rng(15)
    m = rng.normal(size=(6, 6))
    assert Tensor(m).pnorm(2.0).item() == pytest.approx(
        np.linalg.norm(m), abs=1e-12
    )


def test_pnorm_rejects_nonpositive_p():
    with pytest.raises(ValueError):
        Tensor(np.ones((2, 2))).pnorm(0.0)


def test_fusion_op_gradients():
    rng = np.random.default_rng(16)
    a = rng.normal(size=(2, 3, 3, 2))
    b = rng.normal(size=(2, 3, 3, 2))

    def fcat(a, b):
        return concat_channels([a, b]).frob2()

    def fsum(a, b):
        return elementwise_sum([a, b]).frob2()

    assert grad_check(fcat, {"a": a, "b": b}, seed=0) < TOL
    assert grad_check(fsum, {"a": a, "b": b}, seed=0) < TOL
    # keep max inputs separated so no coordinate is tied
    d = a + 0.5 * np.sign(rng.normal(size=a.shape))

    def fmax(a, d):
        return elementwise_max([a, d]).frob2()

    assert grad_check(fmax, {"a": a, "d": d}, seed=0) < TOL


def test_max_fusion_tie_routes_to_first_input():
    x = np.ones((1, 2, 2, 1))
    a, b = Tensor(x.copy()), Tensor(x.copy())
    elementwise_max([a, b]).sum().backward()
    assert np.array_equal(a.grad, np.ones_like(x))
    assert b.grad is None or np.array_equal(b.grad, np.zeros_like(x))


def test_relu_subgradient_zero_at_kink():
    x = Tensor(np.array([[0.0, -1.0, 2.0]]))
    x.relu().sum().backward()
    assert np.array_equal(x.grad, np.array([[0.0, 0.0, 1.0]]))


def test_backward_rejects_nonscalar():
    x = Tensor(np.ones((2, 2)))
    with pytest.raises(ValueError):
        (x + x).backward()


def test_reused_node_accumulates_gradient():
    x = Tensor(np.array([[1.5]]))
    y = (x + x).frob2()  # y = (2x)^2, dy/dx = 8x = 12
    y.backward()
    assert np.allclose(x.grad, [[12.0]])


def test_shape_errors_name_both_shapes():
    x = Tensor(np.ones((1, 4, 4, 2)))
    k = Tensor(np.ones((3, 3, 5, 4)))
    with pytest.raises(ValueError, match="channel mismatch"):
        x.conv2d(k, 1)
    with pytest.raises(ValueError, match="channel mismatch"):
        x.deconv2d(Tensor(np.ones((3, 3, 4, 5))), 1)
    with pytest.raises(ValueError, match="shapes disagree"):
        Tensor(np.ones((2, 3))) + Tensor(np.ones((3, 2)))


# -- optimizer -------------------------------------------------------------------


def test_adam_zero_gradient_is_fixed_point():
    rng = np.random.default_rng(17)
    w = Tensor(rng.normal(size=(3, 3)), name="w")
    before = w.data.copy()
    opt = Adam({"w": w})
    w.grad = np.zeros((3, 3))
    opt.step()
    assert np.array_equal(w.data, before)
    assert opt.step_count == 1


def test_adam_none_gradient_treated_as_zero():
    w = Tensor(np.ones((2, 2)), name="w")
    opt = Adam({"w": w})
    w.grad = None
    opt.step()
    assert np.array_equal(w.data, np.ones((2, 2)))


def test_adam_first_step_magnitude():
    # bias-corrected first step is lr * g/|g| elementwise (up to eps), so the
    # update magnitude is ~lr regardless of gradient scale
    for scale in (1e-4, 1.0, 1e6):
        w = Tensor(np.zeros((4,)), name="w")
        opt = Adam({"w": w}, lr=1e-3)
        w.grad = np.full((4,), scale)
        opt.step()
        assert np.allclose(np.abs(w.data), 1e-3, rtol=1e-3)


def test_adam_aborts_on_nonfinite_gradient():
    w = Tensor(np.ones((2,)), name="enc_k1")
    opt = Adam({"enc_k1": w})
    w.grad = np.array([np.nan, 0.0])
    with pytest.raises(FloatingPointError, match="enc_k1"):
        opt.step()


def test_adam_converges_on_quadratic():
    # minimize |w - 3|^2; a few hundred steps should land close
    w = Tensor(np.zeros((1,)), name="w")
    opt = Adam({"w": w}, lr=0.05)
    for _ in range(400):
        w.grad = 2.0 * (w.data - 3.0)
        opt.step()
    assert abs(float(w.data[0]) - 3.0) < 1e-3


def test_grad_check_quadratic_is_tight():
    rng = np.random.default_rng(18)
    x = rng.normal(size=(4, 4))

    def f(x):
        return x.frob2()

    assert grad_check(f, {"x": x}, seed=0) < 1e-6
