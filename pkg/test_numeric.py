import numpy as np
import pytest

from numeric import functional as F
from numeric.gradcheck import check_parameters, grad_check
from numeric.module import Module
from numeric.rng import derive_seed, make_rng
from numeric.tensor import NonFiniteError, ShapeError, Tape, Tensor, backward, parameter, value_and_grad


def conv_oracle(x, k, stride):
    c_in, height, width = x.shape
    padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    h_out = (height - 1) // stride + 1
    w_out = (width - 1) // stride + 1
    out = np.zeros((k.shape[0], h_out, w_out))
    for o in range(k.shape[0]):
        for i in range(h_out):
            for j in range(w_out):
                window = padded[:, i * stride:i * stride + 3, j * stride:j * stride + 3]
                out[o, i, j] = np.sum(window * k[o])
    return out


# --------------------------------------------------
# matmul
# --------------------------------------------------
def test_matmul_identity_and_scalar():
    b = np.array([[3.0, 4.0], [5.0, 6.0]])
    np.testing.assert_array_equal(F.matmul(np.eye(2), b).data, b)
    assert F.matmul(np.array([[2.0]]), np.array([[7.0]])).item() == 14.0


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(5, 4)), rng.normal(size=(4, 3))
    expected = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            for k in range(4):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(F.matmul(a, b).data, expected, atol=1e-12)


def test_matmul_shape_mismatch_names_both_shapes():
    with pytest.raises(ShapeError, match=r"\(2, 3\).*\(2, 3\)"):
        F.matmul(np.ones((2, 3)), np.ones((2, 3)))


# --------------------------------------------------
# conv2d
# --------------------------------------------------
def test_conv2d_zero_kernel_gives_zeros(rng):
    out = F.conv2d(rng.normal(size=(2, 5, 5)), np.zeros((3, 2, 3, 3)))
    assert out.shape == (3, 5, 5)
    assert not out.data.any()


def test_conv2d_identity_center_kernel():
    x = np.arange(9.0).reshape(1, 3, 3)
    k = np.zeros((1, 1, 3, 3))
    k[0, 0, 1, 1] = 1.0
    np.testing.assert_array_equal(F.conv2d(x, k).data, x)


@pytest.mark.parametrize("stride", [1, 2])
def test_conv2d_matches_sliding_window(rng, stride):
    x, k = rng.normal(size=(2, 8, 8)), rng.normal(size=(4, 2, 3, 3))
    out = F.conv2d(x, k, stride=stride)
    assert out.shape == (4, 8 // stride, 8 // stride)
    np.testing.assert_allclose(out.data, conv_oracle(x, k, stride), atol=1e-12)


def test_conv2d_odd_size_stride2_uses_floor(rng):
    out = F.conv2d(rng.normal(size=(1, 7, 5)), rng.normal(size=(1, 1, 3, 3)), stride=2)
    assert out.shape == (1, 4, 3)


def test_conv2d_rejects_unsupported_stride(rng):
    with pytest.raises(ValueError, match="stride"):
        F.conv2d(rng.normal(size=(1, 4, 4)), rng.normal(size=(1, 1, 3, 3)), stride=3)


# --------------------------------------------------
# softmax, groupnorm, silu
# --------------------------------------------------
def test_softmax_rows_constant_and_large_rows():
    np.testing.assert_allclose(F.softmax_rows(np.zeros((1, 3))).data, [[1 / 3, 1 / 3, 1 / 3]], atol=1e-15)
    out = F.softmax_rows(np.array([[1000.0, 0.0]])).data
    assert np.isfinite(out).all()
    assert out[0, 0] == pytest.approx(1.0)
    assert out[0, 1] == pytest.approx(0.0, abs=1e-300)


def test_softmax_rows_are_probability_vectors(rng):
    out = F.softmax_rows(rng.normal(size=(4, 6)) * 5).data
    np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-12)
    assert (out >= 0).all() and (out <= 1).all()


def test_groupnorm_constant_input_and_zero_gamma(rng):
    c = 4
    out = F.groupnorm(np.full((c, 3, 3), 2.5), 2, np.ones(c), np.zeros(c))
    np.testing.assert_allclose(out.data, 0.0, atol=1e-12)

    beta = rng.normal(size=c)
    out = F.groupnorm(rng.normal(size=(c, 3, 3)), 2, np.zeros(c), beta)
    np.testing.assert_allclose(out.data, np.broadcast_to(beta[:, None, None], (c, 3, 3)), atol=1e-15)


def test_groupnorm_statistics(rng):
    x = rng.normal(loc=3.0, scale=2.0, size=(6, 5, 5))
    out = F.groupnorm(x, 3, np.ones(6), np.zeros(6), eps=1e-12).data.reshape(3, -1)
    assert np.abs(out.mean(axis=1)).max() < 1e-10
    np.testing.assert_allclose(out.var(axis=1), 1.0, atol=1e-6)


def test_groupnorm_rejects_indivisible_channels(rng):
    with pytest.raises(ValueError, match="divisible"):
        F.groupnorm(rng.normal(size=(5, 3, 3)), 2, np.ones(5), np.zeros(5))


def test_silu_values():
    assert F.silu(np.array([0.0])).data[0] == 0.0
    assert F.silu(np.array([40.0])).data[0] == pytest.approx(40.0)


# --------------------------------------------------
# backward and gradient checks
# --------------------------------------------------
def test_backward_sum_and_square(rng):
    x = parameter(rng.normal(size=(3, 4)))
    _, (grad,) = value_and_grad(lambda t: F.reduce_sum(t), x)
    np.testing.assert_array_equal(grad, np.ones((3, 4)))

    _, (grad,) = value_and_grad(lambda t: F.reduce_sum(t * t), x)
    np.testing.assert_allclose(grad, 2 * x.data, atol=1e-15)


def test_backward_rejects_non_scalar():
    x = parameter(np.ones((2, 2)))
    with Tape():
        y = x * 2.0
        with pytest.raises(ShapeError):
            backward(y)


def test_backward_accumulates_until_reset():
    x = parameter(np.ones(3))
    for _ in range(2):
        with Tape():
            backward(F.reduce_sum(x * 3.0))
    np.testing.assert_array_equal(x.grad, np.full(3, 6.0))
    x.zero_grad()
    with Tape():
        backward(F.reduce_sum(x * 3.0))
    np.testing.assert_array_equal(x.grad, np.full(3, 3.0))


def test_shared_input_gradients_add(rng):
    x = parameter(rng.normal(size=4))
    _, (grad,) = value_and_grad(lambda t: F.reduce_sum(t * t + t), x)
    np.testing.assert_allclose(grad, 2 * x.data + 1, atol=1e-15)


def test_non_finite_op_raises():
    with pytest.raises(NonFiniteError):
        Tensor(np.array([1.0])) * np.inf


def test_grad_check_sum_and_softmax(rng):
    x = Tensor(rng.normal(size=(3, 4)))
    report = grad_check(lambda t: F.reduce_sum(t), x)
    assert report.passed and report.max_rel_error < 1e-8

    report = grad_check(lambda t: F.reduce_sum(F.softmax_rows(t)), x)
    assert report.passed


def test_grad_check_reports_non_finite_as_failure():
    report = grad_check(lambda t: F.reduce_sum(t * np.inf), Tensor(np.ones(2)))
    assert not report.passed
    assert report.max_rel_error == float("inf")


def test_grad_check_catches_wrong_rule(rng):
    class BadSquare(F.Function):
        def forward(self, a):
            self.a = a
            return a * a

        def backward(self, grad):
            return (grad * self.a,)

    report = grad_check(lambda t: F.reduce_sum(BadSquare.apply(t)), Tensor(rng.uniform(0.5, 1.0, size=4)))
    assert not report.passed


def test_silu_gradient_matches_central_differences(rng):
    report = grad_check(lambda t: F.reduce_sum(F.silu(t)), Tensor(rng.normal(size=10)), tol=1e-6)
    assert report.passed


@pytest.mark.parametrize("instance", range(10))
def test_conv_and_groupnorm_gradients(instance):
    r = make_rng(7, "conv-groupnorm", instance)
    x = parameter(r.normal(size=(4, 5, 5)))
    k = parameter(r.normal(size=(4, 4, 3, 3)))
    gamma, beta = parameter(r.uniform(0.5, 1.5, size=4)), parameter(r.normal(size=4))
    weights = r.normal(size=(4, 3, 3))

    def loss():
        h = F.groupnorm(F.conv2d(x, k, stride=2), 2, gamma, beta)
        return F.reduce_sum(F.silu(h) * weights)

    assert check_parameters(loss, [x, k, gamma, beta]).passed


def test_determinism_bit_identical(rng):
    x, k = rng.normal(size=(3, 6, 6)), rng.normal(size=(2, 3, 3, 3))
    a = F.softmax_rows(F.reshape(F.conv2d(x, k), (2, 36))).data
    b = F.softmax_rows(F.reshape(F.conv2d(x, k), (2, 36))).data
    assert a.tobytes() == b.tobytes()


def test_matches_torch_autograd(rng):
    torch = pytest.importorskip("torch")
    x_np, k_np = rng.normal(size=(2, 6, 6)), rng.normal(size=(3, 2, 3, 3))
    x, k = parameter(x_np.copy()), parameter(k_np.copy())
    value, (gx, gk) = value_and_grad(lambda a, b: F.reduce_sum(F.silu(F.conv2d(a, b, stride=2))), x, k)

    tx = torch.tensor(x_np[None], requires_grad=True)
    tk = torch.tensor(k_np, requires_grad=True)
    out = torch.nn.functional.silu(torch.nn.functional.conv2d(tx, tk, stride=2, padding=1)).sum()
    out.backward()
    assert value == pytest.approx(out.item(), abs=1e-10)
    np.testing.assert_allclose(gx, tx.grad.numpy()[0], atol=1e-10)
    np.testing.assert_allclose(gk, tk.grad.numpy(), atol=1e-10)


# --------------------------------------------------
# rng and modules
# --------------------------------------------------
def test_make_rng_streams_are_keyed():
    a = make_rng(5, "init", 0).normal(size=4)
    b = make_rng(5, "init", 0).normal(size=4)
    c = make_rng(5, "init", 1).normal(size=4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert derive_seed(5, "x") == derive_seed(5, "x")


def test_make_rng_rejects_negative_keys():
    with pytest.raises(ValueError):
        make_rng(1, -3)


class _Pair(Module):
    def __init__(self):
        self.weight = parameter(np.ones((2, 2)))
        self.children = [_Leaf(), _Leaf()]
        self._cache = parameter(np.zeros(1))


class _Leaf(Module):
    def __init__(self):
        self.bias = parameter(np.zeros(3))


def test_module_state_dict_roundtrip_and_naming():
    m = _Pair()
    names = [name for name, _ in m.named_parameters()]
    assert names == ["weight", "children.0.bias", "children.1.bias"]
    state = m.state_dict()
    state["weight"] = state["weight"] * 3
    m.load_state_dict(state)
    np.testing.assert_array_equal(m.weight.data, np.full((2, 2), 3.0))


def test_module_load_state_dict_is_strict():
    m = _Pair()
    state = m.state_dict()
    del state["weight"]
    with pytest.raises(ValueError, match="missing"):
        m.load_state_dict(state)
    state = _Pair().state_dict()
    state["weight"] = np.ones(3)
    with pytest.raises(ShapeError):
        m.load_state_dict(state)


def test_set_trainable_toggles_requires_grad():
    m = _Pair()
    m.set_trainable(False)
    assert not any(p.requires_grad for p in m.parameters())
