# numeric/functional.py

from typing import Any, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from numeric.tensor import Function, ShapeError, Tensor, as_tensor

Axis = Optional[Union[int, Tuple[int, ...]]]


def unbroadcast(grad: np.ndarray, to_shape: Tuple[int, ...]) -> np.ndarray:
    """Sum out broadcast dimensions so `grad` matches `to_shape`."""
    if grad.shape == to_shape:
        return grad
    while grad.ndim > len(to_shape):
        grad = grad.sum(axis=0)
    for dim, extent in enumerate(to_shape):
        if extent == 1 and grad.shape[dim] != 1:
            grad = grad.sum(axis=dim, keepdims=True)
    return grad.reshape(to_shape)


# ----------------------------------------------------------------------
# elementwise
# ----------------------------------------------------------------------
class Add(Function):
    def forward(self, a, b):
        self.a_shape, self.b_shape = a.shape, b.shape
        try:
            return a + b
        except ValueError:
            raise ShapeError(f"cannot broadcast shapes {a.shape} and {b.shape}") from None

    def backward(self, grad):
        return unbroadcast(grad, self.a_shape), unbroadcast(grad, self.b_shape)


class Mul(Function):
    def forward(self, a, b):
        self.a, self.b = a, b
        try:
            return a * b
        except ValueError:
            raise ShapeError(f"cannot broadcast shapes {a.shape} and {b.shape}") from None

    def backward(self, grad):
        return unbroadcast(grad * self.b, self.a.shape), unbroadcast(grad * self.a, self.b.shape)


class Neg(Function):
    def forward(self, a):
        return -a

    def backward(self, grad):
        return (-grad,)


class Abs(Function):
    def forward(self, a):
        self.sign = np.sign(a)
        return np.abs(a)

    def backward(self, grad):
        return (grad * self.sign,)


class Square(Function):
    def forward(self, a):
        self.a = a
        return a * a

    def backward(self, grad):
        return (2.0 * self.a * grad,)


class Tanh(Function):
    def forward(self, a):
        self.y = np.tanh(a)
        return self.y

    def backward(self, grad):
        return (grad * (1.0 - self.y * self.y),)


class SiLU(Function):
    def forward(self, a):
        self.a = a
        self.sig = expit(a)
        return a * self.sig

    def backward(self, grad):
        return (grad * (self.sig + self.a * self.sig * (1.0 - self.sig)),)


def add(a: Any, b: Any) -> Tensor:
    return Add.apply(a, b)


def mul(a: Any, b: Any) -> Tensor:
    return Mul.apply(a, b)


def neg(a: Any) -> Tensor:
    return Neg.apply(a)


def absolute(a: Any) -> Tensor:
    return Abs.apply(a)


def square(a: Any) -> Tensor:
    return Square.apply(a)


def tanh(a: Any) -> Tensor:
    return Tanh.apply(a)


def silu(x: Any) -> Tensor:
    """Sigmoid-weighted linear unit, x * sigmoid(x)."""
    return SiLU.apply(x)


# ----------------------------------------------------------------------
# shape manipulation
# ----------------------------------------------------------------------
class Reshape(Function):
    def forward(self, a, shape):
        self.in_shape = a.shape
        try:
            return a.reshape(shape)
        except ValueError:
            raise ShapeError(f"cannot reshape {a.shape} into {tuple(shape)}") from None

    def backward(self, grad):
        return (grad.reshape(self.in_shape),)


class Permute(Function):
    def forward(self, a, axes):
        if sorted(axes) != list(range(a.ndim)):
            raise ShapeError(f"invalid permutation {tuple(axes)} for shape {a.shape}")
        self.inverse = tuple(np.argsort(axes))
        return np.ascontiguousarray(np.transpose(a, axes))

    def backward(self, grad):
        return (np.transpose(grad, self.inverse),)


class Take(Function):
    """Basic (slice/integer) indexing."""

    def forward(self, a, index):
        self.in_shape = a.shape
        self.index = index
        return np.array(a[index], dtype=np.float64)

    def backward(self, grad):
        full = np.zeros(self.in_shape)
        np.add.at(full, self.index, grad.reshape(full[self.index].shape))
        return (full,)


class Concat(Function):
    def forward(self, *arrays, axis=0):
        self.axis = axis
        self.splits = np.cumsum([a.shape[axis] for a in arrays])[:-1]
        try:
            return np.concatenate(arrays, axis=axis)
        except ValueError:
            shapes = [a.shape for a in arrays]
            raise ShapeError(f"cannot concatenate shapes {shapes} along axis {axis}") from None

    def backward(self, grad):
        return tuple(np.split(grad, self.splits, axis=self.axis))


def reshape(a: Any, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def permute(a: Any, axes: Sequence[int]) -> Tensor:
    return Permute.apply(a, axes=tuple(axes))


def take(a: Any, index: Any) -> Tensor:
    return Take.apply(a, index=index)


def concat(tensors: Sequence[Any], axis: int = 0) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


# ----------------------------------------------------------------------
# reductions
# ----------------------------------------------------------------------
class ReduceSum(Function):
    def forward(self, a, axis=None, keepdims=False):
        self.in_shape, self.axis, self.keepdims = a.shape, axis, keepdims
        return np.sum(a, axis=axis, keepdims=keepdims)

    def backward(self, grad):
        if self.axis is None:
            return (np.full(self.in_shape, grad.reshape(-1)[0]),)
        if not self.keepdims:
            grad = np.expand_dims(grad.reshape(_reduced_shape(self.in_shape, self.axis)), self.axis)
        return (np.broadcast_to(grad, self.in_shape).copy(),)


def _reduced_shape(shape: Tuple[int, ...], axis: Union[int, Tuple[int, ...]]) -> Tuple[int, ...]:
    axes = (axis,) if isinstance(axis, int) else axis
    axes = tuple(a % len(shape) for a in axes)
    return tuple(n for i, n in enumerate(shape) if i not in axes)


def reduce_sum(a: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    return ReduceSum.apply(a, axis=axis, keepdims=keepdims)


def reduce_mean(a: Any, axis: Axis = None, keepdims: bool = False) -> Tensor:
    a = as_tensor(a)
    if axis is None:
        count = a.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        count = int(np.prod([a.shape[ax] for ax in axes]))
    return reduce_sum(a, axis=axis, keepdims=keepdims) * (1.0 / count)


# ----------------------------------------------------------------------
# linear algebra
# ----------------------------------------------------------------------
class MatMul(Function):
    def forward(self, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise ShapeError(f"matmul shape mismatch: {a.shape} @ {b.shape}")
        self.a, self.b = a, b
        return a @ b

    def backward(self, grad):
        return grad @ self.b.T, self.a.T @ grad


def matmul(a: Any, b: Any) -> Tensor:
    """Matrix product of an m×k and a k×n tensor."""
    return MatMul.apply(a, b)


class SoftmaxRows(Function):
    def forward(self, x):
        if x.ndim != 2:
            raise ShapeError(f"softmax_rows expects a matrix, got shape {x.shape}")
        shifted = x - x.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        self.y = e / e.sum(axis=1, keepdims=True)
        return self.y

    def backward(self, grad):
        y = self.y
        return (y * (grad - np.sum(grad * y, axis=1, keepdims=True)),)


def softmax_rows(x: Any) -> Tensor:
    """Row-wise softmax with per-row max subtraction."""
    return SoftmaxRows.apply(x)


# ----------------------------------------------------------------------
# convolution
# ----------------------------------------------------------------------
class Conv2d(Function):
    """3×3 convolution, padding 1, stride 1 or 2, on c_in×H×W inputs."""

    def forward(self, x, kernel, stride=1):
        if stride not in (1, 2):
            raise ValueError(f"unsupported stride {stride}; expected 1 or 2")
        if x.ndim != 3:
            raise ShapeError(f"conv2d expects c_in×H×W input, got shape {x.shape}")
        if kernel.ndim != 4 or kernel.shape[2:] != (3, 3) or kernel.shape[1] != x.shape[0]:
            raise ShapeError(f"conv2d kernel {kernel.shape} does not fit input {x.shape}")
        c_in, height, width = x.shape
        if height < 3 or width < 3:
            raise ShapeError(f"conv2d needs H, W >= 3, got {x.shape}")

        h_out = (height + 2 - 3) // stride + 1
        w_out = (width + 2 - 3) // stride + 1
        padded = np.pad(x, ((0, 0), (1, 1), (1, 1)))
        cols = np.empty((c_in, 3, 3, h_out, w_out))
        for i in range(3):
            for j in range(3):
                cols[:, i, j] = padded[:, i:i + stride * h_out:stride, j:j + stride * w_out:stride]

        self.x_shape, self.stride = x.shape, stride
        self.kernel = kernel
        self.cols = cols.reshape(c_in * 9, h_out * w_out)
        out = kernel.reshape(kernel.shape[0], -1) @ self.cols
        return out.reshape(kernel.shape[0], h_out, w_out)

    def backward(self, grad):
        c_out = self.kernel.shape[0]
        c_in, height, width = self.x_shape
        h_out, w_out = grad.shape[1:]
        s = self.stride
        g = grad.reshape(c_out, -1)

        g_kernel = (g @ self.cols.T).reshape(self.kernel.shape)
        g_cols = (self.kernel.reshape(c_out, -1).T @ g).reshape(c_in, 3, 3, h_out, w_out)
        g_padded = np.zeros((c_in, height + 2, width + 2))
        for i in range(3):
            for j in range(3):
                g_padded[:, i:i + s * h_out:s, j:j + s * w_out:s] += g_cols[:, i, j]
        return g_padded[:, 1:-1, 1:-1], g_kernel


def conv2d(x: Any, kernel: Any, stride: int = 1, padding: int = 1) -> Tensor:
    if padding != 1:
        raise ValueError(f"unsupported padding {padding}; only padding=1 is implemented")
    return Conv2d.apply(x, kernel, stride=stride)


class Upsample2x(Function):
    """Nearest-neighbour 2× upsampling of a c×H×W map."""

    def forward(self, x):
        if x.ndim != 3:
            raise ShapeError(f"upsample expects c×H×W, got {x.shape}")
        return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)

    def backward(self, grad):
        c, h2, w2 = grad.shape
        return (grad.reshape(c, h2 // 2, 2, w2 // 2, 2).sum(axis=(2, 4)),)


def upsample_nearest2x(x: Any) -> Tensor:
    return Upsample2x.apply(x)


# ----------------------------------------------------------------------
# normalization
# ----------------------------------------------------------------------
class GroupNorm(Function):
    def forward(self, x, gamma, beta, groups=8, eps=1e-5):
        if x.ndim != 3:
            raise ShapeError(f"groupnorm expects c×H×W, got {x.shape}")
        c = x.shape[0]
        if c % groups != 0:
            raise ValueError(f"channels ({c}) must be divisible by groups ({groups})")
        if gamma.shape != (c,) or beta.shape != (c,):
            raise ShapeError(f"gamma {gamma.shape} / beta {beta.shape} must have shape ({c},)")

        xg = x.reshape(groups, -1)
        mu = xg.mean(axis=1, keepdims=True)
        centered = xg - mu
        var = np.mean(centered * centered, axis=1, keepdims=True)
        self.inv_std = 1.0 / np.sqrt(var + eps)
        self.xhat = (centered * self.inv_std).reshape(x.shape)
        self.gamma, self.groups = gamma, groups
        return gamma[:, None, None] * self.xhat + beta[:, None, None]

    def backward(self, grad):
        g_gamma = np.sum(grad * self.xhat, axis=(1, 2))
        g_beta = np.sum(grad, axis=(1, 2))

        dxhat = (grad * self.gamma[:, None, None]).reshape(self.groups, -1)
        xhat = self.xhat.reshape(self.groups, -1)
        n = xhat.shape[1]
        dx = (self.inv_std / n) * (
            n * dxhat - dxhat.sum(axis=1, keepdims=True) - xhat * np.sum(dxhat * xhat, axis=1, keepdims=True)
        )
        return dx.reshape(grad.shape), g_gamma, g_beta


def groupnorm(x: Any, groups: int, gamma: Any, beta: Any, eps: float = 1e-5) -> Tensor:
    """Group normalization of a c×H×W map followed by a per-channel affine map."""
    return GroupNorm.apply(x, gamma, beta, groups=groups, eps=eps)
