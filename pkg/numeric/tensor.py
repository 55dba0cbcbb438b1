# numeric/tensor.py

import contextvars
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[np.ndarray, float, int, Sequence[float]]

_ACTIVE_TAPE: contextvars.ContextVar[Optional["Tape"]] = contextvars.ContextVar("active_tape", default=None)


class ShapeError(ValueError):
    """Raised when operand shapes are incompatible."""


class NonFiniteError(FloatingPointError):
    """Raised when an operation produces NaN or infinite values."""


class Tensor:
    """
    Double-precision array with an optional gradient buffer.

    The data array is treated as immutable once the tensor exists; only
    `grad` (and the parameters an optimizer owns) change afterwards.
    """

    __array_priority__ = 100

    def __init__(self, data: ArrayLike, requires_grad: bool = False, name: Optional[str] = None):
        array = np.array(data, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node_id: Optional[int] = None
        self.tape: Optional["Tape"] = None
        self.name = name

    # ------------------------------------------------------------------
    # basic properties
    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # ------------------------------------------------------------------
    # operators (implemented in numeric.functional)
    # ------------------------------------------------------------------
    def __add__(self, other: Any) -> "Tensor":
        from numeric import functional as F
        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other: Any) -> "Tensor":
        from numeric import functional as F
        return F.add(self, F.neg(as_tensor(other)))

    def __rsub__(self, other: Any) -> "Tensor":
        from numeric import functional as F
        return F.add(F.neg(self), other)

    def __mul__(self, other: Any) -> "Tensor":
        from numeric import functional as F
        return F.mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> "Tensor":
        from numeric import functional as F
        if isinstance(other, Tensor):
            raise TypeError("division by a tensor is not supported; multiply by a constant instead")
        return F.mul(self, 1.0 / float(other))

    def __neg__(self) -> "Tensor":
        from numeric import functional as F
        return F.neg(self)

    def __matmul__(self, other: "Tensor") -> "Tensor":
        from numeric import functional as F
        return F.matmul(self, other)

    def __getitem__(self, index: Any) -> "Tensor":
        from numeric import functional as F
        return F.take(self, index)

    def reshape(self, *shape: int) -> "Tensor":
        from numeric import functional as F
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)

    def permute(self, *axes: int) -> "Tensor":
        from numeric import functional as F
        return F.permute(self, axes)

    @property
    def T(self) -> "Tensor":
        if self.ndim != 2:
            raise ShapeError(f"T is only defined for matrices, got shape {self.shape}")
        return self.permute(1, 0)

    def sum(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from numeric import functional as F
        return F.reduce_sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis: Optional[Union[int, Tuple[int, ...]]] = None, keepdims: bool = False) -> "Tensor":
        from numeric import functional as F
        return F.reduce_mean(self, axis=axis, keepdims=keepdims)

    def abs(self) -> "Tensor":
        from numeric import functional as F
        return F.absolute(self)


def as_tensor(value: Any) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def parameter(data: ArrayLike, name: Optional[str] = None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


# ----------------------------------------------------------------------
# differentiable functions
# ----------------------------------------------------------------------
class Function:
    """
    Base class for differentiable operations.

    Subclasses implement `forward` on raw arrays and `backward`, which maps the
    gradient w.r.t. the output to one gradient per input (None when an input
    needs none). `apply` runs the forward pass and records the backward rule on
    the active tape whenever an input requires a gradient.
    """

    def forward(self, *arrays: np.ndarray, **kwargs: Any) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__}.forward is not implemented")

    def backward(self, grad: np.ndarray) -> Tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError(f"{type(self).__name__}.backward is not implemented")

    @classmethod
    def apply(cls, *inputs: Any, **kwargs: Any) -> Tensor:
        tensors = [as_tensor(x) for x in inputs]
        fn = cls()
        out_data = fn.forward(*(t.data for t in tensors), **kwargs)
        if not np.all(np.isfinite(out_data)):
            raise NonFiniteError(f"{cls.__name__} produced non-finite values")

        requires_grad = any(t.requires_grad for t in tensors)
        out = Tensor(out_data, requires_grad=requires_grad)
        tape = _ACTIVE_TAPE.get()
        if requires_grad and tape is not None:
            tape.record(fn, tensors, out)
        return out


@dataclass
class TapeRecord:
    fn: Function
    inputs: List[Tensor]
    input_ids: List[int]
    output: Tensor
    output_id: int


@dataclass
class Tape:
    """
    Ordered record of executed operations.

    Records are appended in execution order, so every input id precedes its
    consumer and a reverse sweep visits each node once. Use as a context
    manager; operations only record while a tape is active.
    """

    records: List[TapeRecord] = field(default_factory=list)
    _ids: dict = field(default_factory=dict)
    _next_id: int = 0
    _token: Any = None

    def __enter__(self) -> "Tape":
        self._token = _ACTIVE_TAPE.set(self)
        return self

    def __exit__(self, *exc: Any) -> None:
        _ACTIVE_TAPE.reset(self._token)
        self._token = None

    def node_of(self, tensor: Tensor) -> int:
        key = id(tensor)
        if key not in self._ids:
            self._ids[key] = self._next_id
            self._next_id += 1
        tensor.node_id = self._ids[key]
        tensor.tape = self
        return self._ids[key]

    def record(self, fn: Function, inputs: List[Tensor], output: Tensor) -> None:
        input_ids = [self.node_of(t) for t in inputs]
        output_id = self.node_of(output)
        self.records.append(TapeRecord(fn, inputs, input_ids, output, output_id))

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, output: Tensor) -> None:
        if output.size != 1:
            raise ShapeError(f"backward() needs a scalar output, got shape {output.shape}")
        if output.tape is not self or output.node_id is None:
            raise ValueError("output was not produced on this tape")

        grads = {output.node_id: np.ones_like(output.data)}
        tensors = {output.node_id: output}
        for rec in reversed(self.records):
            g_out = grads.get(rec.output_id)
            if g_out is None:
                continue
            in_grads = rec.fn.backward(g_out)
            for tensor, tid, g in zip(rec.inputs, rec.input_ids, in_grads):
                if g is None or not tensor.requires_grad:
                    continue
                tensors[tid] = tensor
                if tid in grads:
                    grads[tid] = grads[tid] + g
                else:
                    grads[tid] = g

        # accumulate into the buffers; callers reset with zero_grad() first
        for tid, g in grads.items():
            tensor = tensors[tid]
            if tensor.grad is None:
                tensor.grad = np.array(g, dtype=np.float64).reshape(tensor.shape)
            else:
                tensor.grad = tensor.grad + g.reshape(tensor.shape)


def active_tape() -> Optional[Tape]:
    return _ACTIVE_TAPE.get()


def backward(output: Tensor) -> None:
    """
    Populate `.grad` of every tensor that requires a gradient and contributes
    to the scalar `output`.

    Gradients accumulate across calls; reset with `zero_grad` between
    independent backward passes.
    """
    if output.size != 1:
        raise ShapeError(f"backward() needs a scalar output, got shape {output.shape}")
    if output.tape is None:
        raise ValueError("output is not reachable from a tape (run the forward pass inside `with Tape():`)")
    output.tape.backward(output)


def zero_grad(tensors: Sequence[Tensor]) -> None:
    for t in tensors:
        t.zero_grad()


def value_and_grad(fn: Callable[..., Tensor], *params: Tensor) -> Tuple[float, List[np.ndarray]]:
    """Evaluate a scalar function on a fresh tape and return its gradients."""
    zero_grad(params)
    with Tape():
        out = fn(*params)
        backward(out)
    return out.item(), [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
