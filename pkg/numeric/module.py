# numeric/module.py

from typing import Any, Dict, Iterator, List, Tuple

import numpy as np

from numeric.tensor import ShapeError, Tensor


class Module:
    """
    Container of trainable tensors.

    Every `Tensor` attribute is a parameter; sub-modules (and lists of them)
    are walked recursively in attribute order, which fixes the parameter
    naming used by checkpoints. Frozen constants are kept as plain numpy
    arrays so they never appear here.
    """

    def forward(self, *args: Any, **kwargs: Any) -> Any:
        raise NotImplementedError(f"{type(self).__name__}.forward is not implemented")

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    def named_parameters(self, prefix: str = "") -> List[Tuple[str, Tensor]]:
        named: List[Tuple[str, Tensor]] = []
        for attr, value in vars(self).items():
            if attr.startswith("_"):
                continue
            full = f"{prefix}{attr}"
            named.extend(_walk(full, value))
        return named

    def parameters(self) -> List[Tensor]:
        return [p for _, p in self.named_parameters()]

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    def set_trainable(self, trainable: bool) -> None:
        for p in self.parameters():
            p.requires_grad = trainable

    def state_dict(self) -> Dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.named_parameters()}

    def load_state_dict(self, state: Dict[str, np.ndarray], strict: bool = True) -> None:
        own = dict(self.named_parameters())
        if strict:
            missing = sorted(set(own) - set(state))
            unexpected = sorted(set(state) - set(own))
            if missing or unexpected:
                raise ValueError(f"state dict mismatch: missing={missing} unexpected={unexpected}")
        for name, array in state.items():
            if name not in own:
                continue
            target = own[name]
            array = np.asarray(array, dtype=np.float64)
            if array.shape != target.shape:
                raise ShapeError(f"parameter {name}: expected shape {target.shape}, got {array.shape}")
            target.data = array.copy()


def _walk(name: str, value: Any) -> Iterator[Tuple[str, Tensor]]:
    if isinstance(value, Tensor):
        yield name, value
    elif isinstance(value, Module):
        yield from value.named_parameters(prefix=f"{name}.")
    elif isinstance(value, (list, tuple)):
        for i, item in enumerate(value):
            yield from _walk(f"{name}.{i}", item)
