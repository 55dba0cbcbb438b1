# numeric/gradcheck.py

import logging
from typing import Callable, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from numeric.tensor import NonFiniteError, Tape, Tensor, backward, parameter, zero_grad

logger = logging.getLogger(__name__)


class GradCheckReport(BaseModel):
    """Outcome of comparing analytic and central-difference gradients."""
    name: str = ""
    passed: bool
    max_rel_error: float
    n_checked: int
    worst_param: Optional[str] = None
    worst_index: Optional[List[int]] = None
    message: str = ""


def _pick_coords(shape, max_coords: Optional[int], rng: Optional[np.random.Generator]) -> List[tuple]:
    size = int(np.prod(shape))
    if max_coords is None or size <= max_coords:
        flat = np.arange(size)
    else:
        rng = rng if rng is not None else np.random.default_rng(0)
        flat = np.sort(rng.choice(size, size=max_coords, replace=False))
    return [tuple(int(i) for i in np.unravel_index(k, shape)) for k in flat]


def check_parameters(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Tensor],
    h: float = 1e-5,
    tol: float = 1e-4,
    atol: float = 1e-6,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    name: str = "",
) -> GradCheckReport:
    """
    Check d loss / d param for every parameter tensor.

    The relative error of a coordinate is |a - n| / max(|a|, |n|, atol), so
    gradients that are zero up to round-off pass on their absolute error.
    Parameters are perturbed in place and restored afterwards. With
    `max_coords`, a random subset of coordinates is checked per parameter.
    """
    try:
        zero_grad(params)
        with Tape():
            loss = loss_fn()
            backward(loss)
        if not np.isfinite(loss.item()):
            raise NonFiniteError("loss is not finite")
    except NonFiniteError as exc:
        return GradCheckReport(name=name, passed=False, max_rel_error=float("inf"), n_checked=0, message=str(exc))

    worst = (0.0, None, None)
    n_checked = 0
    for p_idx, p in enumerate(params):
        analytic = p.grad if p.grad is not None else np.zeros_like(p.data)
        label = p.name or f"param{p_idx}"
        for idx in _pick_coords(p.shape, max_coords, rng):
            original = p.data[idx]
            try:
                p.data[idx] = original + h
                f_plus = loss_fn().item()
                p.data[idx] = original - h
                f_minus = loss_fn().item()
            except NonFiniteError as exc:
                return GradCheckReport(
                    name=name, passed=False, max_rel_error=float("inf"), n_checked=n_checked,
                    worst_param=label, worst_index=list(idx), message=str(exc),
                )
            finally:
                p.data[idx] = original

            numeric = (f_plus - f_minus) / (2.0 * h)
            a = float(analytic[idx])
            if not np.isfinite(numeric):
                return GradCheckReport(
                    name=name, passed=False, max_rel_error=float("inf"), n_checked=n_checked,
                    worst_param=label, worst_index=list(idx), message="non-finite finite difference",
                )
            err = abs(a - numeric) / max(abs(a), abs(numeric), atol)
            n_checked += 1
            if err > worst[0]:
                worst = (err, label, list(idx))

    passed = worst[0] < tol
    if not passed:
        logger.warning("gradient check %s failed: rel. error %.3e at %s%s", name, worst[0], worst[1], worst[2])
    return GradCheckReport(
        name=name, passed=passed, max_rel_error=worst[0], n_checked=n_checked,
        worst_param=worst[1], worst_index=worst[2],
    )


def grad_check(
    f: Callable[[Tensor], Tensor],
    x: Tensor,
    h: float = 1e-5,
    tol: float = 1e-4,
    atol: float = 1e-6,
    max_coords: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    name: str = "",
) -> GradCheckReport:
    """Central-difference check of a scalar tensor function at `x`."""
    xp = parameter(np.array(x.data if isinstance(x, Tensor) else x, dtype=np.float64), name="x")
    return check_parameters(lambda: f(xp), [xp], h=h, tol=tol, atol=atol, max_coords=max_coords, rng=rng, name=name)
