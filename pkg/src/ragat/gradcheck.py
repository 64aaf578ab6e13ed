"""Central finite-difference verification of tape gradients.

The analytic side runs through the float64 tape.  The numeric side
re-evaluates the objective with the parameters promoted to
``np.longdouble`` (80-bit extended on x86-64), which keeps round-off in
``f(θ+eps) - f(θ-eps)`` far below the size of small true gradients.
"""

from __future__ import annotations

from typing import Callable, Mapping

import numpy as np

from .errors import NumericError
from .tensor import Tensor, backward, no_grad, watch_kinks

EXTENDED = np.longdouble


def _named(params) -> Mapping[str, Tensor]:
    if hasattr(params, "named"):
        return params.named()
    if isinstance(params, Mapping):
        return params
    return {f"p{i}": p for i, p in enumerate(params)}


def grad_check(
    f: Callable[[], Tensor],
    params,
    eps: float = 1e-5,
    skip: Callable[[str, tuple], bool] | None = None,
) -> float:
    """Compare analytic gradients of ``f`` against central differences.

    ``f`` takes no arguments and closes over ``params``, which are perturbed
    in place one entry at a time.  Returns the maximum relative error
    ``|a - n| / max(|a|, |n|, 1e-8)`` over every checked entry.  ``skip``
    may exclude entries by (name, index).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    named = _named(params)
    for p in named.values():
        p.grad = None
    backward(f())
    analytic = {name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data)) for name, p in named.items()}
    originals = {name: p.data for name, p in named.items()}

    worst = 0.0
    try:
        for p in named.values():
            p.data = p.data.astype(EXTENDED)
        for name, p in named.items():
            flat = p.data.reshape(-1)
            ga = analytic[name].reshape(-1)
            for i in range(flat.size):
                if skip is not None and skip(name, np.unravel_index(i, p.shape)):
                    continue
                orig = flat[i]
                flat[i] = orig + eps
                up = _evaluate(f, name, i)
                flat[i] = orig - eps
                down = _evaluate(f, name, i)
                flat[i] = orig
                numeric = float((up - down) / (2 * EXTENDED(eps)))
                denom = max(abs(ga[i]), abs(numeric), 1e-8)
                worst = max(worst, abs(ga[i] - numeric) / denom)
    finally:
        for name, p in named.items():
            p.data = originals[name]
            p.grad = None
    return worst


def _evaluate(f, name, i):
    with no_grad():
        v = f().data.reshape(-1)[0]
    if not np.isfinite(v):
        raise NumericError(f"non-finite objective while perturbing {name}[{i}]")
    return v


def kink_margin(f: Callable[[], Tensor]) -> float:
    """Smallest ``|x|`` fed to any relu during one evaluation of ``f``.

    Finite differences are only meaningful when this exceeds ``eps``.
    """
    with no_grad(), watch_kinks() as seen:
        f()
    return min(seen, default=float("inf"))
