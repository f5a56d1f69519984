"""Composite Simpson quadrature on fixed uniform grids.

All spatial integrals in the package run through these helpers so that the
node layouts used by the fast transient kernel and by the one-shot public
evaluators are identical.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConvergenceError


def simpson_nodes(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Return nodes and weights of the n-point composite Simpson rule on [a, b].

    n must be odd and >= 3; the weights already include the step factor, so
    the integral is simply ``weights @ f(nodes)``.
    """
    if n < 3 or n % 2 == 0:
        raise ValueError(f"Simpson rule needs an odd point count >= 3, got {n}")
    x = np.linspace(a, b, n)
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    w *= (b - a) / (n - 1) / 3.0
    return x, w


def checked_simpson(
    fn: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    n: int,
    rel_tol: float = 1e-9,
    max_doublings: int = 5,
    scale: float | None = None,
) -> float:
    """Integrate fn over [a, b], cross-checking the n-point Simpson value
    against the (2n-1)-point value.

    The coarse value is accepted once coarse and refined agree to rel_tol;
    the grid is doubled (up to max_doublings) otherwise.  `scale` sets the
    magnitude used for the relative test when the integral itself is nearly
    zero (e.g. orthogonality integrals).
    """
    x, w = simpson_nodes(n, a, b)
    coarse = float(w @ fn(x))
    for _ in range(max_doublings):
        n = 2 * n - 1
        x, w = simpson_nodes(n, a, b)
        fine = float(w @ fn(x))
        denom = max(abs(fine), abs(scale) if scale is not None else 0.0, 1e-300)
        if abs(fine - coarse) <= rel_tol * denom:
            return coarse
        coarse = fine
    raise ConvergenceError(
        f"Simpson quadrature did not converge to rel_tol={rel_tol:g} "
        f"within {max_doublings} refinements (last n={n})"
    )
