"""Adaptive composite Gauss-Legendre quadrature with certified estimates.

Panels start at the caller's breakpoints (integrand kinks become panel
boundaries), then every panel is split in half until two successive
composite estimates agree below the tolerance or a panel cap is hit.  The
returned error estimate is the last successive difference.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple

import numpy as np

from .errors import CapacityError, InputError


@dataclass(frozen=True)
class QuadratureConfig:
    tol: float = 1e-10
    order: int = 12          # Gauss-Legendre nodes per panel
    max_panels: int = 4096
    min_refinements: int = 2


class QuadResult(NamedTuple):
    value: complex
    error_estimate: float
    panels: int


def _panel_sum(f: Callable[[float], complex], edges: np.ndarray,
               nodes: np.ndarray, weights: np.ndarray) -> complex:
    total = 0j
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        for x, w in zip(nodes, weights):
            total += w * half * f(mid + half * x)
    return total


def integrate(f: Callable[[float], complex], a: float, b: float,
              breakpoints: Iterable[float] = (),
              config: QuadratureConfig = QuadratureConfig()) -> QuadResult:
    """Integrate f over [a, b] adaptively; complex-valued integrands fine."""
    if b < a:
        raise InputError("integration interval is reversed")
    if b == a:
        return QuadResult(0j, 0.0, 0)
    nodes, weights = np.polynomial.legendre.leggauss(config.order)
    edges = sorted({a, b, *(t for t in breakpoints if a < t < b)})
    edges = np.asarray(edges, dtype=float)
    est = _panel_sum(f, edges, nodes, weights)
    err = float("inf")
    refinement = 0
    while True:
        mids = 0.5 * (edges[:-1] + edges[1:])
        edges = np.sort(np.concatenate([edges, mids]))
        if len(edges) - 1 > config.max_panels:
            raise CapacityError(
                f"quadrature needed more than {config.max_panels} panels "
                f"(last successive difference {err:.3e})")
        new = _panel_sum(f, edges, nodes, weights)
        err = abs(new - est)
        est = new
        refinement += 1
        if refinement >= config.min_refinements and err < config.tol:
            return QuadResult(est, err, len(edges) - 1)
