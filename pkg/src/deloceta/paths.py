"""The determinant map on sampled paths of invertibles.

tau_h integrates tr_h(udot u^{-1})/(2 pi i) along a piecewise-smooth path of
invertible unitized group-algebra elements starting at the identity.  Paths
either end with a constant coefficient part (everything after the last
sample integrates to zero) or carry a commuting-family tail descriptor F at
the horizon T, in which case the integral over [T, inf) is the exact
analytic term -tr_h(F(T))/2 (the family commutes, so the logarithmic
derivative is pi*i*dF/dt and F decays to 0 at infinity).

Inverses are obtained by solving in the regular representation on the
support hull (exact for finite groups); derivatives come from the analytic
callback when a constructor provides one, otherwise from 4th-order finite
differences on the evaluator.  Non-commuting deformation invariance is
untested at desk scale; transgression is exercised on commuting families
only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
import scipy.linalg
from scipy.special import erf

from .algebra import (CONDITION_CAP, AlgElem, coeffs_from_rep, convolve,
                      invert_unitized, propagation, rep_basis, rep_condition,
                      rep_matrix, tr_h)
from .errors import InputError, SingularPathError
from .groups import Group
from .quadrature import QuadratureConfig, integrate

IDEMPOTENT_TOL = 1e-12
SELFADJOINT_TOL = 1e-10
DEFAULT_SPECTRAL_GAP = 1e-8


@dataclass(frozen=True)
class Idempotent:
    """An AlgElem p with p*p = p (exact on the exact backend, within
    IDEMPOTENT_TOL on floats) and finite propagation."""

    p: AlgElem

    def __post_init__(self):
        validate_idempotent(self.p)


def validate_idempotent(p: AlgElem, tol: float = IDEMPOTENT_TOL) -> None:
    sq = convolve(p, p)
    if p.backend == "exact":
        if sq != p:
            raise InputError("element is not exactly idempotent")
        return
    scale = max(p.max_abs(), 1.0)
    if not sq.allclose(p, tol * scale):
        raise InputError(f"idempotency defect exceeds {tol:.1e}")


@dataclass(frozen=True)
class CommutingTail:
    """Tail descriptor: beyond the horizon the path is exp(i pi (F(t)+1)) for
    a commuting self-adjoint family decaying to 0; only F at the horizon is
    needed, the tail integral being exactly -tr_h(F(T))/2."""

    operator_at_horizon: AlgElem


class InvertiblePath:
    """Sampled piecewise-smooth path of invertibles in the unitized algebra.

    samples      ordered (t, u(t)) pairs, strictly increasing times, t0 = 0
                 with u(0) = 1 (unit part 1, zero coefficients)
    evaluator    optional dense evaluator t -> AlgElem; built-in constructors
                 provide one, otherwise local polynomial interpolation of the
                 samples is used
    derivative   optional analytic derivative callback
    horizon      end of the time interval tau_h integrates over
    tail         None (coefficient part constant after the last sample) or a
                 CommutingTail
    """

    def __init__(self, group: Group, k: int, samples: Sequence, horizon: float,
                 evaluator: Callable = None, derivative: Callable = None,
                 tail: CommutingTail = None, breakpoints: Iterable = (),
                 hull_radius: int = None, cond_cap: float = CONDITION_CAP,
                 _start_at_identity: bool = True):
        if not samples:
            raise InputError("a path needs at least one sample")
        times = [t for t, _ in samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InputError("sample times must be strictly increasing")
        if times[0] < 0:
            raise InputError("sample times must be >= 0")
        self.group, self.k = group, k
        self.samples = tuple((float(t), u.to_float()) for t, u in samples)
        self.horizon = float(horizon)
        self.evaluator = evaluator
        self.derivative = derivative
        self.tail = tail
        self.breakpoints = tuple(sorted(set(float(t) for t in breakpoints)
                                        | set(times)))
        self.hull_radius = hull_radius
        self.cond_cap = cond_cap
        self._logderiv_cache: dict = {}
        self._hull_basis = None
        if _start_at_identity:
            t0, u0 = self.samples[0]
            if t0 != 0.0:
                raise InputError("the first sample must sit at t = 0")
            if abs(u0.unit - 1) > 1e-10 or any(
                    np.max(np.abs(m)) > 1e-10 for _, m in u0.items()):
                raise InputError("u(0) must be the identity (unit 1, no coefficients)")
        for t, u in self.samples:
            cond = rep_condition(rep_matrix(u, self.hull_basis()))
            if not np.isfinite(cond) or cond > self.cond_cap:
                raise SingularPathError(
                    f"sample at t={t} has condition number {cond:.3e} > {self.cond_cap:.1e}")

    def hull_basis(self) -> tuple:
        if self._hull_basis is None:
            if self.group.is_finite():
                self._hull_basis = rep_basis(self.group)
            else:
                r = self.hull_radius
                if r is None:
                    r = max((propagation(u) for _, u in self.samples), default=0)
                    if self.tail is not None:
                        r = max(r, propagation(self.tail.operator_at_horizon))
                    r += 2
                self._hull_basis = rep_basis(self.group, r)
        return self._hull_basis

    # -- dense evaluation -------------------------------------------------
    def value(self, t: float) -> AlgElem:
        if self.evaluator is not None:
            return self.evaluator(t)
        return self._interpolate(t)

    def _interpolate(self, t: float) -> AlgElem:
        """Local degree-<=4 Lagrange interpolation of the sampled coefficients."""
        times = np.array([s for s, _ in self.samples])
        if len(times) == 1:
            return self.samples[0][1]
        order = min(5, len(times))
        centre = int(np.argmin(np.abs(times - t)))
        lo = max(0, min(centre - order // 2, len(times) - order))
        idx = range(lo, lo + order)
        ts = times[list(idx)]
        weights = []
        for i, ti in enumerate(ts):
            w = 1.0
            for j, tj in enumerate(ts):
                if i != j:
                    w *= (t - tj) / (ti - tj)
            weights.append(w)
        out = AlgElem.zero(self.group, self.k)
        for w, i in zip(weights, idx):
            out = out + self.samples[i][1].scale(w)
        return out

    def velocity(self, t: float) -> AlgElem:
        if self.derivative is not None:
            return self.derivative(t)
        # 4th-order stencils on the evaluator, one-sided near the ends
        h = max(self.horizon, 1.0) * 1e-3
        if t - 2 * h < 0:
            pts, cs = [0, 1, 2, 3, 4], [-25 / 12, 4, -3, 4 / 3, -1 / 4]
            base = t
        elif t + 2 * h > self.horizon and self.tail is None:
            pts, cs = [0, -1, -2, -3, -4], [25 / 12, -4, 3, -4 / 3, 1 / 4]
            base = t
        else:
            pts, cs = [-2, -1, 1, 2], [1 / 12, -8 / 12, 8 / 12, -1 / 12]
            base = t
        out = AlgElem.zero(self.group, self.k)
        for p, c in zip(pts, cs):
            if c:
                out = out + self.value(base + p * h).scale(c / h)
        return out

    def log_derivative(self, t: float) -> AlgElem:
        """udot(t) u(t)^{-1}, memoized per node so several classes can share
        one quadrature sweep."""
        key = (t, len(self.hull_basis()))
        hit = self._logderiv_cache.get(key)
        if hit is not None:
            return hit
        u = self.value(t)
        udot = self.velocity(t)
        uinv = invert_unitized(u, self.hull_basis(), cond_cap=self.cond_cap)
        out = convolve(udot, uinv)
        self._logderiv_cache[key] = out
        return out


class TauResult(NamedTuple):
    value: complex
    error_estimate: float


def tau_h(path: InvertiblePath, class_elems: Iterable,
          config: QuadratureConfig = QuadratureConfig()) -> TauResult:
    """Determinant map (1/2 pi i) int_0^inf tr_h(udot u^{-1}) dt.

    Quadrature runs over [0, T]; with a commuting-family tail the exact term
    -tr_h(F(T))/2 is added, otherwise the coefficient part must be constant
    after the last sample (so the remainder integrates to zero).
    """
    cls = tuple(class_elems)
    if path.tail is None:
        upper = min(path.horizon, path.samples[-1][0]) or path.horizon
    else:
        upper = path.horizon

    def integrand(t: float) -> complex:
        ld = path.log_derivative(t)
        return complex(tr_h(ld, cls)) / (2j * math.pi)

    res = integrate(integrand, 0.0, upper,
                    breakpoints=[b for b in path.breakpoints if 0 < b < upper],
                    config=config)
    value, err = res.value, res.error_estimate
    if path.tail is not None:
        value = value - 0.5 * complex(tr_h(path.tail.operator_at_horizon, cls))
    return TauResult(value, err)


# ---------------------------------------------------------------------------
# constructors


def winding_loop(p: AlgElem) -> InvertiblePath:
    """The loop e^{2 pi i theta} p + (1 - p) over theta in [0, 1] for an
    idempotent p; tau_h of it is tr_h(p)."""
    validate_idempotent(p)
    pf = p.to_float()
    group, k = pf.group, pf.k

    def evaluator(theta: float) -> AlgElem:
        return AlgElem.one(group, k) + pf.scale(np.exp(2j * np.pi * theta) - 1)

    def derivative(theta: float) -> AlgElem:
        return pf.scale(2j * np.pi * np.exp(2j * np.pi * theta))

    samples = [(t, evaluator(t)) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
    return InvertiblePath(group, k, samples, horizon=1.0, evaluator=evaluator,
                          derivative=derivative)


def boundary_path(p: AlgElem, hull_radius: int = None) -> InvertiblePath:
    """Image of an idempotent under the boundary map: u(t) = exp(2 pi i (1-t) p)
    on [0, 1], constantly 1 afterwards; u(0) = 1 because exp(2 pi i p) = 1 for
    idempotent p.  tau_h(boundary_path(p)) = -tr_h(p).

    The exponential is evaluated in the regular representation on the support
    hull (scaling-and-squaring; conjugated idempotents are not normal) and
    pulled back to coefficients.
    """
    validate_idempotent(p)
    pf = p.to_float()
    group, k = pf.group, pf.k
    if hull_radius is None and not group.is_finite():
        hull_radius = 2 * propagation(pf) + 2
    basis = rep_basis(group, hull_radius)
    M = rep_matrix(pf, basis)
    eye = np.eye(M.shape[0])

    def evaluator(t: float) -> AlgElem:
        if t >= 1.0:
            return AlgElem.one(group, k)
        U = scipy.linalg.expm(2j * np.pi * (1.0 - t) * M)
        coeffs = coeffs_from_rep(U - eye, basis, group, k)
        return AlgElem(group, k, coeffs, 1.0, backend="float")

    def derivative(t: float) -> AlgElem:
        if t >= 1.0:
            return AlgElem.zero(group, k)
        return convolve(pf.scale(-2j * np.pi), evaluator(t))

    samples = [(t, evaluator(t)) for t in (0.0, 0.25, 0.5, 0.75, 1.0)]
    return InvertiblePath(group, k, samples, horizon=1.0, evaluator=evaluator,
                          derivative=derivative, hull_radius=hull_radius)


def _eigendecompose(D: AlgElem, selfadjoint_tol: float = SELFADJOINT_TOL):
    Df = D.to_float()
    if not Df.allclose(Df.adjoint(), selfadjoint_tol * max(Df.max_abs(), 1.0)):
        raise InputError("operator is not self-adjoint within tolerance")
    if not Df.group.is_finite():
        raise InputError("spectral constructions need a finite group at desk scale; "
                         "use the deck-transformation model for infinite covers")
    basis = rep_basis(Df.group)
    M = rep_matrix(Df, basis)
    vals, vecs = np.linalg.eigh(M)
    return Df, basis, vals, vecs


def rho_path(D: AlgElem, horizon: float = 2.0, grid: Sequence = None,
             spectral_gap: float = DEFAULT_SPECTRAL_GAP) -> InvertiblePath:
    """Finite-model higher-rho path of a self-adjoint invertible operator:
    u(t) = exp(i pi (phi(D/t) + 1)) with the error-function normalizing
    function phi(x) = (2/sqrt(pi)) int_0^x e^{-s^2} ds.

    As t -> 0, phi(D/t) -> sign(D) and u(0) = 1; at the horizon the
    commuting-family tail carries F(T) = phi(D/T).
    """
    Df, basis, vals, vecs = _eigendecompose(D)
    group, k = Df.group, Df.k
    gap = float(np.min(np.abs(vals)))
    if gap < spectral_gap:
        raise InputError(
            f"spectral gap {gap:.3e} below the configured sigma {spectral_gap:.1e} "
            f"(offending singular value {gap:.6e})")

    def functional(diag: np.ndarray, unit) -> AlgElem:
        M = (vecs * diag) @ vecs.conj().T
        if unit:
            M = M - unit * np.eye(M.shape[0])
        coeffs = coeffs_from_rep(M, basis, group, k)
        return AlgElem(group, k, coeffs, unit, backend="float")

    def evaluator(t: float) -> AlgElem:
        if t <= 0.0:
            return AlgElem.one(group, k)
        return functional(np.exp(1j * np.pi * (erf(vals / t) + 1.0)), 1.0)

    def derivative(t: float) -> AlgElem:
        if t <= 0.0:
            return AlgElem.zero(group, k)
        fdot = -(2.0 / np.sqrt(np.pi)) * (vals / t ** 2) * np.exp(-((vals / t) ** 2))
        return functional(1j * np.pi * fdot * np.exp(1j * np.pi * (erf(vals / t) + 1.0)), 0.0)

    tail = CommutingTail(functional(erf(vals / horizon), 0.0))
    if grid is None:
        grid = np.linspace(0.0, horizon, 9)
    samples = [(float(t), evaluator(float(t))) for t in grid]
    return InvertiblePath(group, k, samples, horizon=horizon, evaluator=evaluator,
                          derivative=derivative, tail=tail)


def reparametrize(path: InvertiblePath, phi: Callable[[float], float],
                  phi_derivative: Callable[[float], float] = None) -> InvertiblePath:
    """Re-time a path by a strictly increasing map phi with phi(0) = 0;
    tau_h is invariant under this."""
    times = [t for t, _ in path.samples]
    images = [phi(t) for t in times]
    if abs(images[0]) > 1e-14 or any(b <= a for a, b in zip(images, images[1:])):
        raise InputError("phi must be strictly increasing with phi(0) = 0")
    new_horizon = phi(path.horizon)

    def phi_inverse(s: float) -> float:
        lo, hi = 0.0, path.horizon
        while phi(hi) < s:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if phi(mid) < s:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def dphi(t: float) -> float:
        if phi_derivative is not None:
            return phi_derivative(t)
        h = max(path.horizon, 1.0) * 1e-6
        a, b = max(t - h, 0.0), t + h
        return (phi(b) - phi(a)) / (b - a)

    def evaluator(s: float) -> AlgElem:
        return path.value(phi_inverse(s))

    derivative = None
    if path.derivative is not None:
        def derivative(s: float) -> AlgElem:
            t = phi_inverse(s)
            slope = dphi(t)
            if slope == 0:
                raise InputError("phi is not strictly increasing")
            return path.derivative(t).scale(1.0 / slope)

    samples = list(zip(images, (u for _, u in path.samples)))
    return InvertiblePath(path.group, path.k, samples, horizon=new_horizon,
                          evaluator=evaluator, derivative=derivative,
                          tail=path.tail, breakpoints=[phi(b) for b in path.breakpoints],
                          hull_radius=path.hull_radius, cond_cap=path.cond_cap)


def concatenate(first: InvertiblePath, second: InvertiblePath,
                match_tol: float = 1e-9) -> InvertiblePath:
    """Run `first` over [0, T1], then `second` shifted to start at T1.
    `second` must begin where `first` ends; tau_h adds up."""
    if first.group != second.group or first.k != second.k:
        raise InputError("paths live over different algebras")
    if first.tail is not None:
        raise InputError("cannot concatenate past a tail descriptor")
    t1 = first.horizon
    end = first.value(t1)
    start = second.value(0.0)
    if not end.allclose(start, match_tol * max(end.max_abs(), 1.0)):
        raise InputError("second path does not start where the first ends")

    def evaluator(t: float) -> AlgElem:
        return first.value(t) if t <= t1 else second.value(t - t1)

    derivative = None
    if first.derivative is not None and second.derivative is not None:
        def derivative(t: float) -> AlgElem:
            return first.derivative(t) if t <= t1 else second.derivative(t - t1)

    samples = list(first.samples)
    samples += [(t + t1, u) for t, u in second.samples if t > 0]
    breakpoints = list(first.breakpoints) + [t1] + [b + t1 for b in second.breakpoints]
    return InvertiblePath(first.group, first.k, samples,
                          horizon=t1 + second.horizon, evaluator=evaluator,
                          derivative=derivative, tail=second.tail,
                          breakpoints=breakpoints,
                          hull_radius=max(filter(None, (first.hull_radius,
                                                        second.hull_radius)),
                                          default=None),
                          cond_cap=min(first.cond_cap, second.cond_cap))
