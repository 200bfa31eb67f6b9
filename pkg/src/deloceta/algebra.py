"""Finitely supported group-algebra elements with matrix coefficients.

An AlgElem models an element of CGamma (x) M_k plus an optional scalar
multiple of the unit: A = unit*1 + sum_g A_g delta_g with finitely many
nonzero k x k coefficient matrices A_g.  Two numeric backends share all code
paths: double-precision complex (quadrature, spectra) and exact Gaussian
rationals (algebraic identity tests).  Operations note below which backends
they support; anything routed through the regular representation is
float-only.

The class trace tr_h sums matrix traces of coefficients over an explicitly
supplied truncated conjugacy class -- truncation radius is always an
auditable input, never chosen silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InputError, NotCertifiedError, SingularPathError
from .exact import (GaussianRational, exact_conj_transpose, exact_zeros,
                    to_complex_matrix)
from .groups import Group, GrowthReport, ball, conjugacy_class_ball

CONDITION_CAP = 1e8       # invertibility tolerance in the regular representation
SOLVE_DROP_TOL = 1e-13    # relative prune threshold for pulled-back coefficients


def _is_zero_matrix(m: np.ndarray) -> bool:
    if m.dtype == object:
        return all(x.is_zero() for x in m.flat)
    return not np.any(m)


def _mat_trace(m: np.ndarray):
    t = m[0, 0]
    for i in range(1, m.shape[0]):
        t = t + m[i, i]
    return t


class AlgElem:
    """Immutable finitely supported element of CGamma (x) M_k (unitized)."""

    __slots__ = ("group", "k", "unit", "_coeffs", "backend")

    def __init__(self, group: Group, k: int, coeffs: Mapping = None, unit=0,
                 backend: str = None):
        if k < 1:
            raise InputError("matrix size k must be >= 1")
        self.group = group
        self.k = k
        store = {}
        detected = backend
        for g, m in (coeffs or {}).items():
            group.check_element(g)
            m = np.asarray(m) if not isinstance(m, np.ndarray) else m
            if m.shape != (k, k):
                raise InputError(f"coefficient at {g!r} has shape {m.shape}, wanted {(k, k)}")
            this = "exact" if m.dtype == object else "float"
            if detected is None:
                detected = this
            elif detected != this:
                raise InputError("mixed exact/float coefficient matrices")
            m = np.array(m, dtype=object if this == "exact" else complex)
            if not _is_zero_matrix(m):
                m.setflags(write=False)
                store[g] = m
        if detected is None:
            detected = "exact" if isinstance(unit, GaussianRational) else "float"
        self.backend = detected
        if detected == "exact":
            unit = GaussianRational.of(unit) if not isinstance(unit, GaussianRational) else unit
        else:
            unit = complex(unit)
        self.unit = unit
        self._coeffs = store

    # -- constructors ---------------------------------------------------
    @classmethod
    def zero(cls, group: Group, k: int = 1, backend: str = "float") -> "AlgElem":
        unit = GaussianRational.of(0) if backend == "exact" else 0
        return cls(group, k, {}, unit, backend=backend)

    @classmethod
    def one(cls, group: Group, k: int = 1, scalar=1, backend: str = "float") -> "AlgElem":
        unit = GaussianRational.of(scalar) if backend == "exact" else complex(scalar)
        return cls(group, k, {}, unit, backend=backend)

    @classmethod
    def delta(cls, group: Group, g, matrix=None, k: int = 1, scale=1) -> "AlgElem":
        """scale * delta_g (x) matrix; matrix defaults to the identity."""
        if matrix is None:
            if isinstance(scale, GaussianRational):
                matrix = exact_zeros(k, k)
                for i in range(k):
                    matrix[i, i] = scale
            else:
                matrix = np.eye(k, dtype=complex) * complex(scale)
        else:
            matrix = matrix if isinstance(matrix, np.ndarray) else np.asarray(matrix)
            k = matrix.shape[0]
            if scale != 1:
                matrix = matrix * scale
        return cls(group, k, {g: matrix})

    # -- views ------------------------------------------------------------
    @property
    def support(self) -> tuple:
        return tuple(sorted(self._coeffs, key=self.group.sort_key))

    def coeff(self, g) -> np.ndarray:
        m = self._coeffs.get(g)
        if m is not None:
            return m
        if self.backend == "exact":
            return exact_zeros(self.k, self.k)
        return np.zeros((self.k, self.k), dtype=complex)

    def items(self):
        for g in self.support:
            yield g, self._coeffs[g]

    def coeff_total(self, g) -> np.ndarray:
        """Coefficient at g with the unit folded into the identity slot."""
        m = self.coeff(g)
        if g == self.group.identity() and self.unit:
            if self.backend == "exact":
                m = m.copy()
                for i in range(self.k):
                    m[i, i] = m[i, i] + self.unit
            else:
                m = m + self.unit * np.eye(self.k)
        return m

    def content_key(self) -> tuple:
        if self.backend == "exact":
            body = tuple((g, tuple(map(repr, m.flat))) for g, m in self.items())
            return (self.group.cache_key(), self.k, repr(self.unit), body)
        body = tuple((g, m.tobytes()) for g, m in self.items())
        return (self.group.cache_key(), self.k, complex(self.unit), body)

    # -- ring operations (both backends) ---------------------------------
    def _check_compatible(self, other: "AlgElem"):
        if self.group != other.group or self.k != other.k:
            raise InputError("operands live over different groups or matrix sizes")
        if self.backend != other.backend:
            raise InputError("operands use different numeric backends")

    def __add__(self, other: "AlgElem") -> "AlgElem":
        self._check_compatible(other)
        out = dict(self._coeffs)
        for g, m in other._coeffs.items():
            out[g] = out[g] + m if g in out else m
        return AlgElem(self.group, self.k, out, self.unit + other.unit,
                       backend=self.backend)

    def __sub__(self, other: "AlgElem") -> "AlgElem":
        return self + (-other)

    def __neg__(self) -> "AlgElem":
        return self.scale(-1)

    def scale(self, c) -> "AlgElem":
        if self.backend == "exact":
            c = GaussianRational.of(c)
        else:
            c = complex(c)
        out = {g: m * c for g, m in self._coeffs.items()}
        return AlgElem(self.group, self.k, out, self.unit * c, backend=self.backend)

    def __mul__(self, other):
        if isinstance(other, AlgElem):
            return convolve(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def adjoint(self) -> "AlgElem":
        """(A*)_g = conj-transpose of A_{g^{-1}}; unit conjugated."""
        out = {}
        for g, m in self._coeffs.items():
            gi = self.group.inv(g)
            out[gi] = exact_conj_transpose(m) if self.backend == "exact" else m.conj().T
        return AlgElem(self.group, self.k, out, self.unit.conjugate(),
                       backend=self.backend)

    def to_float(self) -> "AlgElem":
        if self.backend == "float":
            return self
        out = {g: to_complex_matrix(m) for g, m in self._coeffs.items()}
        return AlgElem(self.group, self.k, out, complex(self.unit), backend="float")

    def __eq__(self, other):
        if not isinstance(other, AlgElem):
            return NotImplemented
        if (self.group, self.k, self.backend) != (other.group, other.k, other.backend):
            return False
        if self.unit != other.unit or set(self._coeffs) != set(other._coeffs):
            return False
        for g, m in self._coeffs.items():
            o = other._coeffs[g]
            if self.backend == "exact":
                if any(a != b for a, b in zip(m.flat, o.flat)):
                    return False
            elif not np.array_equal(m, o):
                return False
        return True

    def __hash__(self):
        return hash(self.content_key())

    def allclose(self, other: "AlgElem", tol: float = 1e-12) -> bool:
        a, b = self.to_float(), other.to_float()
        if abs(a.unit - b.unit) > tol:
            return False
        for g in set(a._coeffs) | set(b._coeffs):
            if np.max(np.abs(a.coeff(g) - b.coeff(g))) > tol:
                return False
        return True

    def max_abs(self) -> float:
        vals = [abs(self.unit if self.backend == "float" else complex(self.unit))]
        for m in self._coeffs.values():
            cm = to_complex_matrix(m)
            if cm.size:
                vals.append(float(np.max(np.abs(cm))))
        return max(vals)

    def __repr__(self):
        return (f"AlgElem({self.group!r}, k={self.k}, unit={self.unit!r}, "
                f"support={self.support})")


def convolve(A: AlgElem, B: AlgElem) -> AlgElem:
    """(AB)_g = sum_{uv=g} A_u B_v, with unit parts distributing as scalars."""
    A._check_compatible(B)
    group, k = A.group, A.k
    out: dict = {}
    for u, mu in A._coeffs.items():
        for v, mv in B._coeffs.items():
            g = group.mul(u, v)
            prod = np.dot(mu, mv)
            out[g] = out[g] + prod if g in out else prod
    if B.unit:
        for u, mu in A._coeffs.items():
            m = mu * B.unit
            out[u] = out[u] + m if u in out else m
    if A.unit:
        for v, mv in B._coeffs.items():
            m = mv * A.unit
            out[v] = out[v] + m if v in out else m
    return AlgElem(group, k, out, A.unit * B.unit, backend=A.backend)


def tr_h(A: AlgElem, class_elems: Iterable):
    """Delocalized trace: sum of matrix traces of A's coefficients over the
    supplied truncated conjugacy class.  Exact on the exact backend.

    Empty classes give 0.  The unit part only contributes when the identity
    is listed in the class (never the case for a class of h != e).
    """
    total = GaussianRational.of(0) if A.backend == "exact" else 0j
    e = A.group.identity()
    for g in class_elems:
        A.group.check_element(g)
        m = A._coeffs.get(g)
        if m is not None:
            total = total + _mat_trace(m)
        if g == e and A.unit:
            total = total + A.unit * A.k
    return total


def propagation(A: AlgElem) -> int:
    """max{|g| : g in supp(A)}; 0 for scalar multiples of the unit."""
    if not A._coeffs:
        return 0
    return max(A.group.word_length(g) for g in A._coeffs)


# ---------------------------------------------------------------------------
# Connes-Moscovici-style seminorms


@dataclass(frozen=True)
class SeminormContext:
    """Order-n seminorm data: the index weight acts on matrix slot j by
    multiplication with weights[j-1] (default j itself, squared when composed
    -- j^2, the convention this artifact fixes), and the length derivation is
    D g = |g| g."""

    n: int
    weights: "tuple | None" = None

    def __post_init__(self):
        if self.n < 0:
            raise InputError("seminorm order must be >= 0")
        if self.weights is not None and any(w <= 0 for w in self.weights):
            raise InputError("weights must be strictly positive")

    def weight_vector(self, k: int) -> np.ndarray:
        if self.weights is None:
            return np.arange(1, k + 1, dtype=float)
        if len(self.weights) != k:
            raise InputError(f"{len(self.weights)} weights for matrix size {k}")
        return np.asarray(self.weights, dtype=float)


def cm_seminorm(A: AlgElem, ctx: SeminormContext, mode: str = "upper-bound",
                radius: int = None) -> float:
    """Seminorm sum_{m<=n} (1/m!) ||dbar^m(A) o (I x Delta)^2||.

    mode "upper-bound": certified upper bound via the triangle/Schur estimate
    ||dbar(delta_g x M)|| <= |g| ||M||, i.e.
    sum_{m<=n} (1/m!) sum_g |g|^m ||A_g|| * (k * maxweight^2).

    mode "truncated": certified lower bound, the operator norm of the
    commutator expression compressed to the radius-`radius` block of the
    regular representation.  upper-bound >= truncated always.

    Both backends accepted (exact coefficients are embedded); returns float.
    """
    w = ctx.weight_vector(A.k)
    if mode == "upper-bound":
        factor = A.k * float(np.max(w)) ** 2
        total = 0.0
        terms = [(g, to_complex_matrix(m)) for g, m in A.items()]
        unit = complex(A.unit)
        for m_ord in range(ctx.n + 1):
            s = 0.0
            for g, mat in terms:
                s += A.group.word_length(g) ** m_ord * float(np.linalg.norm(mat, 2))
            if m_ord == 0 and unit:
                s += abs(unit)
            total += s * factor / math.factorial(m_ord)
        return total
    if mode == "truncated":
        if radius is None:
            raise InputError("truncated mode needs a radius")
        basis = rep_basis(A.group, radius)
        lengths = np.array([A.group.word_length(g) for g in basis], dtype=float)
        base = rep_matrix(A, basis)
        n_b, k = len(basis), A.k
        col_scale = np.tile(w ** 2, n_b)
        diff = lengths[:, None] - lengths[None, :]
        total = 0.0
        for m_ord in range(ctx.n + 1):
            scaled = base * np.repeat(np.repeat(diff ** m_ord, k, axis=0), k, axis=1)
            scaled = scaled * col_scale[None, :]
            total += float(np.linalg.norm(scaled, 2)) / math.factorial(m_ord)
        return total
    raise InputError(f"unknown seminorm mode {mode!r}")


def lemma25_constant(group: Group, h, k: int, R: int, slot_cap: int = None,
                     growth: GrowthReport = None, slack: int = 4) -> float:
    """The class-side constant behind |tr_h(A)| <= sqrt(C) * ||A||_k:
    (sum_{j<=J} j^-2) * (sum_{g in <h>, |g|<=R} (1+|g|)^-2k), J the matrix-slot
    cap (None = the closed form pi^2/6), plus a certified tail bound from the
    fitted growth degree when a report is supplied.
    """
    if k < 1:
        raise InputError("seminorm order k must be >= 1")
    if slot_cap is None:
        jsum = math.pi ** 2 / 6
    else:
        jsum = sum(1.0 / j ** 2 for j in range(1, slot_cap + 1))
    cls = conjugacy_class_ball(group, h, R, slack=slack)
    partial = sum((1 + group.word_length(g)) ** (-2 * k) for g in cls)
    tail = 0.0
    if growth is not None:
        if growth.verdict == "exponential":
            raise NotCertifiedError("trace extension not certified: class growth "
                                    "classified exponential")
        if growth.verdict == "polynomial":
            d, C = growth.degree, growth.constant
            if 2 * k <= d:
                raise NotCertifiedError(
                    f"trace extension not certified: need 2k > degree ({2 * k} <= {d})")
            # Abel summation of N(r) <= C r^d against (1+r)^(-2k)
            tail = 2 * k * C * R ** (d - 2 * k) / (2 * k - d)
    return jsum * (partial + tail)


# ---------------------------------------------------------------------------
# regular representation on a finite basis

def rep_basis(group: Group, radius: int = None) -> tuple:
    """Ordered basis for the (possibly compressed) regular representation:
    all elements for a finite group, else the radius-`radius` ball."""
    if group.is_finite():
        els = list(group.elements())
        els.sort(key=group.sort_key)
        return tuple(els)
    if radius is None:
        raise InputError("infinite group: an explicit hull radius is required")
    return ball(group, radius)


def rep_matrix(A: AlgElem, basis: tuple) -> np.ndarray:
    """Left-convolution matrix of A on span(basis) (x) C^k: block (i, j) is
    the total coefficient of A at basis[i] * basis[j]^{-1}.  Exact for finite
    groups; a compression for infinite ones."""
    group, k = A.group, A.k
    index = {g: i for i, g in enumerate(basis)}
    n = len(basis)
    M = np.zeros((n * k, n * k), dtype=complex)
    coeffs = {g: to_complex_matrix(m) for g, m in A._coeffs.items()}
    for j, gj in enumerate(basis):
        for g, mat in coeffs.items():
            i = index.get(group.mul(g, gj))
            if i is not None:
                M[i * k:(i + 1) * k, j * k:(j + 1) * k] += mat
    if A.unit:
        M += complex(A.unit) * np.eye(n * k)
    return M


def coeffs_from_rep(M: np.ndarray, basis: tuple, group: Group, k: int,
                    drop_tol: float = SOLVE_DROP_TOL) -> dict:
    """Pull coefficients back from the identity column block of a regular
    representation matrix, pruning entries below drop_tol * max|entry|."""
    e_idx = basis.index(group.identity())
    scale = float(np.max(np.abs(M[:, e_idx * k:(e_idx + 1) * k]))) or 1.0
    out = {}
    for i, g in enumerate(basis):
        blk = np.array(M[i * k:(i + 1) * k, e_idx * k:(e_idx + 1) * k])
        if np.max(np.abs(blk)) > drop_tol * scale:
            out[g] = blk
    return out


def rep_condition(M: np.ndarray) -> float:
    sv = np.linalg.svd(M, compute_uv=False)
    if sv[-1] == 0:
        return float("inf")
    return float(sv[0] / sv[-1])


def invert_unitized(A: AlgElem, basis: tuple, cond_cap: float = CONDITION_CAP,
                    drop_tol: float = SOLVE_DROP_TOL) -> AlgElem:
    """Inverse of A computed by solving in the regular representation on the
    given basis hull (float backend).  Exact for finite groups; for infinite
    groups the hull must contain the support of the true inverse.

    Raises SingularPathError when the condition number exceeds cond_cap.
    """
    A = A.to_float()
    M = rep_matrix(A, basis)
    cond = rep_condition(M)
    if not np.isfinite(cond) or cond > cond_cap:
        raise SingularPathError(
            f"regular-representation condition number {cond:.3e} exceeds cap {cond_cap:.1e}")
    e_idx = basis.index(A.group.identity())
    k = A.k
    rhs = np.zeros((M.shape[0], k), dtype=complex)
    rhs[e_idx * k:(e_idx + 1) * k, :] = np.eye(k)
    col = np.linalg.solve(M, rhs)
    coeffs = {}
    scale = float(np.max(np.abs(col))) or 1.0
    for i, g in enumerate(basis):
        blk = col[i * k:(i + 1) * k, :]
        if np.max(np.abs(blk)) > drop_tol * scale:
            coeffs[g] = np.array(blk)
    unit = 0j
    if A.unit:
        unit = 1.0 / complex(A.unit)
        e = A.group.identity()
        if e in coeffs:
            coeffs[e] = coeffs[e] - unit * np.eye(k)
    return AlgElem(A.group, k, coeffs, unit, backend="float")
