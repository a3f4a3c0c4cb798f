"""Truncated multivariate Taylor arithmetic and a central-difference oracle.

A :class:`Jet` holds the Taylor coefficients ``c_alpha = d^alpha f / alpha!``
of a scalar field up to a fixed total order.  Arithmetic, ``sqrt``, ``exp``,
``log`` and friends propagate the coefficients exactly (to rounding), so a
function written with the generic operators in this module can be evaluated
on plain floats, complex numbers, or jets without modification.

The finite-difference path (``mode="central-fd"``) never touches jets and is
kept as an independent check of the forward path.
"""
from __future__ import annotations

import cmath
import math
import numbers
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Sequence

import numpy as np

from .errors import DomainViolation, NonFiniteValue, SingularMetric

EPS = np.finfo(float).eps
MODES = ("forward-jet", "central-fd")


class _Basis:
    """Graded monomial basis for ``nvars`` variables up to total degree ``order``.

    Monomials are listed degree by degree, so the basis of a lower order is a
    prefix of this one and truncation is a slice.
    """

    def __init__(self, nvars: int, order: int):
        self.nvars = nvars
        self.order = order
        monos = []
        for d in range(order + 1):
            for combo in combinations_with_replacement(range(nvars), d):
                e = [0] * nvars
                for k in combo:
                    e[k] += 1
                monos.append(tuple(e))
        self.monos = monos
        self.index = {m: i for i, m in enumerate(monos)}
        self.size = len(monos)
        self.sizes = [math.comb(nvars + k, k) for k in range(order + 1)]
        self.degree = np.array([sum(m) for m in monos])
        self.factorial = np.array(
            [math.prod(math.factorial(k) for k in m) for m in monos], dtype=float
        )

        I, J, K = [], [], []
        for i, mi in enumerate(monos):
            di = sum(mi)
            for j, mj in enumerate(monos):
                if di + sum(mj) > order:
                    continue
                I.append(i)
                J.append(j)
                K.append(self.index[tuple(p + q for p, q in zip(mi, mj))])
        self.mul = (np.array(I), np.array(J), np.array(K))

        self.deriv = []
        if order > 0:
            lower = monos[: self.sizes[order - 1]]
            for v in range(nvars):
                src, fac = [], []
                for m in lower:
                    up = list(m)
                    up[v] += 1
                    src.append(self.index[tuple(up)])
                    fac.append(m[v] + 1)
                self.deriv.append((np.array(src), np.array(fac, dtype=float)))


@lru_cache(maxsize=None)
def _basis(nvars: int, order: int) -> _Basis:
    return _Basis(nvars, order)


def _mul_coeffs(a: np.ndarray, b: np.ndarray, basis: _Basis) -> np.ndarray:
    I, J, K = basis.mul
    w = a[I] * b[J]
    if np.iscomplexobj(w):
        return np.bincount(K, w.real, basis.size) + 1j * np.bincount(K, w.imag, basis.size)
    return np.bincount(K, w, basis.size)


class Jet:
    """Truncated Taylor expansion of a scalar field around a point."""

    __slots__ = ("c", "nvars", "order")
    __array_priority__ = 1000

    def __init__(self, c: np.ndarray, nvars: int, order: int):
        self.c = c
        self.nvars = nvars
        self.order = order

    @property
    def basis(self) -> _Basis:
        return _basis(self.nvars, self.order)

    @property
    def value(self):
        return self.c[0]

    def __repr__(self) -> str:
        return f"Jet(value={self.c[0]!r}, nvars={self.nvars}, order={self.order})"

    # -- structure -----------------------------------------------------------
    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        return Jet(self.c[: _basis(self.nvars, order).size].copy(), self.nvars, order)

    def _align(self, other: "Jet") -> tuple[np.ndarray, np.ndarray, int]:
        if other.nvars != self.nvars:
            raise ValueError("jets over different variable sets")
        order = min(self.order, other.order)
        size = _basis(self.nvars, order).size
        return self.c[:size], other.c[:size], order

    def deriv(self, var: int) -> "Jet":
        """Jet of the partial derivative in ``var``; one order lower."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.basis.deriv[var]
        return Jet(self.c[src] * fac, self.nvars, self.order - 1)

    def partial(self, idx: Sequence[int] = ()):
        """Mixed partial derivative at the expansion point."""
        e = [0] * self.nvars
        for k in idx:
            e[k] += 1
        if sum(e) > self.order:
            raise ValueError(f"order {sum(e)} partial requested from order {self.order} jet")
        k = self.basis.index[tuple(e)]
        return self.c[k] * self.basis.factorial[k]

    def gradient(self) -> np.ndarray:
        return self.c[1 : 1 + self.nvars].copy()

    def hessian(self) -> np.ndarray:
        n = self.nvars
        H = np.empty((n, n), dtype=self.c.dtype)
        for i in range(n):
            for j in range(i, n):
                H[i, j] = H[j, i] = self.partial((i, j))
        return H

    # -- arithmetic ----------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._align(other)
            return Jet(a + b, self.nvars, order)
        if isinstance(other, numbers.Number):
            c = self.c + 0 * other
            c[0] += other
            return Jet(c, self.nvars, self.order)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.nvars, self.order)

    def __pos__(self):
        return self

    def __sub__(self, other):
        if isinstance(other, (Jet, numbers.Number)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, order = self._align(other)
            return Jet(_mul_coeffs(a, b, _basis(self.nvars, order)), self.nvars, order)
        if isinstance(other, numbers.Number):
            return Jet(self.c * other, self.nvars, self.order)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        if isinstance(other, numbers.Number):
            return Jet(self.c / other, self.nvars, self.order)
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, numbers.Number):
            return self.reciprocal() * other
        return NotImplemented

    def __pow__(self, p):
        if isinstance(p, numbers.Integral) and 0 <= p <= 4:
            out = Jet(np.zeros_like(self.c), self.nvars, self.order) + 1.0
            for _ in range(int(p)):
                out = out * self
            return out
        if isinstance(p, numbers.Real):
            a0 = self.c[0]
            if not np.iscomplexobj(self.c) and a0 <= 0 and not float(p).is_integer():
                raise DomainViolation(f"non-integer power of non-positive value {a0}")
            return self._compose([_binom(p, k) * a0 ** (p - k) for k in range(self.order + 1)])
        return NotImplemented

    # -- elementary functions ------------------------------------------------
    def _compose(self, d: Sequence) -> "Jet":
        """f(self) given the Taylor coefficients ``d`` of f at ``self.value``."""
        basis = self.basis
        h = self.c.copy()
        h[0] = 0
        dtype = np.result_type(h.dtype, *[np.asarray(x).dtype for x in d])
        h = h.astype(dtype, copy=False)
        r = np.zeros(basis.size, dtype=dtype)
        r[0] = d[self.order]
        for k in range(self.order - 1, -1, -1):
            r = _mul_coeffs(r, h, basis)
            r[0] += d[k]
        return Jet(r, self.nvars, self.order)

    def reciprocal(self) -> "Jet":
        a0 = self.c[0]
        if a0 == 0:
            raise DomainViolation("division by a jet with zero value")
        inv = 1.0 / a0
        return self._compose([(-1) ** k * inv ** (k + 1) for k in range(self.order + 1)])

    def sqrt(self) -> "Jet":
        a0 = self.c[0]
        if np.iscomplexobj(self.c):
            r0 = cmath.sqrt(a0)
        elif a0 <= 0:
            raise DomainViolation(f"sqrt of non-positive value {a0}")
        else:
            r0 = math.sqrt(a0)
        return self._compose([_binom(0.5, k) * r0 / a0**k for k in range(self.order + 1)])

    def exp(self) -> "Jet":
        e0 = np.exp(self.c[0])
        return self._compose([e0 / math.factorial(k) for k in range(self.order + 1)])

    def log(self) -> "Jet":
        a0 = self.c[0]
        if not np.iscomplexobj(self.c) and a0 <= 0:
            raise DomainViolation(f"log of non-positive value {a0}")
        d = [np.log(a0)] + [(-1) ** (k + 1) / (k * a0**k) for k in range(1, self.order + 1)]
        return self._compose(d)

    def sin(self) -> "Jet":
        a0 = self.c[0]
        return self._compose(
            [np.sin(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    def cos(self) -> "Jet":
        a0 = self.c[0]
        return self._compose(
            [np.cos(a0 + k * np.pi / 2) / math.factorial(k) for k in range(self.order + 1)]
        )

    @property
    def real(self) -> "Jet":
        return Jet(np.real(self.c).copy(), self.nvars, self.order)

    @property
    def imag(self) -> "Jet":
        return Jet(np.imag(self.c).copy(), self.nvars, self.order)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.c)))


def _binom(p: float, k: int) -> float:
    out = 1.0
    for j in range(k):
        out *= (p - j) / (j + 1)
    return out


# -- generic elementary functions -------------------------------------------

def sqrt(x):
    if isinstance(x, Jet):
        return x.sqrt()
    if isinstance(x, complex) or np.iscomplexobj(x):
        return cmath.sqrt(x)
    if x < 0:
        raise DomainViolation(f"sqrt of negative value {x}")
    return math.sqrt(x)


def exp(x):
    if isinstance(x, Jet):
        return x.exp()
    return cmath.exp(x) if isinstance(x, complex) else math.exp(x)


def log(x):
    if isinstance(x, Jet):
        return x.log()
    if isinstance(x, complex):
        return cmath.log(x)
    if x <= 0:
        raise DomainViolation(f"log of non-positive value {x}")
    return math.log(x)


def sin(x):
    return x.sin() if isinstance(x, Jet) else (cmath.sin(x) if isinstance(x, complex) else math.sin(x))


def cos(x):
    return x.cos() if isinstance(x, Jet) else (cmath.cos(x) if isinstance(x, complex) else math.cos(x))


def real(x):
    if isinstance(x, Jet):
        return x.real
    return float(np.real(x))


def value(x):
    """Point value of a jet, or the number itself."""
    return x.c[0] if isinstance(x, Jet) else x


def dot(u: Sequence, v: Sequence):
    total = 0.0
    for a, b in zip(u, v):
        total = total + a * b
    return total


# -- jets from points --------------------------------------------------------

def variables(point: Sequence[float], order: int) -> list[Jet]:
    """Independent jet variables expanded around ``point``."""
    m = len(point)
    basis = _basis(m, order)
    out = []
    for i, x in enumerate(point):
        c = np.zeros(basis.size)
        c[0] = float(x)
        if order > 0:
            c[1 + i] = 1.0
        out.append(Jet(c, m, order))
    return out


def constant_like(j: Jet, v) -> Jet:
    c = np.zeros(j.basis.size, dtype=np.result_type(j.c.dtype, np.asarray(v).dtype))
    c[0] = v
    return Jet(c, j.nvars, j.order)


def taylor(f: Callable, x: Sequence[float], order: int) -> Jet:
    """Evaluate ``f`` on jet variables at ``x``; always returns a Jet."""
    vs = variables(x, order)
    out = f(vs)
    if not isinstance(out, Jet):
        out = constant_like(vs[0], out)
    return out


def apply(f: Callable, z, nderiv: int = 0):
    """``f^(nderiv)(z)`` for a univariate ``f`` written with the generic operators.

    When ``z`` is a jet the derivative is propagated through the expansion
    exactly, which is how integrands like ``f'(b^2 - t^2)`` are lifted.
    """
    if not isinstance(z, Jet):
        if nderiv == 0:
            return f(z)
        t = taylor(lambda v: f(v[0]), [z], nderiv)
        return t.c[nderiv] * math.factorial(nderiv)
    t = taylor(lambda v: f(v[0]), [value(z)], z.order + nderiv)
    d = [t.c[k + nderiv] * math.perm(k + nderiv, nderiv) for k in range(z.order + 1)]
    return z._compose(d)


def solve(A: Sequence[Sequence], b: Sequence) -> list:
    """Gaussian elimination with partial pivoting on jet (or scalar) entries."""
    n = len(b)
    M = [list(row) + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(value(M[r][col])))
        if abs(value(M[piv][col])) == 0:
            raise SingularMetric("singular matrix in jet solve")
        M[col], M[piv] = M[piv], M[col]
        inv = 1.0 / M[col][col]
        for r in range(col + 1, n):
            f = M[r][col] * inv
            for k in range(col, n + 1):
                M[r][k] = M[r][k] - f * M[col][k]
    x = [None] * n
    for r in range(n - 1, -1, -1):
        acc = M[r][n]
        for k in range(r + 1, n):
            acc = acc - M[r][k] * x[k]
        x[r] = acc / M[r][r]
    return x


# -- public differentiation contract ----------------------------------------

@dataclass(frozen=True)
class DiffConfig:
    mode: str = "forward-jet"
    fd_step: float | None = None
    richardson: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.fd_step is not None and not self.fd_step > 0:
            raise ValueError("fd_step must be positive")

    def step(self, deriv_order: int) -> float:
        """Relative step for central differences of the given derivative order.

        Balances truncation against cancellation: eps^(1/(k+2)) for plain
        central differences, eps^(1/(k+4)) after one Richardson level.
        """
        if self.fd_step is not None:
            return self.fd_step
        return EPS ** (1.0 / (deriv_order + (4 if self.richardson else 2)))


JET = DiffConfig()
FD = DiffConfig(mode="central-fd")


@dataclass(frozen=True)
class Jet2:
    value: float
    grad: np.ndarray = field(repr=False)
    hess: np.ndarray = field(repr=False)


def _central(f, x: np.ndarray, idx: Sequence[int], h: np.ndarray):
    if not idx:
        return f(x)
    i, rest = idx[0], idx[1:]
    xp = x.copy()
    xp[i] += h[i]
    xm = x.copy()
    xm[i] -= h[i]
    return (_central(f, xp, rest, h) - _central(f, xm, rest, h)) / (2 * h[i])


def fd_partial(f: Callable, x: Sequence[float], idx: Sequence[int], cfg: DiffConfig = FD):
    """Mixed partial by nested central differences, optionally Richardson-extrapolated."""
    x = np.asarray(x, dtype=float)
    if not idx:
        return f(x)
    h = cfg.step(len(idx)) * np.maximum(1.0, np.abs(x))
    coarse = _central(f, x, tuple(idx), h)
    if not cfg.richardson:
        return coarse
    fine = _central(f, x, tuple(idx), h / 2)
    return (4 * fine - coarse) / 3


def _check_finite(*vals):
    for v in vals:
        if not np.all(np.isfinite(v)):
            raise NonFiniteValue("non-finite value or derivative (domain violation upstream?)")


def jet2(f: Callable, x: Sequence[float], cfg: DiffConfig = JET) -> Jet2:
    """Value, gradient and Hessian of a scalar field at ``x``."""
    x = np.asarray(x, dtype=float)
    m = len(x)
    if cfg.mode == "forward-jet":
        t = taylor(f, x, 2)
        val, grad, hess = t.value, t.gradient(), t.hessian()
    else:
        val = f(x)
        grad = np.array([fd_partial(f, x, (i,), cfg) for i in range(m)])
        hess = np.empty((m, m))
        for i in range(m):
            for j in range(i, m):
                hess[i, j] = hess[j, i] = fd_partial(f, x, (i, j), cfg)
    _check_finite(val, grad, hess)
    return Jet2(val, grad, hess)


def partial3(f: Callable, x: Sequence[float], indices: tuple[int, int, int],
             cfg: DiffConfig = JET) -> float:
    """Mixed third partial derivative of a scalar field at ``x``."""
    x = np.asarray(x, dtype=float)
    if cfg.mode == "forward-jet":
        out = taylor(f, x, 3).partial(indices)
    else:
        out = fd_partial(f, x, indices, cfg)
    _check_finite(out)
    return out
