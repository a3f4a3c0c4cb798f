"""Families of phi(b^2, s) and residual checks for the equations they must satisfy.

Conventions: subscript 1 is d/d(b^2), subscript 2 is d/ds, and (b^2, s) are
independent coordinates.  ``u = b^2 - s^2``, ``v = s``.  Every family stores a
function ``fn(b2, s)`` written with the generic operators of :mod:`diffengine`,
so derivatives come from the same jet arithmetic used for the metrics.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec

from . import diffengine as de
from .errors import BranchUndefined, DomainViolation, NoRealRoot, QuadratureFailure

TAGS = ("Funk", "TwoParam", "General", "SolvedQ", "KappaZero", "SquareB", "Bryant",
        "ShenEps", "Transfer", "Custom")


@dataclass(frozen=True)
class PhiFamily:
    tag: str
    params: dict
    fn: Callable = field(repr=False, compare=False)
    b_max: float = math.inf

    def __call__(self, b2, s):
        return self.fn(b2, s)


@dataclass(frozen=True)
class PhiJet:
    phi: float
    phi1: float
    phi2: float
    phi11: float
    phi12: float
    phi22: float
    psi: float
    psi1: float
    psi2: float


def _uv_to_bs(fn: Callable) -> Callable:
    """Lift a function of (u, v) to one of (b^2, s)."""
    return lambda b2, s: fn(b2 - s * s, s)


# -- family constructors ------------------------------------------------------

def funk(sigma: float = -0.25, C: float = 1.0, sign: int = 1) -> PhiFamily:
    """1/(2 sqrt(-sigma)) * 1/(sqrt(C - b^2 + s^2) - sign*s); sign=+1 is the Funk form."""
    if sigma >= 0:
        raise ValueError("first-form solutions need sigma < 0")
    k = 1.0 / (2.0 * math.sqrt(-sigma))

    def fn(b2, s):
        return k / (de.sqrt(C - b2 + s * s) - sign * s)

    return PhiFamily("Funk", {"sigma": sigma, "C": C, "sign": sign}, fn, b_max=math.sqrt(C))


def quartic_q2(u, sigma: float, C: float, D: float, root: int = 1):
    """One branch of q^2 solving D^2 q^4 + (u - C) q^2 - sigma = 0 (generic over jets)."""
    if D == 0:
        return sigma / (u - C)
    disc = (u - C) * (u - C) + 4 * D * D * sigma
    if de.value(disc) < 0:
        raise BranchUndefined(f"quartic discriminant {de.value(disc)} < 0 at u={de.value(u)}")
    return (-(u - C) + root * de.sqrt(disc)) / (2 * D * D)


def solved_q(sigma: float, C: float, D: float, root: int = 1, qsign: int = 1) -> PhiFamily:
    """phi = q / (q^2 (D q + v)^2 + sigma) with q(u) a root of the quartic."""

    def q_of(u):
        Q = quartic_q2(u, sigma, C, D, root)
        if de.value(Q) <= 0:
            raise BranchUndefined(f"q^2 = {de.value(Q)} is not positive at u={de.value(u)}")
        return qsign * de.sqrt(Q)

    def fn(b2, s):
        q = q_of(b2 - s * s)
        t = D * q + s
        return q / (q * q * t * t + sigma)

    return PhiFamily("SolvedQ", {"sigma": sigma, "C": C, "D": D, "root": root, "qsign": qsign}, fn)


def square_b() -> PhiFamily:
    return PhiFamily("SquareB", {}, lambda b2, s: (de.sqrt(b2) + s) ** 2)


def bryant() -> PhiFamily:
    """Re 1/(sqrt(1 + 2i + b^2 - s^2) + i s), principal square root."""

    def fn(b2, s):
        return de.real(1.0 / (de.sqrt((1 + 2j) + b2 - s * s) + 1j * s))

    return PhiFamily("Bryant", {}, fn)


def shen_eps(eps: float, verbatim: bool = False) -> PhiFamily:
    """Half difference of a Funk term and an eps-scaled Funk term.

    The default uses ``1 - eps^2 b^2`` in the second denominator, which is the
    scaled Funk term.  ``verbatim=True`` uses ``1 - eps b^2`` there instead; that
    variant does not solve the flatness PDE and is kept for comparison.
    """
    if not 0 < abs(eps) < 1:
        raise ValueError("need 0 < |eps| < 1")
    k = 1 if verbatim else 2

    def fn(b2, s):
        first = (de.sqrt(1 - b2 + s * s) + s) / (1 - b2)
        e2 = eps * eps
        second = (eps * de.sqrt(1 - e2 * b2 + e2 * s * s) + e2 * s) / (1 - eps**k * b2)
        return 0.5 * (first - second)

    return PhiFamily("ShenEps", {"eps": eps, "verbatim": verbatim}, fn, b_max=1.0)


def two_param_linear(p: Callable, sigma: float, sign: int = 1) -> PhiFamily:
    """1/(p(u) + sign*2 sqrt(-sigma) v)."""
    r = 2 * math.sqrt(-sigma)
    fn = _uv_to_bs(lambda u, v: 1.0 / (de.apply(p, u) + sign * r * v))
    return PhiFamily("TwoParam", {"form": "linear", "sigma": sigma, "sign": sign}, fn)


def two_param_quadratic(p: Callable, q: Callable, sigma: float) -> PhiFamily:
    """q(u) / ((p(u) + q(u) v)^2 + sigma)."""

    def g(u, v):
        pu, qu = de.apply(p, u), de.apply(q, u)
        t = pu + qu * v
        return qu / (t * t + sigma)

    return PhiFamily("TwoParam", {"form": "quadratic", "sigma": sigma}, _uv_to_bs(g))


def custom(fn: Callable, name: str = "custom", **params) -> PhiFamily:
    return PhiFamily("Custom", {"name": name, **params}, fn)


# -- evaluation ---------------------------------------------------------------

S_TOL = 1e-12


def _check_bs(family: PhiFamily, b2: float, s: float) -> None:
    if b2 < 0:
        raise DomainViolation(f"b^2 = {b2} < 0")
    b = math.sqrt(b2)
    if abs(s) > b * (1 + S_TOL) + S_TOL:
        raise DomainViolation(f"|s| = {abs(s)} exceeds b = {b}")
    if b >= family.b_max:
        raise DomainViolation(f"b = {b} outside family range b < {family.b_max}")


def eval_phi(family: PhiFamily, b2: float, s: float) -> float:
    _check_bs(family, b2, s)
    val = family.fn(float(b2), float(s))
    if isinstance(val, complex):
        val = val.real
    if not math.isfinite(val) or val <= 0:
        raise DomainViolation(f"phi = {val} is not positive at (b^2, s) = ({b2}, {s})")
    return float(val)


def phi_taylor(family: PhiFamily, b2: float, s: float, order: int = 3) -> de.Jet:
    t = de.taylor(lambda z: family.fn(z[0], z[1]), [b2, s], order)
    if not t.is_finite():
        raise de.NonFiniteValue(f"phi expansion not finite at ({b2}, {s})")
    return t


def psi_taylor(T: de.Jet, s: float) -> de.Jet:
    """psi = (phi_2 + 2 s phi_1) / (2 phi), one order below ``T``."""
    sv = de.variables([0.0, s], T.order - 1)[1]
    return (T.deriv(1) + 2 * sv * T.deriv(0)) / (2 * T.truncate(T.order - 1))


def phi_jet(family: PhiFamily, b2: float, s: float) -> PhiJet:
    T = phi_taylor(family, b2, s, 3)
    P = psi_taylor(T, s)
    return PhiJet(
        phi=T.partial(()), phi1=T.partial((0,)), phi2=T.partial((1,)),
        phi11=T.partial((0, 0)), phi12=T.partial((0, 1)), phi22=T.partial((1, 1)),
        psi=P.partial(()), psi1=P.partial((0,)), psi2=P.partial((1,)),
    )


def residual_pde(family: PhiFamily, b2: float, s: float) -> float:
    """phi_22 - 2(phi_1 - s phi_12); zero exactly when F is projectively flat."""
    T = phi_taylor(family, b2, s, 2)
    return T.partial((1, 1)) - 2 * (T.partial((0,)) - s * T.partial((0, 1)))


def residual_pde2(family: PhiFamily, b2: float, s: float, kappa: float, mu: float, K: float) -> float:
    j = phi_jet(family, b2, s)
    return ((kappa - mu * b2) * (j.psi**2 - (j.psi2 + 2 * s * j.psi1))
            + mu * s * j.psi + mu - K * j.phi**2)


def _f_uv(family: PhiFamily, u: float, v: float) -> de.Jet:
    """Jet of 1/sqrt(phi) in (u, v)."""

    def f(z):
        return 1.0 / de.sqrt(family.fn(z[0] + z[1] * z[1], z[1]))

    return de.taylor(f, [u, v], 2)


def residual_pde5(family: PhiFamily, u: float, v: float, kappa: float, mu: float, K: float) -> float:
    if u + v * v <= 0:
        raise DomainViolation("u + v^2 must be positive")
    f = _f_uv(family, u, v)
    f0 = f.partial(())
    return ((kappa - mu * (u + v * v)) * f.partial((1, 1)) - mu * v * f.partial((1,))
            + mu * f0 - K * f0**-3)


def residual_pde6(family: PhiFamily, u: float, v: float, tau: float) -> float:
    f = _f_uv(family, u, v)
    f0 = f.partial(())
    return (u + v * v) * f.partial((1, 1)) + v * f.partial((1,)) - f0 - tau * f0**-3


def eval_eqn01_residual(family: PhiFamily, u: float, v: float, sigma: float) -> float:
    f = _f_uv(family, u, v)
    return f.partial((1, 1)) - sigma * f.partial(()) ** -3


# -- general solution of the projective-flatness equation ----------------------

QUAD_TOL = 1e-10


def general_solution(f: Callable, g: Callable, tol: float = QUAD_TOL) -> PhiFamily:
    """phi = f(b^2 - s^2) + 2 s int_0^s f'(b^2 - t^2) dt + g(b^2) s.

    The integral is rewritten as ``s * int_0^1 f'(b^2 - s^2 t^2) dt`` and
    integrated adaptively on the whole jet coefficient vector, so derivatives
    of phi stay exact up to the quadrature tolerance.
    """

    def integral(b2, s):
        def integrand(t):
            val = de.apply(f, b2 - s * s * (t * t), 1)
            return val.c if isinstance(val, de.Jet) else np.atleast_1d(val)

        res, err = quad_vec(integrand, 0.0, 1.0, epsabs=tol, epsrel=0.0, norm="max")
        if not err <= tol:
            raise QuadratureFailure(f"quadrature error {err} exceeds {tol}")
        if isinstance(b2, de.Jet) or isinstance(s, de.Jet):
            ref = b2 if isinstance(b2, de.Jet) else s
            return de.Jet(np.asarray(res, dtype=float), ref.nvars, ref.order)
        return float(res[0])

    def fn(b2, s):
        return de.apply(f, b2 - s * s) + 2 * s * s * integral(b2, s) + de.apply(g, b2) * s

    return PhiFamily("General", {"f": getattr(f, "__name__", "f"), "g": getattr(g, "__name__", "g")}, fn)


# -- quartic for the solved-q families -----------------------------------------

def solve_q_quartic(u: float, sigma: float, C: float, D: float) -> list[float]:
    """Real nonzero roots of D^2 q^4 + (u - C) q^2 - sigma = 0, ascending."""
    B = u - C
    A = D * D
    # a subnormal D^2 puts the large root beyond float range; keep the D = 0 root only
    if A < sys.float_info.min:
        Qs = [] if B == 0 else [sigma / B]
    else:
        disc = B * B + 4 * A * sigma
        if disc < 0:
            Qs = []
        elif disc == 0:
            Qs = [-B / (2 * A)]
        else:
            r = math.sqrt(disc)
            # numerically stable pair
            t = -0.5 * (B + math.copysign(r, B)) if B != 0 else 0.5 * r
            Qs = [t / A, -sigma / t] if t != 0 else [r / (2 * A), -r / (2 * A)]
    roots = set()
    for Q in Qs:
        if Q > 0:
            q = math.sqrt(Q)
            roots.update((q, -q))
    roots = sorted(roots)
    if not roots:
        raise NoRealRoot(f"no real nonzero q at u={u} (sigma={sigma}, C={C}, D={D})")
    for q in roots:
        Q = q * q
        lead = A * Q * Q
        assert abs(lead + B * Q - sigma) <= 1e-12 * max(1.0, lead, abs(B) * Q, abs(sigma))
    return roots


# -- p, q, and the kappa = 0 solution formula ------------------------------------

def eval_solution3(p, q, tau: float, u, v, sign: int = -1):
    """2 q (sqrt(u+v^2) + sign v)^2 / ([q (sqrt(u+v^2) + sign v)^2 + p]^2 + tau)."""
    if de.value(u + v * v) <= 0:
        raise DomainViolation("u + v^2 must be positive")
    w = de.sqrt(u + v * v) + sign * v
    w2 = w * w
    t = q * w2 + p
    den = t * t + tau
    if de.value(den) == 0:
        raise DomainViolation("zero denominator in solution formula")
    return 2 * q * w2 / den


def pq_constant(tau: float, C: float, signs: tuple[int, int, int] = (1, 1, 1)):
    """p = +-sqrt(-tau), q = +-(C +- sqrt(C^2 + 8 p u))^2 / (4 u^2)."""
    sp, sq, sr = signs
    if tau > 0:
        raise BranchUndefined("constant-p branch needs tau <= 0")
    p0 = sp * math.sqrt(-tau)

    def p(u):
        return p0 + 0 * u

    def q(u):
        rad = C * C + 8 * p0 * u
        if de.value(rad) < 0:
            raise BranchUndefined(f"C^2 + 8pu = {de.value(rad)} < 0")
        t = C + sr * de.sqrt(rad)
        return sq * t * t / (4 * u * u)

    return p, q


def pq_general(tau: float, C: float, D: float, signs: tuple[int, int, int] = (1, 1, 1)):
    """p from u = C(p^2+tau) +- sqrt(D) p sqrt(p^2+tau), q from the quadratic it satisfies.

    q solves u^2 p' q^2 - 2(p^2 + tau - u p p') q + (p^2 + tau) p' = 0, so its
    discriminant carries (p')^2.
    """
    sp, sq, sr = signs
    E = C * C - D
    if E == 0:
        raise BranchUndefined("C^2 - D must be nonzero")

    def p(u):
        w = C * tau - 2 * u
        inner = D * w * w - D * E * tau * tau
        if de.value(inner) < 0:
            raise BranchUndefined(f"inner radicand {de.value(inner)} < 0 at u={de.value(u)}")
        num = -E * tau - C * w + sr * de.sqrt(inner)
        P2 = num / (2 * E)
        if de.value(P2) < 0:
            raise BranchUndefined(f"p^2 = {de.value(P2)} < 0 at u={de.value(u)}")
        return sp * de.sqrt(P2)

    return p, q_from_p(p, tau, sq)


def q_from_p(p: Callable, tau: float, sign: int = 1) -> Callable:
    def q(u):
        pu = de.apply(p, u)
        dp = de.apply(p, u, 1)
        A = pu * pu + tau - u * pu * dp
        rad = A * A - (pu * pu + tau) * u * u * dp * dp
        if de.value(rad) < 0:
            raise BranchUndefined(f"q radicand {de.value(rad)} < 0 at u={de.value(u)}")
        if de.value(dp) == 0:
            raise BranchUndefined("p' = 0; use the constant-p branch")
        return (A + sign * de.sqrt(rad)) / (u * u * dp)

    return q


def family3_pq(u: float, tau: float, branch: str, C: float, D: float = 0.0,
               signs: tuple[int, int, int] = (1, 1, 1)) -> tuple[float, float]:
    """(p(u), q(u)) for the ``"constant"`` or ``"general"`` branch."""
    if branch == "constant":
        p, q = pq_constant(tau, C, signs)
    elif branch == "general":
        p, q = pq_general(tau, C, D, signs)
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if u == 0:
        raise BranchUndefined("u = 0")
    return float(de.apply(p, u)), float(de.apply(q, u))


def kappa_zero(tau: float, p: Callable, q: Callable, sign: int = -1, **params) -> PhiFamily:
    def fn(b2, s):
        u = b2 - s * s
        return eval_solution3(de.apply(p, u), de.apply(q, u), tau, u, s, sign)

    return PhiFamily("KappaZero", {"tau": tau, "sign": sign, **params}, fn)


def residual_ode_system(p_fn: Callable, q_fn: Callable, u: float, tau: float) -> tuple[float, float, float]:
    uj = de.variables([u], 1)[0]
    P = de.apply(p_fn, uj)
    Q = de.apply(q_fn, uj)
    p, dp = de.value(P), P.partial((0,))
    q, dq = de.value(Q), Q.partial((0,))
    r1 = u * q * q * dp + (p * p + tau) * dq
    r2 = q * dp - 2 * p * dq - u * q * dq - 2 * q * q
    r3 = u * u * dp * q * q - 2 * (p * p + tau - u * p * dp) * q + (p * p + tau) * dp
    return float(r1), float(r2), float(r3)


# -- regularity ---------------------------------------------------------------

@dataclass
class RegularityReport:
    min_first: float
    min_second: float
    first_violation: tuple[float, float] | None
    singular_pm_b: bool
    grid: tuple[int, int]

    @property
    def regular(self) -> bool:
        return self.first_violation is None


def regularity_check(family: PhiFamily, b_range: tuple[float, float], grid: tuple[int, int] = (20, 41),
                     edge_tol: float = 1e-9) -> RegularityReport:
    """Scan phi - s phi_2 and phi - s phi_2 + (b^2 - s^2) phi_22 over |s| <= b.

    Violations are looked for strictly inside |s| < b.  The endpoints s = +-b
    are scanned separately: ``singular_pm_b`` is set when both quantities
    vanish (or phi cannot be expanded) there, as for the square-type metrics.
    """
    m1 = m2 = math.inf
    violation = None
    singular = False
    for b in np.linspace(b_range[0], b_range[1], grid[0]):
        if b <= 0:
            continue
        for k, s in enumerate(np.linspace(-b, b, grid[1])):
            edge = k in (0, grid[1] - 1)
            try:
                T = phi_taylor(family, b * b, s, 2)
                phi, p2, p22 = T.partial(()), T.partial((1,)), T.partial((1, 1))
                q1 = phi - s * p2
                q2 = q1 + (b * b - s * s) * p22
            except (DomainViolation, ZeroDivisionError, de.NonFiniteValue):
                if edge:
                    singular = True
                    continue
                q1 = q2 = -math.inf
            if edge:
                singular |= abs(q1) <= edge_tol and abs(q2) <= edge_tol
                continue
            m1, m2 = min(m1, q1), min(m2, q2)
            if violation is None and (q1 <= 0 or q2 <= 0):
                violation = (float(b * b), float(s))
    return RegularityReport(float(m1), float(m2), violation, singular, grid)
