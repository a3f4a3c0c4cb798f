"""General (alpha, beta)-metrics F = alpha * phi(b^2, beta/alpha) over a projective chart.

Sprays are computed two ways (directly from F^2, and from the closed
expression in terms of phi and the covariant data of beta) and flag curvature
three ways (Riemann tensor fit, projective factor, and the psi formula).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import diffengine as de
from . import phisolver as ps
from .errors import DegenerateFlag, DomainViolation, NotProjectivelyFlat, SingularDirection, SingularMetric
from .riemann import (ProjectiveChart, alpha_tensors, beta_data, check_point, curvature_from_spray,
                      curvature_from_spray_fd, spray_jets, spray_values)

SINGULAR_EPS = 1e-8
COLLINEAR_TOL = 1e-7


@dataclass(frozen=True)
class GeneralABMetric:
    chart: ProjectiveChart
    family: ps.PhiFamily
    expected_K: float | None = None
    singular_directions: str = "none"
    name: str = ""

    def __post_init__(self):
        if self.singular_directions not in ("none", "pm_b"):
            raise ValueError("singular_directions must be 'none' or 'pm_b'")

    @property
    def n(self) -> int:
        return self.chart.n

    def F(self, x, y):
        ch = self.chart
        a = ch.alpha(x, y)
        return a * self.family(ch.b2(x), ch.beta(x, y) / a)

    def energy(self, x, y):
        f = self.F(x, y)
        return f * f

    def b2_s(self, x, y) -> tuple[float, float]:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        return float(self.chart.b2(x)), float(self.chart.beta(x, y) / self.chart.alpha(x, y))


def _check(m: GeneralABMetric, x, y) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    check_point(m.chart, x)
    b2, s = m.b2_s(x, y)
    ps._check_bs(m.family, b2, s)
    if m.singular_directions == "pm_b" and abs(s) >= (1 - SINGULAR_EPS) * math.sqrt(b2):
        raise SingularDirection(f"|s| = {abs(s)} is within {SINGULAR_EPS} of b = {math.sqrt(b2)}")
    return x, y


def metric_eval(m: GeneralABMetric, x, y) -> float:
    x, y = _check(m, x, y)
    val = float(m.F(x, y))
    if not val > 0:
        raise DomainViolation(f"F = {val} is not positive")
    return val


def fundamental_tensor(m: GeneralABMetric, x, y) -> np.ndarray:
    x, y = _check(m, x, y)
    g = 0.5 * de.jet2(lambda v: m.energy(x, v), y).hess
    ev = np.linalg.eigvalsh(g)
    if np.min(np.abs(ev)) <= 1e-13 * np.max(np.abs(ev)):
        raise SingularMetric(f"fundamental tensor is singular (eigenvalues {ev})")
    return g


def spray_direct(m: GeneralABMetric, x, y) -> np.ndarray:
    x, y = _check(m, x, y)
    return spray_values(m.energy, x, y)


@dataclass(frozen=True)
class SprayTerms:
    Q: float
    R: float
    Theta: float
    Psi: float
    Omega: float
    Pi: float


def spray_terms(j: ps.PhiJet, b2: float, s: float) -> SprayTerms:
    d1 = j.phi - s * j.phi2
    d2 = d1 + (b2 - s * s) * j.phi22
    if d1 == 0 or d2 == 0:
        raise SingularMetric("phi - s phi_2 or phi - s phi_2 + (b^2 - s^2) phi_22 vanishes")
    Pi = (d1 * j.phi12 - s * j.phi1 * j.phi22) / (d1 * d2)
    return SprayTerms(
        Q=j.phi2 / d1,
        R=j.phi1 / d1,
        Theta=(d1 * j.phi2 - s * j.phi * j.phi22) / (2 * j.phi * d2),
        Psi=j.phi22 / (2 * d2),
        Omega=2 * j.phi1 / j.phi - (s * j.phi + (b2 - s * s) * j.phi2) / j.phi * Pi,
        Pi=Pi,
    )


def spray_formula(m: GeneralABMetric, x, y) -> np.ndarray:
    """G^i assembled from the alpha spray, the covariant data of beta, and phi's derivatives."""
    x, y = _check(m, x, y)
    at = alpha_tensors(m.chart, x, y)
    bd = beta_data(m.chart, x, y)
    alpha = math.sqrt(y @ at.a_ij @ y)
    s = float(bd.b_i @ y) / alpha
    t = spray_terms(ps.phi_jet(m.family, bd.b2, s), bd.b2, s)
    common = -2 * alpha * t.Q * bd.s0 + bd.r00 + 2 * alpha**2 * t.R * bd.r
    return (at.alpha_spray + alpha * t.Q * bd.s_up0
            + (t.Theta * common + alpha * t.Omega * (bd.r0 + bd.s0)) * y / alpha
            + (t.Psi * common + alpha * t.Pi * (bd.r0 + bd.s0)) * bd.b_up
            - alpha**2 * t.R * (bd.r_up + bd.s_up))


def riemann_tensor(m: GeneralABMetric, x, y, cfg: de.DiffConfig = de.JET) -> np.ndarray:
    """R^i_j of F.  With ``cfg.mode == "central-fd"`` the derivatives of G are finite differences."""
    x, y = _check(m, x, y)
    if cfg.mode == "forward-jet":
        return curvature_from_spray(spray_jets(m.energy, x, y, 2), y)
    return curvature_from_spray_fd(lambda xx, yy: spray_values(m.energy, xx, yy), x, y, cfg)


def _F_and_Fy(m: GeneralABMetric, x, y) -> tuple[float, np.ndarray]:
    j = de.jet2(lambda v: m.F(x, v), y)
    return float(j.value), j.grad


def curvature_target(m: GeneralABMetric, x, y) -> tuple[np.ndarray, float]:
    """(F^2 (delta^i_j - F^-1 F_{y^j} y^i), F)."""
    F, Fy = _F_and_Fy(m, x, y)
    return F * F * np.eye(m.n) - F * np.outer(y, Fy), F


def flag_curvature(m: GeneralABMetric, x, y, u, R: np.ndarray | None = None,
                   g: np.ndarray | None = None) -> float:
    x, y = _check(m, x, y)
    u = np.asarray(u, float)
    if g is None:
        g = fundamental_tensor(m, x, y)
    if R is None:
        R = riemann_tensor(m, x, y)
    gyy, guu, gyu = y @ g @ y, u @ g @ u, y @ g @ u
    den = gyy * guu - gyu * gyu
    if den < 1e-12 * abs(gyy * guu):
        raise DegenerateFlag("y and u are (nearly) parallel")
    return float(u @ g @ (R @ u) / den)


@dataclass(frozen=True)
class CurvatureFit:
    K_fit: float
    residual: float
    route: str = "tensor"

    def __post_init__(self):
        if self.residual < 0:
            raise ValueError("residual must be non-negative")


def constant_K_fit(m: GeneralABMetric, x, y, R: np.ndarray | None = None) -> CurvatureFit:
    """Least-squares K in R^i_j = K F^2 (delta^i_j - F^-1 F_{y^j} y^i).

    For an expected K of zero the residual is the absolute ||R|| / (F^2 n),
    otherwise ||R - K T|| / ||R||.
    """
    x, y = _check(m, x, y)
    if R is None:
        R = riemann_tensor(m, x, y)
    T, F = curvature_target(m, x, y)
    K = float(np.sum(R * T) / np.sum(T * T))
    if m.expected_K == 0:
        resid = float(np.linalg.norm(R) / (F * F * m.n))
    else:
        resid = float(np.linalg.norm(R - K * T) / np.linalg.norm(R))
    return CurvatureFit(K, resid, "tensor")


def projective_factor_K(m: GeneralABMetric, x, y) -> tuple[float, float]:
    """(P, K) from P = F_{x^k} y^k / (2F), K = (P^2 - P_{x^k} y^k) / F^2.

    Derivatives along x + t y are enough: d/dt F = F_{x^k} y^k and
    d^2/dt^2 F = F_{x^k x^l} y^k y^l.
    """
    t = de.taylor(lambda z: m.F([x[i] + z[0] * y[i] for i in range(m.n)], y), [0.0], 2)
    F, D1, D2 = t.partial(()), t.partial((0,)), t.partial((0, 0))
    P = D1 / (2 * F)
    Px = D2 / (2 * F) - D1 * D1 / (2 * F * F)
    return float(P), float((P * P - Px) / (F * F))


def projective_K(m: GeneralABMetric, x, y, check: bool = True) -> float:
    x, y = _check(m, x, y)
    if check:
        G = spray_values(m.energy, x, y)
        off = G - (G @ y) / (y @ y) * y
        if np.linalg.norm(off) > COLLINEAR_TOL * max(np.linalg.norm(G), 1e-300) and np.linalg.norm(G) > 1e-14:
            raise NotProjectivelyFlat(f"spray is not collinear with y (residual {np.linalg.norm(off):.3e})")
    return projective_factor_K(m, x, y)[1]


def psi_K(m: GeneralABMetric, x, y) -> float:
    """K = (mu + mu s psi + c^2 [psi^2 - (psi_2 + 2 s psi_1)]) / phi^2."""
    x, y = _check(m, x, y)
    bd = beta_data(m.chart, x, y)
    at_a = m.chart.alpha(x, y)
    s = float(bd.b_i @ y) / float(at_a)
    j = ps.phi_jet(m.family, bd.b2, s)
    mu = m.chart.mu
    return float((mu + mu * s * j.psi + bd.c**2 * (j.psi**2 - (j.psi2 + 2 * s * j.psi1))) / j.phi**2)
