"""Space-form charts, their closed conformal 1-forms, and generic spray/curvature machinery.

The chart is

    alpha = sqrt((1 + mu|x|^2)|y|^2 - mu<x,y>^2) / (1 + mu|x|^2)
    beta  = (lam<x,y> + (1 + mu|x|^2)<a,y> - mu<a,x><x,y>) / (1 + mu|x|^2)^(3/2)

which has constant sectional curvature ``mu`` and ``b_{i|j} = c(x) a_ij``.

The spray and curvature helpers here take an *energy* ``E(x, y)`` (``F^2`` or
``alpha^2``) written with the generic operators of :mod:`diffengine`, so the
same code path serves Riemannian charts, deformed metrics and Finsler metrics.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import diffengine as de
from .errors import DomainViolation, SingularMetric

Energy = Callable[[Sequence, Sequence], object]

W_MARGIN = 0.01


@dataclass(frozen=True)
class ProjectiveChart:
    n: int
    mu: float
    lam: float
    a: tuple[float, ...]
    kappa_zero: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("dimension must be at least 2")
        object.__setattr__(self, "a", tuple(float(v) for v in self.a))
        if len(self.a) != self.n:
            raise ValueError(f"a has {len(self.a)} components, expected {self.n}")
        if self.kappa_zero and abs(self.lam**2 + self.mu * sum(v * v for v in self.a)) > 1e-12:
            raise ValueError("kappa_zero chart requires lam^2 + mu|a|^2 = 0")

    @property
    def kappa(self) -> float:
        return self.lam**2 + self.mu * sum(v * v for v in self.a)

    # -- scalar pieces, generic over floats and jets --------------------------
    def w(self, x):
        return 1.0 + self.mu * de.dot(x, x)

    def alpha2(self, x, y):
        w = self.w(x)
        xy = de.dot(x, y)
        return (w * de.dot(y, y) - self.mu * xy * xy) / (w * w)

    def alpha(self, x, y):
        w = self.w(x)
        xy = de.dot(x, y)
        rad = w * de.dot(y, y) - self.mu * xy * xy
        if de.value(rad) <= 0:
            raise DomainViolation("alpha radicand is non-positive")
        return de.sqrt(rad) / w

    def b_components(self, x) -> list:
        """Euclidean components b_i of beta."""
        w = self.w(x)
        ax = de.dot(self.a, x)
        scale = 1.0 / (w * de.sqrt(w))
        return [(self.lam * x[i] + w * self.a[i] - self.mu * ax * x[i]) * scale
                for i in range(self.n)]

    def beta(self, x, y):
        w = self.w(x)
        num = self.lam * de.dot(x, y) + w * de.dot(self.a, y) - self.mu * de.dot(self.a, x) * de.dot(x, y)
        return num / (w * de.sqrt(w))

    def b2(self, x):
        """Squared alpha-length of beta, from the closed-form inverse a^ij = w(delta + mu x x^T)."""
        w = self.w(x)
        b = self.b_components(x)
        xb = de.dot(x, b)
        return w * (de.dot(b, b) + self.mu * xb * xb)

    def c(self, x):
        return (self.lam - self.mu * de.dot(self.a, x)) / de.sqrt(self.w(x))

    def admissible(self, x, margin: float = W_MARGIN) -> bool:
        return float(de.value(self.w(x))) > margin


def check_point(chart: ProjectiveChart, x) -> None:
    if not chart.admissible(x):
        raise DomainViolation(f"1 + mu|x|^2 <= {W_MARGIN} at x={list(x)}")


def alpha_eval(chart: ProjectiveChart, x, y) -> float:
    check_point(chart, x)
    return float(chart.alpha(np.asarray(x, float), np.asarray(y, float)))


def beta_eval(chart: ProjectiveChart, x, y) -> float:
    check_point(chart, x)
    return float(chart.beta(np.asarray(x, float), np.asarray(y, float)))


# -- generic energy machinery -------------------------------------------------

def energy_jet(energy: Energy, x, y, order: int) -> de.Jet:
    """Jet of ``energy`` in the 2n variables (x, y)."""
    n = len(x)
    z = de.variables(np.concatenate([x, y]), order)
    E = energy(z[:n], z[n:])
    if not isinstance(E, de.Jet):
        E = de.constant_like(z[0], E)
    if not E.is_finite():
        raise de.NonFiniteValue("energy expansion is not finite")
    return E


def metric_jets(E: de.Jet, n: int) -> list[list[de.Jet]]:
    """g_ij = (1/2) E_{y^i y^j} as jets two orders below ``E``."""
    Ey = [E.deriv(n + i) for i in range(n)]
    return [[0.5 * Ey[i].deriv(n + j) for j in range(n)] for i in range(n)]


def spray_jets(energy: Energy, x, y, order: int = 2) -> list[de.Jet]:
    """Jets of G^i = 1/4 g^il ([E]_{x^k y^l} y^k - [E]_{x^l}) around (x, y)."""
    n = len(x)
    E = energy_jet(energy, x, y, order + 2)
    z = de.variables(np.concatenate([x, y]), order)
    Ey = [E.deriv(n + l) for l in range(n)]
    g = [[0.5 * Ey[i].deriv(n + j) for j in range(n)] for i in range(n)]
    rhs = []
    for l in range(n):
        acc = -E.deriv(l).truncate(order)
        for k in range(n):
            acc = acc + Ey[l].deriv(k) * z[n + k]
        rhs.append(0.25 * acc)
    return de.solve(g, rhs)


def spray_values(energy: Energy, x, y) -> np.ndarray:
    return np.array([de.value(G) for G in spray_jets(energy, x, y, order=0)])


def curvature_from_spray(G: Sequence[de.Jet], y) -> np.ndarray:
    """R^i_j from order-2 jets of the spray coefficients in (x, y)."""
    n = len(y)
    Gv = np.array([Gi.partial(()) for Gi in G])
    R = np.zeros((n, n), dtype=Gv.dtype)
    for i in range(n):
        Gi = G[i]
        for j in range(n):
            r = 2 * Gi.partial((j,))
            for k in range(n):
                r -= y[k] * Gi.partial((k, n + j))
                r += 2 * Gv[k] * Gi.partial((n + k, n + j))
                r -= Gi.partial((n + k,)) * G[k].partial((n + j,))
            R[i, j] = r
    return R


def curvature_from_spray_fd(spray: Callable, x, y, cfg: de.DiffConfig = de.FD) -> np.ndarray:
    """R^i_j with every derivative of G taken by central differences."""
    n = len(x)
    z0 = np.concatenate([x, y])
    comps = [lambda z, i=i: spray(z[:n], z[n:])[i] for i in range(n)]
    Gv = spray(x, y)
    d = lambda i, idx: de.fd_partial(comps[i], z0, idx, cfg)
    dy = np.array([[d(i, (n + k,)) for k in range(n)] for i in range(n)])
    R = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            r = 2 * d(i, (j,))
            for k in range(n):
                r -= y[k] * d(i, (k, n + j))
                r += 2 * Gv[k] * d(i, (n + k, n + j))
                r -= dy[i, k] * dy[k, j]
            R[i, j] = r
    return R


def riemann_of_energy(energy: Energy, x, y) -> np.ndarray:
    return curvature_from_spray(spray_jets(energy, x, y, 2), y)


@dataclass(frozen=True)
class MetricFrame:
    """a_ij, its inverse, and the Christoffel symbols Gamma^i_jk at a point."""
    a_ij: np.ndarray
    a_inv: np.ndarray
    christoffel: np.ndarray


def metric_frame(energy: Energy, x, y) -> MetricFrame:
    n = len(x)
    E = energy_jet(energy, np.asarray(x, float), np.asarray(y, float), 3)
    g = metric_jets(E, n)
    A = np.array([[g[i][j].value for j in range(n)] for i in range(n)])
    if np.any(np.linalg.eigvalsh(A) <= 0):
        raise SingularMetric("a_ij is not positive definite")
    # dA[l, k, j] = d_j a_lk
    dA = np.array([[[g[l][k].partial((j,)) for j in range(n)] for k in range(n)] for l in range(n)])
    Ainv = np.linalg.inv(A)
    # lowered[l, j, k] = d_j a_lk + d_k a_jl - d_l a_jk
    lowered = dA.transpose(0, 2, 1) + dA - dA.transpose(2, 0, 1)
    gam = 0.5 * np.einsum("il,ljk->ijk", Ainv, lowered)
    return MetricFrame(A, Ainv, gam)


def covariant_oneform(frame: MetricFrame, oneform: Callable, x, y) -> tuple[np.ndarray, np.ndarray]:
    """(b_i, b_{i|j}) for a 1-form given as a function linear in y."""
    n = len(x)
    B = energy_jet(oneform, np.asarray(x, float), np.asarray(y, float), 2)
    bj = [B.deriv(n + i) for i in range(n)]
    b = np.array([bi.value for bi in bj])
    db = np.array([[bj[i].partial((j,)) for j in range(n)] for i in range(n)])
    bij = db - np.einsum("kij,k->ij", frame.christoffel, b)
    return b, bij


@dataclass(frozen=True)
class AlphaTensors:
    a_ij: np.ndarray
    a_inv: np.ndarray
    christoffel: np.ndarray
    alpha_spray: np.ndarray
    theta: float
    collinearity: float = field(default=0.0)


def alpha_tensors(chart: ProjectiveChart, x, y) -> AlphaTensors:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    check_point(chart, x)
    fr = metric_frame(chart.alpha2, x, y)
    G = 0.5 * np.einsum("ijk,j,k->i", fr.christoffel, y, y)
    theta = float(G @ y / (y @ y))
    resid = float(np.linalg.norm(G - theta * y))
    return AlphaTensors(fr.a_ij, fr.a_inv, fr.christoffel, G, theta, resid)


@dataclass(frozen=True)
class BetaData:
    b_i: np.ndarray
    b_up: np.ndarray
    b2: float
    bij: np.ndarray
    r_ij: np.ndarray
    s_ij: np.ndarray
    r00: float
    r0: float
    s0: float
    r: float
    r_up: np.ndarray
    s_up: np.ndarray
    s_up0: np.ndarray
    c: float


def oneform_data(frame: MetricFrame, oneform: Callable, x, y) -> BetaData:
    y = np.asarray(y, float)
    b, bij = covariant_oneform(frame, oneform, x, y)
    Ainv = frame.a_inv
    b_up = Ainv @ b
    r_ij = 0.5 * (bij + bij.T)
    s_ij = 0.5 * (bij - bij.T)
    r_i = b_up @ r_ij
    s_i = b_up @ s_ij
    A = frame.a_ij
    c = float(np.sum(bij * A) / np.sum(A * A))
    return BetaData(
        b_i=b, b_up=b_up, b2=float(b @ b_up), bij=bij, r_ij=r_ij, s_ij=s_ij,
        r00=float(y @ r_ij @ y), r0=float(r_i @ y), s0=float(s_i @ y), r=float(b_up @ r_i),
        r_up=Ainv @ r_i, s_up=Ainv @ s_i, s_up0=Ainv @ (s_ij @ y), c=c,
    )


def beta_data(chart: ProjectiveChart, x, y) -> BetaData:
    x = np.asarray(x, float)
    check_point(chart, x)
    return oneform_data(metric_frame(chart.alpha2, x, y), chart.beta, x, y)


def alpha_riemann(chart: ProjectiveChart, x, y) -> np.ndarray:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    check_point(chart, x)
    return riemann_of_energy(chart.alpha2, x, y)


def space_form_target(chart: ProjectiveChart, x, y) -> np.ndarray:
    """mu (alpha^2 delta^i_j - y^i y_j) with y_j lowered by a_ij at x."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    A = metric_frame(chart.alpha2, x, y).a_ij
    return chart.mu * (chart.alpha2(x, y) * np.eye(chart.n) - np.outer(y, A @ y))
