"""Deformations that flatten a space-form alpha while keeping beta closed and conformal (or parallel),
and the matching transfer of phi solutions between the flat and curved settings.

The deformed metrics are wrapped evaluators over the original chart, so their
curvature and covariant derivatives go through the same generic pipeline as
any other quadratic energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import diffengine as de
from . import phisolver as ps
from .errors import DomainViolation, UnsupportedSignature
from .riemann import ProjectiveChart, check_point, metric_frame, oneform_data, riemann_of_energy


@dataclass(frozen=True)
class DeformedPair:
    """abar_eval(x, y) = abar^2, bbar_eval(x, y) = bbar, bbar2(x) = |bbar|^2 measured by abar."""
    abar_eval: Callable
    bbar_eval: Callable
    bbar2: Callable
    route: str


def _k(chart: ProjectiveChart, x):
    k = chart.kappa - chart.mu * chart.b2(x)
    if de.value(k) <= 0:
        raise DomainViolation(f"kappa - mu b^2 = {de.value(k)} is not positive")
    return k


def deform_nonzero(chart: ProjectiveChart) -> DeformedPair:
    """abar^2 = |mu|/k (alpha^2 + mu/k beta^2), bbar = (|mu|/k)^{3/2} beta with k = kappa - mu b^2."""
    kappa, mu = chart.kappa, chart.mu
    if abs(mu) < 1e-12 or abs(kappa) < 1e-12:
        raise DomainViolation("this deformation needs kappa != 0 and mu != 0")
    if kappa < 0:
        raise UnsupportedSignature("kappa < 0 gives a pseudo-Riemannian abar")
    m = abs(mu)

    def abar2(x, y):
        k = _k(chart, x)
        b = chart.beta(x, y)
        return m / k * (chart.alpha2(x, y) + mu / k * b * b)

    def bbar(x, y):
        k = _k(chart, x)
        return (m / k) ** 1.5 * chart.beta(x, y)

    def bbar2(x):
        return _numeric_b2(abar2, bbar, x)

    return DeformedPair(abar2, bbar, bbar2, "nonzero")


def deform_zero(chart: ProjectiveChart) -> DeformedPair:
    """abar = alpha / b, bbar = beta / b^2 (kappa = 0, mu < 0)."""
    if abs(chart.lam**2 + chart.mu * float(np.dot(chart.a, chart.a))) > 1e-12:
        raise DomainViolation("this deformation needs lambda^2 + mu |a|^2 = 0")
    if chart.mu >= 0:
        raise DomainViolation("kappa = 0 needs mu < 0")

    def b2_checked(x):
        b2 = chart.b2(x)
        if de.value(b2) <= 0:
            raise DomainViolation("b vanishes")
        return b2

    def abar2(x, y):
        return chart.alpha2(x, y) / b2_checked(x)

    def bbar(x, y):
        return chart.beta(x, y) / b2_checked(x)

    def bbar2(x):
        return _numeric_b2(abar2, bbar, x)

    return DeformedPair(abar2, bbar, bbar2, "zero")


def _numeric_b2(energy, oneform, x) -> float:
    x = np.asarray(x, float)
    y = np.ones(len(x))
    fr = metric_frame(energy, x, y)
    b = de.taylor(lambda v: oneform(x, v), y, 1).gradient()
    return float(b @ fr.a_inv @ b)


def reverse_nonzero(kappa: float, mu: float, abar2: float, bbar: float, bbar2: float,
                    inner_b2: float | None = None) -> tuple[float, float]:
    """(alpha^2, beta) from the deformed data.

    Both factors use 1/kappa + bbar^2/mu.  Passing ``inner_b2`` puts that value
    in place of bbar^2 inside the beta^2 correction instead (the undeformed b^2
    there does not invert the deformation; kept to demonstrate that).
    """
    K = 1 / kappa + bbar2 / mu
    inner = K if inner_b2 is None else 1 / kappa + inner_b2 / mu
    m = abs(mu)
    return (1 / (m * K) * (abar2 - bbar * bbar / (mu * inner)),
            m ** -1.5 / K ** 1.5 * bbar)


@dataclass(frozen=True)
class DeformCertificate:
    flatness: float
    conformal: float
    identity: float
    roundtrip: float
    c_hat: float

    def as_dict(self) -> dict:
        return dict(flatness=self.flatness, conformal=self.conformal,
                    identity=self.identity, roundtrip=self.roundtrip)


def certify(chart: ProjectiveChart, pair: DeformedPair, x, y) -> DeformCertificate:
    """Residuals of the stated outcomes at one (x, y).

    nonzero: flatness ||Rbar||, conformal ||bbar_{i|j} - sign(c) sqrt|mu| abar_ij||_max,
    identity |(kappa - mu b^2)(1/kappa + bbar^2/mu) - 1|, roundtrip of (alpha^2, beta).
    zero: conformal is ||bbar_{i|j}||_max, identity is |bbar - 1|, roundtrip is nan.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    check_point(chart, x)
    Rbar = riemann_of_energy(pair.abar_eval, x, y)
    ab2 = float(pair.abar_eval(x, y))
    flat = float(np.max(np.abs(Rbar)) / max(1.0, ab2))
    fr = metric_frame(pair.abar_eval, x, y)
    bd = oneform_data(fr, pair.bbar_eval, x, y)
    mu, kappa = chart.mu, chart.kappa
    if pair.route == "nonzero":
        c = float(chart.c(x))
        target = math.copysign(math.sqrt(abs(mu)), c) * fr.a_ij
        conf = float(np.max(np.abs(bd.bij - target)))
        ident = abs((kappa - mu * float(chart.b2(x))) * (1 / kappa + bd.b2 / mu) - 1)
        a2, b = reverse_nonzero(kappa, mu, ab2, float(pair.bbar_eval(x, y)), bd.b2)
        rt = max(abs(a2 - float(chart.alpha2(x, y))), abs(b - float(chart.beta(x, y))))
    else:
        conf = float(np.max(np.abs(bd.bij)))
        ident = abs(math.sqrt(bd.b2) - 1)
        rt = float("nan")
    return DeformCertificate(flat, conf, ident, rt, bd.c)


def phi_transfer(phibar: ps.PhiFamily, mu: float, kappa: float, b2, s):
    """phi(b^2, s) built from a solution phibar of the mu = 0 problem (kappa_bar = |mu|)."""
    k = kappa - mu * b2
    k2 = k + mu * s * s
    if de.value(k) <= 0 or de.value(k2) <= 0:
        raise DomainViolation("kappa - mu b^2 and kappa - mu b^2 + mu s^2 must be positive")
    m = abs(mu)
    rk, rk2 = de.sqrt(k), de.sqrt(k2)
    return math.sqrt(m) * rk2 / k * phibar(mu * b2 / k * mu / kappa, m * s / (rk * rk2))


def transfer(phibar: ps.PhiFamily, mu: float, kappa: float) -> ps.PhiFamily:
    """Transferred family; flag curvature is phibar's sigma times |mu| when phibar is a Funk-type solution."""
    if mu == 0 or kappa <= 0:
        raise DomainViolation("transfer needs mu != 0 and kappa > 0")

    def fn(b2, s):
        return phi_transfer(phibar, mu, kappa, b2, s)

    # bbar^2 = mu^2 b^2 / ((kappa - mu b^2) kappa) must stay below phibar's range C
    b_max = math.sqrt(kappa / mu) if mu > 0 else math.inf
    C = phibar.b_max**2
    if math.isfinite(C) and mu * mu + C * kappa * mu > 0:
        b_max = min(b_max, math.sqrt(C * kappa * kappa / (mu * mu + C * kappa * mu)))
    return ps.PhiFamily("Transfer", {"mu": mu, "kappa": kappa, **{f"bar_{k}": v for k, v in phibar.params.items()}},
                        fn, b_max)
