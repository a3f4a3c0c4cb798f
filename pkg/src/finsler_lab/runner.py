"""Randomized verification of catalog entries and JSON reporting.

Every sample gets its own generator spawned from ``SeedSequence(seed)``, so a
sample's points depend only on (seed, sample index) and not on how many
rejections earlier samples needed.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import deform
from . import diffengine as de
from . import finsler as fz
from . import phisolver as ps
from .catalog import CatalogEntry
from .errors import FinslerLabError, UnsupportedSignature

SCHEMA = "finsler-lab/1"
RNG_NAME = "numpy.PCG64(SeedSequence(seed).spawn(samples)[i])"
MAX_TRIES = 2000
FLAGS = 5

FD_SINGULAR_MARGIN = 0.5
TOL_PROFILES = {
    # identity: exact-to-rounding identities; curvature: anything through R^i_j
    "jet": {"identity": 1e-8, "curvature": 1e-6, "route_psi": 1e-7, "homogeneity": 1e-10},
    "fd": {"identity": 1e-8, "curvature": 1e-3, "route_psi": 1e-7, "homogeneity": 1e-10},
}
DEFORM_TOLS = {"flatness": 1e-7, "conformal": 1e-8, "parallel": 1e-8, "identity": 1e-10,
               "unit-length": 1e-10, "roundtrip": 1e-9}


class RoutingError(FinslerLabError):
    """A request that does not fit the entry (wrong kind, wrong deformation for the chart)."""


class SamplingError(FinslerLabError):
    pass


@dataclass
class Check:
    name: str
    max_residual: float | None
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_residual is not None and self.max_residual <= self.tolerance

    def to_dict(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual, "tolerance": self.tolerance,
                "pass": self.passed}


class _Checks:
    """Running maxima of residuals, keyed by check name in first-seen order."""

    def __init__(self):
        self.tol: dict[str, float] = {}
        self.worst: dict[str, float | None] = {}

    def add(self, name: str, residual: float | None, tol: float) -> None:
        if name not in self.tol:
            self.tol[name] = tol
            self.worst[name] = 0.0
        if self.worst[name] is None:
            return
        if residual is None or not math.isfinite(residual):
            self.worst[name] = None
        else:
            self.worst[name] = max(self.worst[name], float(residual))

    def run(self, name: str, tol: float, fn) -> None:
        try:
            self.add(name, fn(), tol)
        except (FinslerLabError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            self.add(name, None, tol)

    def result(self) -> list[Check]:
        return [Check(k, self.worst[k], self.tol[k]) for k in self.tol]


@dataclass
class VerificationReport:
    metric: str
    kind: str
    n: int
    samples: int
    seed: int
    rng: str
    tol_profile: str
    checks: list[Check]
    K_expected: float | None = None
    K_fit_mean: float | None = None
    K_fit_max_dev: float | None = None
    wall_time_ms: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        d = {"schema": SCHEMA, "kind": self.kind, "metric": self.metric, "n": self.n, "samples": self.samples,
             "seed": self.seed, "rng": self.rng, "tol_profile": self.tol_profile,
             "checks": [c.to_dict() for c in self.checks], "pass": self.passed,
             "K_expected": self.K_expected, "K_fit_mean": self.K_fit_mean, "K_fit_max_dev": self.K_fit_max_dev}
        d.update(self.extra)
        d["wall_time_ms"] = self.wall_time_ms
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


_NUM_OR_NULL = {"type": ["number", "null"]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "kind", "metric", "n", "samples", "seed", "rng", "tol_profile", "checks", "pass",
                 "K_expected", "K_fit_mean", "K_fit_max_dev", "wall_time_ms"],
    "properties": {
        "schema": {"const": SCHEMA},
        "kind": {"enum": ["verify", "pde-scan", "deform-check"]},
        "metric": {"type": "string"},
        "n": {"type": "integer", "minimum": 2},
        "samples": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer"},
        "rng": {"type": "string"},
        "tol_profile": {"type": "string"},
        "checks": {"type": "array", "items": {
            "type": "object",
            "required": ["name", "max_residual", "tolerance", "pass"],
            "properties": {"name": {"type": "string"}, "max_residual": _NUM_OR_NULL,
                           "tolerance": {"type": "number"}, "pass": {"type": "boolean"}},
            "additionalProperties": False}},
        "pass": {"type": "boolean"},
        "K_expected": _NUM_OR_NULL,
        "K_fit_mean": _NUM_OR_NULL,
        "K_fit_max_dev": _NUM_OR_NULL,
        "wall_time_ms": {"type": "number", "minimum": 0},
    },
}


# -- sampling -----------------------------------------------------------------

def sample_generators(seed: int, samples: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(samples)]


def _ball(rng: np.random.Generator, n: int, radius: float) -> np.ndarray:
    d = rng.standard_normal(n)
    return radius * rng.random() ** (1.0 / n) * d / np.linalg.norm(d)


def _unit(rng: np.random.Generator, n: int) -> np.ndarray:
    d = rng.standard_normal(n)
    return d / np.linalg.norm(d)


def _b_ok(entry: CatalogEntry, b: float, fam: ps.PhiFamily | None) -> bool:
    lo, hi = entry.b_range
    if fam is not None:
        hi = min(hi, fam.b_max)
    return lo <= b <= hi and (hi == math.inf or b < hi)


def sample_metric_point(entry: CatalogEntry, m: fz.GeneralABMetric, rng: np.random.Generator,
                        s_margin: float | None = None):
    """(x, y, us): x in the entry's ball with b and s in range and F > 0, y and the flag vectors us unit."""
    n = m.n
    margin = entry.s_margin if s_margin is None else max(s_margin, entry.s_margin)
    fam = m.family
    for _ in range(MAX_TRIES):
        x = _ball(rng, n, entry.x_radius)
        y = _unit(rng, n)
        u = [_unit(rng, n) for _ in range(FLAGS)]
        if not m.chart.admissible(x):
            continue
        try:
            b2, s = m.b2_s(x, y)
            b = math.sqrt(b2)
            if not _b_ok(entry, b, fam) or abs(s) > (1 - margin) * b:
                continue
            fz.metric_eval(m, x, y)
        except (FinslerLabError, ArithmeticError, ValueError):
            continue
        return x, y, u
    raise SamplingError(f"no admissible point for {entry.name} after {MAX_TRIES} tries")


def make_metric(entry: CatalogEntry, n: int = 3) -> fz.GeneralABMetric:
    fam, _ = entry.phi()
    return fz.GeneralABMetric(entry.chart(n), fam, entry.expected_K, entry.singular_directions(), entry.name)


# -- verify -------------------------------------------------------------------

def _rel(a, b) -> float:
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / (1 + np.linalg.norm(b)))


def _verify_sample(entry: CatalogEntry, m: fz.GeneralABMetric, x, y, u, tol: dict, cfg: de.DiffConfig,
                   ck: _Checks, Ks: list) -> None:
    ch = m.chart
    K = entry.expected_K
    ktol = max(entry.k_tol, tol["curvature"]) if cfg.mode == "central-fd" else entry.k_tol
    b2, s = m.b2_s(x, y)
    fam = m.family
    semidef = entry.regularity == "semidefinite"

    ck.run("pde", tol["identity"], lambda: abs(ps.residual_pde(fam, b2, s)))
    if K is not None:
        ck.run("pde2", tol["identity"], lambda: abs(ps.residual_pde2(fam, b2, s, ch.kappa, ch.mu, K)))

    ck.run("homogeneity-F", tol["homogeneity"],
           lambda: abs(m.F(x, 2 * y) - 2 * m.F(x, y)) / abs(2 * m.F(x, y)))

    kp = kt = None
    try:
        kp = fz.projective_K(m, x, y, check=not semidef)
    except (FinslerLabError, ArithmeticError, ValueError):
        pass
    kq = None
    try:
        kq = fz.psi_K(m, x, y)
    except (FinslerLabError, ArithmeticError, ValueError):
        pass

    if not semidef:
        G = None
        try:
            G = fz.spray_direct(m, x, y)
        except (FinslerLabError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            pass
        ck.run("spray-dual-route", tol["identity"], lambda: _rel(fz.spray_formula(m, x, y), G))
        ck.run("spray-collinear", tol["identity"],
               lambda: float(np.linalg.norm(G - (G @ y) / (y @ y) * y) / (1 + np.linalg.norm(G))))
        ck.run("homogeneity-G", tol["homogeneity"],
               lambda: float(np.linalg.norm(fz.spray_direct(m, x, 2 * y) - 4 * G) / np.linalg.norm(4 * G))
               if np.linalg.norm(G) > 0 else 0.0)
        R = None
        try:
            R = fz.riemann_tensor(m, x, y, cfg)
        except (FinslerLabError, ArithmeticError, ValueError, np.linalg.LinAlgError):
            pass
        fit = None
        try:
            fit = fz.constant_K_fit(m, x, y, R) if R is not None else None
            kt = fit.K_fit if fit is not None else None
        except (FinslerLabError, ArithmeticError, ValueError):
            pass
        if K is not None:
            if K == 0:
                ck.add("K-tensor", None if fit is None else fit.residual, ktol)
            else:
                ck.add("K-tensor", None if kt is None else abs(kt - K), ktol)
                ck.add("K-tensor-fit-residual", None if fit is None else fit.residual, ktol)
        ck.run("homogeneity-R", tol["homogeneity"] if cfg.mode == "forward-jet" else tol["curvature"],
               lambda: float(np.linalg.norm(fz.riemann_tensor(m, x, 2 * y, cfg) - 4 * R) / (1 + np.linalg.norm(4 * R))))
        try:
            g = fz.fundamental_tensor(m, x, y)
        except (FinslerLabError, ValueError, np.linalg.LinAlgError):
            g = None
        if entry.regularity == "regular":
            ck.add("posdef-g", None if g is None else max(0.0, -float(np.min(np.linalg.eigvalsh(g)))), 0.0)
        if K is not None and g is not None and R is not None:
            flags = []
            for w in u:
                try:
                    flags.append(fz.flag_curvature(m, x, y, w, R, g))
                except FinslerLabError:
                    pass
            ck.add("K-flag", max(abs(f - K) for f in flags) if flags else None, ktol)
            ck.add("flag-spread", (max(flags) - min(flags)) if flags else None, tol["curvature"])
        if kt is not None and kp is not None:
            ck.add("route-tensor-projective", abs(kt - kp), max(tol["curvature"], entry.k_tol)
                   if cfg.mode == "forward-jet" else ktol)
    if K is not None:
        ck.add("K-projective", None if kp is None else abs(kp - K), entry.k_tol)
        ck.add("K-psi", None if kq is None else abs(kq - K), entry.k_tol)
    if kp is not None and kq is not None:
        ck.add("route-projective-psi", abs(kp - kq), tol["route_psi"])
    Ks.append(kt if kt is not None else kp)


def verify(entry: CatalogEntry, samples: int = 100, seed: int = 0, n: int = 3, tol_profile: str = "jet",
           tol_overrides: dict | None = None) -> VerificationReport:
    if entry.kind != "metric":
        raise RoutingError(f"{entry.name} is a deformation entry; use deform-check")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if tol_profile not in TOL_PROFILES:
        raise ValueError(f"unknown tolerance profile {tol_profile!r}")
    tol = {**TOL_PROFILES[tol_profile], **(tol_overrides or {})}
    cfg = de.JET if tol_profile == "jet" else de.FD
    # differences across a step cannot resolve phi near its zero at s = -b
    margin = FD_SINGULAR_MARGIN if tol_profile == "fd" and entry.regularity == "singular-pm-b" else None
    t0 = time.perf_counter()
    m = make_metric(entry, n)
    ck = _Checks()
    Ks: list = []
    for rng in sample_generators(seed, samples):
        x, y, u = sample_metric_point(entry, m, rng, margin)
        _verify_sample(entry, m, x, y, u, tol, cfg, ck, Ks)
    vals = [k for k in Ks if k is not None]
    K = entry.expected_K
    mean = float(np.mean(vals)) if vals else None
    dev = float(max(abs(k - K) for k in vals)) if vals and K is not None else None
    rep = VerificationReport(entry.name, "verify", n, samples, seed, RNG_NAME, tol_profile, ck.result(),
                             K, mean, dev)
    if margin is not None:
        rep.extra["s_margin"] = margin
    rep.wall_time_ms = round((time.perf_counter() - t0) * 1000, 3)
    return rep


# -- pde scan -----------------------------------------------------------------

def b_interval(entry: CatalogEntry, n: int = 3, probes: int = 256) -> tuple[float, float]:
    """Range of b over the entry's x-ball, clipped to its declared b-range and the family's."""
    ch = entry.chart(n)
    fam, _ = entry.phi()
    rng = np.random.Generator(np.random.PCG64(0))
    bs = []
    for _ in range(probes):
        x = _ball(rng, n, entry.x_radius)
        if ch.admissible(x):
            bs.append(math.sqrt(float(ch.b2(x))))
    lo = max(min(bs), entry.b_range[0])
    hi = min(max(bs), entry.b_range[1], fam.b_max * (1 - 1e-3))
    if not lo < hi:
        raise SamplingError(f"{entry.name}: empty b-range")
    return lo, hi


ODE_U = (0.1, 0.8)


def pde_scan(entry: CatalogEntry, grid: tuple[int, int] = (20, 20), n: int = 3,
             tol: float = 1e-8) -> VerificationReport:
    if entry.kind != "metric":
        raise RoutingError(f"{entry.name} is a deformation entry")
    t0 = time.perf_counter()
    fam, pq = entry.phi()
    ch = entry.chart(n)
    K = entry.expected_K
    lo, hi = b_interval(entry, n)
    ck = _Checks()
    for b in np.linspace(lo, hi, grid[0]):
        if b <= 0:
            continue
        b2 = float(b * b)
        smax = (1 - entry.s_margin) * b
        for s in np.linspace(-smax, smax, grid[1]):
            s = float(s)
            u = b2 - s * s
            ck.run("pde", tol, lambda: abs(ps.residual_pde(fam, b2, s)))
            if K is None:
                continue
            ck.run("pde2", tol, lambda: abs(ps.residual_pde2(fam, b2, s, ch.kappa, ch.mu, K)))
            if u > 0:
                ck.run("pde5", tol, lambda: abs(ps.residual_pde5(fam, u, s, ch.kappa, ch.mu, K)))
            if ch.mu == 0 and ch.kappa != 0:
                ck.run("eqn01", tol, lambda: abs(ps.eval_eqn01_residual(fam, u, s, K / ch.kappa)))
            if ch.kappa_zero and u > 0:
                ck.run("pde6", tol, lambda: abs(ps.residual_pde6(fam, u, s, -K / ch.mu)))
    if pq is not None:
        for u in np.linspace(ODE_U[0], ODE_U[1], 50):
            try:
                r = ps.residual_ode_system(pq.p, pq.q, float(u), pq.tau)
            except (FinslerLabError, ArithmeticError, ValueError):
                r = (None, None, None)
            for name, v in zip(("ode-r1", "ode-r2", "ode-r3"), r):
                ck.add(name, None if v is None else abs(v), tol)
    rep = VerificationReport(entry.name, "pde-scan", n, grid[0] * grid[1], 0, "grid", "jet", ck.result(), K,
                             extra={"grid": list(grid), "b_interval": [lo, hi]})
    rep.wall_time_ms = round((time.perf_counter() - t0) * 1000, 3)
    return rep


# -- deformation check --------------------------------------------------------

def deformation_route(entry: CatalogEntry, route: str = "auto", n: int = 3) -> str:
    ch = entry.chart(n)
    if route == "auto":
        route = entry.route or ("zero" if ch.kappa_zero else "nonzero")
    if route not in ("nonzero", "zero"):
        raise RoutingError(f"unknown route {route!r}")
    if ch.mu == 0:
        raise RoutingError(f"{entry.name}: mu = 0, nothing to flatten")
    if route == "nonzero" and ch.kappa_zero:
        raise RoutingError(f"{entry.name}: kappa = 0 chart needs the parallel (zero) route")
    if route == "zero" and not ch.kappa_zero:
        raise RoutingError(f"{entry.name}: kappa != 0 chart needs the conformal (nonzero) route")
    if route == "nonzero" and ch.kappa < 0:
        raise RoutingError(f"{entry.name}: kappa < 0 is pseudo-Riemannian")
    return route


def deform_check(entry: CatalogEntry, samples: int = 50, seed: int = 0, n: int = 3,
                 route: str = "auto") -> VerificationReport:
    route = deformation_route(entry, route, n)
    t0 = time.perf_counter()
    ch = entry.chart(n)
    try:
        pair = deform.deform_nonzero(ch) if route == "nonzero" else deform.deform_zero(ch)
    except UnsupportedSignature as e:
        raise RoutingError(str(e)) from e
    ck = _Checks()
    cs = []
    for rng in sample_generators(seed, samples):
        for _ in range(MAX_TRIES):
            x = _ball(rng, n, entry.x_radius)
            y = _unit(rng, n)
            if not ch.admissible(x):
                continue
            b2 = float(ch.b2(x))
            if (route == "nonzero" and ch.kappa - ch.mu * b2 <= 1e-3) or (route == "zero" and b2 <= 1e-6):
                continue
            break
        else:
            raise SamplingError(f"no admissible point for {entry.name}")
        c = deform.certify(ch, pair, x, y)
        cs.append(c.c_hat)
        ck.add("flatness", c.flatness, DEFORM_TOLS["flatness"])
        if route == "nonzero":
            ck.add("conformal", c.conformal, DEFORM_TOLS["conformal"])
            ck.add("identity", c.identity, DEFORM_TOLS["identity"])
            ck.add("roundtrip", c.roundtrip, DEFORM_TOLS["roundtrip"])
        else:
            ck.add("parallel", c.conformal, DEFORM_TOLS["parallel"])
            ck.add("unit-length", c.identity, DEFORM_TOLS["unit-length"])
    rep = VerificationReport(entry.name, "deform-check", n, samples, seed, RNG_NAME, "jet", ck.result(),
                             extra={"route": route, "abs_c_mean": float(np.mean(np.abs(cs)))})
    rep.wall_time_ms = round((time.perf_counter() - t0) * 1000, 3)
    return rep
