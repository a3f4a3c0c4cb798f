"""Named metrics and deformation charts, plus loading of extra entries from TOML files.

Extra files are listed in the ``FINSLER_LAB_CATALOG`` environment variable
(separated by ``os.pathsep``).  Each file holds ``[metric.<name>]`` and
``[deformation.<name>]`` tables; see the README for the keys.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import deform
from . import diffengine as de
from . import phisolver as ps
from .riemann import ProjectiveChart

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

REGULARITY = ("regular", "singular-pm-b", "semidefinite")
ROUTES = ("nonzero", "zero")
ENV_VAR = "FINSLER_LAB_CATALOG"


class CatalogError(ValueError):
    pass


# -- (p, q) pairs of the kappa = 0 examples ---------------------------------------

S = de.sqrt
R2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PQPair:
    tau: float
    p: Callable
    q: Callable
    sign: int  # the +- in front of v in the solution formula
    q_sign: int = 1  # root of the q quadratic that reproduces q (0: constant-p branch)


def _pq_square_b() -> PQPair:
    p, q = ps.pq_constant(0.0, R2)
    return PQPair(0.0, p, q, -1, 0)


def _pq_semidefinite() -> PQPair:
    return PQPair(0.0, lambda u: S(u) / 2, lambda u: 1 / (2 * S(u)), -1, 1)


def _pq_k0_two_sign(c1: int, c2: int) -> PQPair:
    def p(u):
        return c1 * S(1 + c1 * u) / 2

    def q(u):
        w = S(1 + c1 * u)
        return w * (1 + c2 * w) ** 2 / (2 * u * u)

    return PQPair(0.0, p, q, -1, c2)


def _pq_km1_constant(c1: int, c2: int) -> PQPair:
    p, q = ps.pq_constant(-1.0, 2 * R2, (c1, 1, c2))
    return PQPair(-1.0, p, q, -1, 0)


def _pq_km1_root(c1: int, c2: int) -> PQPair:
    return PQPair(-1.0, lambda u: S(1 + c1 * u), lambda u: c1 / (S(1 + c1 * u) + c2), -1, -c1 * c2)


def _pq_km1_nested(c: int) -> PQPair:
    def m(u):
        return 1 + c * S(1 - u * u)

    return PQPair(-1.0, lambda u: S(m(u)) / R2, lambda u: -(R2 * S(m(u)) + u) / (R2 * m(u) ** 1.5), 1, c)


def _pq_k1() -> PQPair:
    def m(u):
        return S(1 + u * u) - 1

    return PQPair(1.0, lambda u: S(m(u)) / R2, lambda u: (2 * S(m(u)) + R2 * u) / (2 * m(u) ** 1.5), 1, 1)


def pq_pairs() -> dict[str, PQPair]:
    """Every worked (p, q) pair, including all sign choices."""
    out = {"square-b": _pq_square_b(), "semidefinite": _pq_semidefinite(), "k1": _pq_k1()}
    for c1 in (1, -1):
        for c2 in (1, -1):
            out[f"k0-two-sign({c1:+d},{c2:+d})"] = _pq_k0_two_sign(c1, c2)
            out[f"km1-constant({c1:+d},{c2:+d})"] = _pq_km1_constant(c1, c2)
            out[f"km1-root({c1:+d},{c2:+d})"] = _pq_km1_root(c1, c2)
    for c in (1, -1):
        out[f"km1-nested({c:+d})"] = _pq_km1_nested(c)
    return out


# -- family construction ------------------------------------------------------

def _expr_family(expr: str) -> ps.PhiFamily:
    code = compile(expr, "<phi>", "eval")
    env = {"sqrt": de.sqrt, "exp": de.exp, "log": de.log, "sin": de.sin, "cos": de.cos,
           "re": de.real, "pi": math.pi, "I": 1j}

    def fn(b2, s):
        return eval(code, {"__builtins__": {}}, {**env, "b2": b2, "s": s, "b": de.sqrt(b2)})

    return ps.custom(fn, name=expr)


def build_family(spec: dict) -> tuple[ps.PhiFamily, PQPair | None]:
    spec = dict(spec)
    tag = spec.pop("tag")
    if tag == "funk":
        return ps.funk(**spec), None
    if tag == "solved-q":
        return ps.solved_q(**spec), None
    if tag == "square-b":
        return ps.square_b(), _pq_square_b()
    if tag == "bryant":
        return ps.bryant(), None
    if tag == "shen-eps":
        return ps.shen_eps(**spec), None
    if tag == "pq":
        name = spec["pair"]
        pairs = pq_pairs()
        if name not in pairs:
            raise CatalogError(f"unknown (p, q) pair {name!r}")
        pq = pairs[name]
        return ps.kappa_zero(pq.tau, pq.p, pq.q, pq.sign, pair=name), pq
    if tag == "kappa-zero":
        tau, branch = float(spec["tau"]), spec.get("branch", "constant")
        signs = tuple(spec.get("signs", (1, 1, 1)))
        if branch == "constant":
            p, q = ps.pq_constant(tau, float(spec["C"]), signs)
        elif branch == "general":
            p, q = ps.pq_general(tau, float(spec["C"]), float(spec["D"]), signs)
        else:
            raise CatalogError(f"unknown branch {branch!r}")
        sign = int(spec.get("sign", -1))
        return ps.kappa_zero(tau, p, q, sign, branch=branch), PQPair(tau, p, q, sign)
    if tag == "transfer":
        base, _ = build_family(spec["base"])
        return deform.transfer(base, float(spec["mu"]), float(spec["kappa"])), None
    if tag == "expr":
        return _expr_family(spec["phi"]), None
    raise CatalogError(f"unknown family tag {tag!r}")


# -- entries ------------------------------------------------------------------

@dataclass(frozen=True)
class CatalogEntry:
    name: str
    mu: float
    lam: float
    a: tuple
    family: dict | None = None
    expected_K: float | None = None
    x_radius: float = 0.4
    b_range: tuple = (0.0, math.inf)
    s_margin: float = 0.0
    regularity: str = "regular"
    k_tol: float = 1e-6
    route: str | None = None  # deformation entries only
    description: str = ""
    _built: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def kind(self) -> str:
        return "deformation" if self.family is None else "metric"

    @property
    def kappa_zero(self) -> bool:
        return abs(self.lam**2 + self.mu * float(np.dot(self.a, self.a))) <= 1e-12

    def chart(self, n: int = 3) -> ProjectiveChart:
        a = np.zeros(n)
        src = np.asarray(self.a, float)
        a[:min(n, len(src))] = src[:n]
        norm, kept = float(np.linalg.norm(src)), float(np.linalg.norm(a))
        # in lower dimensions keep |a| (and with it kappa) by rescaling what is left
        if kept < norm:
            a = a * (norm / kept) if kept > 0 else np.eye(n)[0] * norm
        return ProjectiveChart(n, self.mu, self.lam, tuple(float(v) for v in a), kappa_zero=self.kappa_zero)

    def phi(self) -> tuple[ps.PhiFamily, PQPair | None]:
        if self.family is None:
            raise CatalogError(f"{self.name} is a deformation entry")
        if "fam" not in self._built:
            self._built["fam"] = build_family(self.family)
        return self._built["fam"]

    def singular_directions(self) -> str:
        return "pm_b" if self.regularity == "singular-pm-b" else "none"

    def summary(self) -> dict:
        d = {"name": self.name, "kind": self.kind, "mu": self.mu, "lambda": self.lam, "a": list(self.a),
             "kappa": self.lam**2 + self.mu * float(np.dot(self.a, self.a))}
        if self.kind == "metric":
            d.update(family=dict(self.family), expected_K=self.expected_K, regularity=self.regularity,
                     x_radius=self.x_radius, b_range=[v if math.isfinite(v) else None for v in self.b_range], s_margin=self.s_margin,
                     k_tol=self.k_tol)
        else:
            d.update(route=self.route, x_radius=self.x_radius)
        d["description"] = self.description
        return d


def _implied_K(entry: CatalogEntry) -> float | None:
    fam = entry.family
    kappa = entry.lam**2 + entry.mu * float(np.dot(entry.a, entry.a))
    tag = fam["tag"]
    if tag in ("funk", "solved-q", "shen-eps", "bryant") and entry.mu == 0:
        sigma = {"funk": fam.get("sigma", -0.25), "solved-q": fam.get("sigma"),
                 "shen-eps": -1.0, "bryant": 1.0}[tag]
        return sigma * kappa
    if tag in ("pq", "square-b", "kappa-zero"):
        _, pq = entry.phi()
        return -pq.tau * entry.mu
    return None


def validate(entry: CatalogEntry) -> None:
    """Load-time checks: the chart is well formed and the family matches it."""
    if not entry.name:
        raise CatalogError("entry without a name")
    try:
        ch = entry.chart(max(3, len(entry.a)))
    except ValueError as e:
        raise CatalogError(f"{entry.name}: {e}") from e
    if entry.kind == "deformation":
        if entry.route not in ROUTES:
            raise CatalogError(f"{entry.name}: route must be one of {ROUTES}")
        return
    if entry.regularity not in REGULARITY:
        raise CatalogError(f"{entry.name}: regularity must be one of {REGULARITY}")
    lo, hi = entry.b_range
    if not 0 <= lo < hi:
        raise CatalogError(f"{entry.name}: bad b_range {entry.b_range}")
    if not 0 <= entry.s_margin < 1:
        raise CatalogError(f"{entry.name}: s_margin must be in [0, 1)")
    try:
        entry.phi()
    except (TypeError, KeyError, ValueError, SyntaxError) as e:
        raise CatalogError(f"{entry.name}: cannot build family: {e}") from e
    tag = entry.family["tag"]
    if tag in ("pq", "square-b", "kappa-zero") and not (ch.kappa_zero and ch.mu < 0):
        raise CatalogError(f"{entry.name}: kappa = 0 families need lambda^2 + mu |a|^2 = 0 and mu < 0")
    if tag in ("funk", "solved-q", "shen-eps", "bryant") and ch.mu != 0:
        raise CatalogError(f"{entry.name}: {tag} is a mu = 0 family")
    implied = _implied_K(entry)
    if entry.expected_K is not None and implied is not None and abs(implied - entry.expected_K) > 1e-12:
        raise CatalogError(f"{entry.name}: expected_K {entry.expected_K} does not match the family's {implied}")


# b(x) near 3 keeps phi ~ (b + s)^2 away from rounding level; see the README on conditioning
_K0 = dict(mu=-1.0, lam=3.0, a=(3.0, 0.0, 0.0), x_radius=0.4, b_range=(0.1, math.inf), s_margin=0.05,
           regularity="singular-pm-b", k_tol=1e-5)

BUILTIN: tuple[CatalogEntry, ...] = (
    CatalogEntry("funk", 0.0, 1.0, (0.1, -0.2, 0.05), {"tag": "funk", "sigma": -0.25, "C": 1.0},
                 -0.25, x_radius=0.5, b_range=(0.0, 0.9),
                 description="generalized Funk metric, Randers type"),
    CatalogEntry("berwald", 0.0, 1.0, (0.1, -0.2, 0.05), {"tag": "solved-q", "sigma": 0.0, "C": 1.0, "D": -1.0},
                 0.0, x_radius=0.5, b_range=(0.0, 0.9),
                 description="generalized Berwald metric, q = sqrt(1 - u)"),
    CatalogEntry("bryant", 0.0, 1.0, (0.1, -0.2, 0.05), {"tag": "bryant"}, 1.0, x_radius=0.5,
                 b_range=(0.0, 0.9), k_tol=1e-5, description="part of Bryant's metrics (principal branch)"),
    CatalogEntry("shen-eps", 0.0, 1.0, (0.1, -0.2, 0.05), {"tag": "shen-eps", "eps": 0.5}, -1.0, x_radius=0.5,
                 b_range=(0.0, 0.9), k_tol=1e-5, description="Shen-type family, eps = 1/2"),
    CatalogEntry("square-b", -1.0, 1.0, (1.0, 0.0, 0.0), {"tag": "square-b"}, 0.0, x_radius=0.4,
                 b_range=(0.1, math.inf), s_margin=0.05, regularity="singular-pm-b",
                 description="(b alpha + beta)^2 / alpha on a kappa = 0 chart"),
    CatalogEntry("k0-example-2", **{**_K0, "regularity": "semidefinite"},
                 family={"tag": "pq", "pair": "semidefinite"}, expected_K=0.0,
                 description="sqrt(b^2 alpha^2 - beta^2) / b^2, positive semi-definite"),
    CatalogEntry("k0-example-3", **_K0, family={"tag": "pq", "pair": "k0-two-sign(+1,+1)"}, expected_K=0.0,
                 description="two-sign K = 0 family, c1 = c2 = 1"),
    CatalogEntry("km1-example-1", **_K0, family={"tag": "pq", "pair": "km1-constant(+1,+1)"}, expected_K=-1.0,
                 description="constant p = c1, c1 = c2 = 1"),
    CatalogEntry("km1-example-2", **_K0, family={"tag": "pq", "pair": "km1-root(+1,+1)"}, expected_K=-1.0,
                 description="p = sqrt(1 + c1 u), c1 = c2 = 1"),
    CatalogEntry("km1-example-3", **{**_K0, "lam": 1.0, "a": (1.0, 0.0, 0.0), "b_range": (0.1, 0.97)}, family={"tag": "pq", "pair": "km1-nested(+1)"}, expected_K=-1.0,
                 description="p = sqrt(1 + c sqrt(1 - u^2)) / sqrt 2, c = 1"),
    CatalogEntry("k1-example", **_K0, family={"tag": "pq", "pair": "k1"}, expected_K=1.0,
                 description="p = sqrt(sqrt(1 + u^2) - 1) / sqrt 2"),
    CatalogEntry("funk-transfer", -1.0, 1.0, (0.0, 0.0, 0.0),
                 {"tag": "transfer", "mu": -1.0, "kappa": 1.0, "base": {"tag": "funk", "sigma": -0.25, "C": 1.0}},
                 -0.25, x_radius=0.5, description="Funk solution moved to a mu = -1, kappa = 1 chart"),
    CatalogEntry("bryant-transfer", -1.0, 1.0, (0.0, 0.0, 0.0),
                 {"tag": "transfer", "mu": -1.0, "kappa": 1.0, "base": {"tag": "bryant"}},
                 1.0, x_radius=0.5, k_tol=1e-5, description="Bryant solution moved to a mu = -1, kappa = 1 chart"),
    CatalogEntry("lemma33-hyperbolic", -1.0, 1.0, (0.0, 0.0, 0.0), route="nonzero", x_radius=0.5,
                 description="flattening deformation, mu = -1, kappa = 1"),
    CatalogEntry("lemma33-sphere", 1.0, 0.5, (0.3, -0.2, 0.1), route="nonzero", x_radius=0.3,
                 description="flattening deformation, mu = 1"),
    CatalogEntry("lemma33-mixed", -0.5, 1.2, (0.4, 0.3, 0.0), route="nonzero", x_radius=0.4,
                 description="flattening deformation, mu = -1/2"),
    CatalogEntry("lemma34-k0", -1.0, 1.0, (1.0, 0.0, 0.0), route="zero", x_radius=0.4,
                 description="irreversible deformation to a parallel 1-form, kappa = 0"),
)


def _entry_from_toml(kind: str, name: str, tbl: dict) -> CatalogEntry:
    tbl = dict(tbl)
    try:
        common = dict(name=name, mu=float(tbl.pop("mu")), lam=float(tbl.pop("lam")),
                      a=tuple(float(v) for v in tbl.pop("a")), x_radius=float(tbl.pop("x_radius", 0.4)),
                      description=str(tbl.pop("description", "")))
        if kind == "deformation":
            entry = CatalogEntry(**common, route=tbl.pop("route"))
        else:
            family = {"tag": tbl.pop("family"), **tbl.pop("params", {})}
            if family["tag"] == "expr":
                family["phi"] = tbl.pop("phi")
            K = tbl.pop("expected_K", None)
            entry = CatalogEntry(
                **common, family=family, expected_K=None if K is None else float(K),
                b_range=tuple(float(v) for v in tbl.pop("b_range", (0.0, math.inf))),
                s_margin=float(tbl.pop("s_margin", 0.0)), regularity=tbl.pop("regularity", "regular"),
                k_tol=float(tbl.pop("k_tol", 1e-6)))
    except KeyError as e:
        raise CatalogError(f"{name}: missing key {e}") from e
    except (TypeError, ValueError) as e:
        raise CatalogError(f"{name}: {e}") from e
    if tbl:
        raise CatalogError(f"{name}: unknown keys {sorted(tbl)}")
    return entry


def load_file(path: str) -> list[CatalogEntry]:
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as e:
            raise CatalogError(f"{path}: {e}") from e
    out = []
    for kind in ("metric", "deformation"):
        for name, tbl in data.pop(kind, {}).items():
            entry = _entry_from_toml(kind, name, tbl)
            validate(entry)
            out.append(entry)
    if data:
        raise CatalogError(f"{path}: unknown top-level tables {sorted(data)}")
    return out


def load_catalog(extra_paths: list[str] | None = None) -> dict[str, CatalogEntry]:
    """Built-in entries followed by those from ``FINSLER_LAB_CATALOG`` (later files override)."""
    if extra_paths is None:
        extra_paths = [p for p in os.environ.get(ENV_VAR, "").split(os.pathsep) if p]
    out = {}
    for e in BUILTIN:
        validate(e)
        out[e.name] = e
    for path in extra_paths:
        for e in load_file(path):
            out[e.name] = e
    return out


def catalog_list(extra_paths: list[str] | None = None) -> list[dict]:
    return [e.summary() for e in load_catalog(extra_paths).values()]


def get(name: str, extra_paths: list[str] | None = None) -> CatalogEntry:
    cat = load_catalog(extra_paths)
    if name not in cat:
        raise KeyError(name)
    return cat[name]
