import math

import numpy as np
import pytest

from finsler_lab import diffengine as de
from finsler_lab import finsler as fz
from finsler_lab import phisolver as ps
from finsler_lab import riemann as rm
from finsler_lab.errors import DegenerateFlag, NotProjectivelyFlat, SingularDirection
from finsler_lab.riemann import ProjectiveChart

from conftest import rel, sample_points

ONE = ps.custom(lambda b2, s: 1.0 + 0 * s, "one")
ZERO3 = (0.0, 0.0, 0.0)


def _metric(family, mu=0.0, lam=1.0, a=ZERO3, K=None, sing="none"):
    ch = ProjectiveChart(len(a), mu, lam, a, kappa_zero=abs(lam**2 + mu * np.dot(a, a)) < 1e-12)
    return fz.GeneralABMetric(ch, family, K, sing)


def _points(m, count, seed=0, radius=0.4, s_frac=0.95):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        x = radius * rng.uniform(-1, 1, m.n)
        y = rng.standard_normal(m.n)
        try:
            b2, s = m.b2_s(x, y)
            if abs(s) > s_frac * math.sqrt(b2) or math.sqrt(b2) >= m.family.b_max:
                continue
            fz.metric_eval(m, x, y)
        except (ValueError, ArithmeticError):
            continue
        out.append((x, y))
    return out


FUNK = _metric(ps.funk(), 0.0, 1.0, (0.1, -0.2, 0.05), K=-0.25)
SQUARE = _metric(ps.square_b(), -1.0, 1.0, (1.0, 0.0, 0.0), K=0.0, sing="pm_b")


def test_constant_phi_is_alpha():
    m = _metric(ONE, -1.0, 1.0, (0.2, 0.1, 0.0))
    for x, y in _points(m, 10):
        assert fz.metric_eval(m, x, y) == pytest.approx(rm.alpha_eval(m.chart, x, y), rel=1e-14)


def test_square_b_metric_form():
    for x, y in _points(SQUARE, 10, s_frac=0.9):
        a, b = rm.alpha_eval(SQUARE.chart, x, y), rm.beta_eval(SQUARE.chart, x, y)
        bb = math.sqrt(SQUARE.chart.b2(x))
        assert fz.metric_eval(SQUARE, x, y) == pytest.approx((bb * a + b) ** 2 / a, rel=1e-13)


def test_F_homogeneous():
    for x, y in _points(FUNK, 20):
        assert fz.metric_eval(FUNK, x, 2 * y) == pytest.approx(2 * fz.metric_eval(FUNK, x, y), rel=1e-12)


def test_euclidean_fundamental_tensor():
    m = _metric(ONE, 0.0, 0.0, ZERO3)
    assert np.allclose(fz.fundamental_tensor(m, [0.1, 0.2, 0.3], [1.0, -0.5, 2.0]), np.eye(3), atol=1e-14)


def test_funk_positive_definite():
    for x, y in _points(FUNK, 20):
        assert np.all(np.linalg.eigvalsh(fz.fundamental_tensor(FUNK, x, y)) > 0)


def test_square_b_degenerates_towards_singular_direction():
    x = np.array([0.1, 0.05, -0.02])
    b_up = rm.beta_data(SQUARE.chart, x, np.ones(3)).b_up
    e = np.array([0.0, 1.0, 0.0])
    e -= (e @ rm.alpha_tensors(SQUARE.chart, x, e).a_ij @ b_up) / (b_up @ rm.alpha_tensors(SQUARE.chart, x, e).a_ij @ b_up) * b_up
    mins = []
    for t in (0.3, 0.1, 0.03, 0.01):
        y = b_up + t * e
        g = fz.fundamental_tensor(SQUARE, x, y)
        mins.append(np.min(np.linalg.eigvalsh(g)) / np.max(np.linalg.eigvalsh(g)))
    assert all(a > b for a, b in zip(mins, mins[1:]))
    assert mins[-1] < 1e-3
    with pytest.raises(SingularDirection):
        fz.metric_eval(SQUARE, x, b_up)


def test_euclidean_spray_vanishes():
    m = _metric(ONE, 0.0, 1.0, (0.3, 0.0, 0.0))
    assert np.max(np.abs(fz.spray_direct(m, [0.1, 0.2, 0.3], [1.0, 2.0, 3.0]))) < 1e-15


def test_spray_homogeneous():
    for x, y in _points(FUNK, 20):
        assert rel(fz.spray_direct(FUNK, x, 2 * y), 4 * fz.spray_direct(FUNK, x, y)) < 1e-10


def test_funk_spray_projective():
    for x, y in _points(FUNK, 20):
        G = fz.spray_direct(FUNK, x, y)
        assert np.linalg.norm(G - (G @ y) / (y @ y) * y) < 1e-8 * np.linalg.norm(G)


def test_spray_routes_agree(metric_entries):
    for name, entry in metric_entries.items():
        if entry.regularity == "semidefinite":
            continue
        m, pts = sample_points(entry, 10, seed=3)
        for x, y, _ in pts:
            Gd, Gf = fz.spray_direct(m, x, y), fz.spray_formula(m, x, y)
            assert np.linalg.norm(Gd - Gf) < 1e-8 * (1 + np.linalg.norm(Gd)), name


def test_spray_formula_reduces_to_alpha_spray():
    for m in (_metric(ONE, -1.0, 1.0, (0.2, 0.1, 0.0)), _metric(ps.funk(), -1.0, 0.0, ZERO3)):
        for x, y in _points(m, 5):
            assert rel(fz.spray_formula(m, x, y), rm.alpha_tensors(m.chart, x, y).alpha_spray) < 1e-12


def test_euclidean_curvature_vanishes():
    m = _metric(ONE, 0.0, 1.0, ZERO3)
    assert np.max(np.abs(fz.riemann_tensor(m, [0.1, 0.2, 0.3], [1.0, 2.0, 3.0]))) < 1e-14


def test_constant_phi_matches_alpha_curvature():
    m = _metric(ONE, 1.0, 0.5, (0.3, -0.2, 0.1))
    for x, y in _points(m, 5):
        assert rel(fz.riemann_tensor(m, x, y), rm.alpha_riemann(m.chart, x, y)) < 1e-8


def test_funk_curvature_tensor():
    for x, y in _points(FUNK, 10):
        R = fz.riemann_tensor(FUNK, x, y)
        T, _ = fz.curvature_target(FUNK, x, y)
        assert np.linalg.norm(R + 0.25 * T) < 1e-6 * np.linalg.norm(R)


def test_curvature_fd_agrees():
    for x, y in _points(FUNK, 2):
        assert rel(fz.riemann_tensor(FUNK, x, y, de.FD), fz.riemann_tensor(FUNK, x, y)) < 1e-6


def test_round_sphere_flag_curvature():
    m = _metric(ONE, 1.0, 1.0, ZERO3)
    rng = np.random.default_rng(0)
    for _ in range(5):
        y, u = rng.standard_normal(3), rng.standard_normal(3)
        assert fz.flag_curvature(m, np.zeros(3), y, u) == pytest.approx(1.0, abs=1e-12)


def test_funk_flag_curvature():
    rng = np.random.default_rng(1)
    for x, y in _points(FUNK, 4):
        R = fz.riemann_tensor(FUNK, x, y)
        g = fz.fundamental_tensor(FUNK, x, y)
        Ks = [fz.flag_curvature(FUNK, x, y, rng.standard_normal(3), R, g) for _ in range(10)]
        assert max(abs(k + 0.25) for k in Ks) < 1e-6
        assert max(Ks) - min(Ks) < 1e-7


def test_degenerate_flag():
    with pytest.raises(DegenerateFlag):
        fz.flag_curvature(FUNK, np.zeros(3), np.array([1.0, 0, 0]), np.array([2.0, 0, 0]))


def test_constant_fit():
    for x, y in _points(FUNK, 10):
        fit = fz.constant_K_fit(FUNK, x, y)
        assert fit.K_fit == pytest.approx(-0.25, abs=1e-6) and fit.residual < 1e-6
    for x, y in _points(SQUARE, 10, s_frac=0.9):
        fit = fz.constant_K_fit(SQUARE, x, y)
        assert abs(fit.K_fit) < 1e-6 and fit.residual < 1e-6


def test_bryant_fit():
    m = _metric(ps.bryant(), 0.0, 1.0, (0.1, 0.0, 0.2), K=1.0)
    for x, y in _points(m, 10):
        assert fz.constant_K_fit(m, x, y).K_fit == pytest.approx(1.0, abs=1e-5)


def test_projective_routes():
    for x, y in _points(FUNK, 10):
        assert fz.projective_K(FUNK, x, y) == pytest.approx(-0.25, abs=1e-7)
    hyp = _metric(ONE, -1.0, 1.0, (0.2, 0.0, 0.0))
    for x, y in _points(hyp, 5):
        assert fz.projective_K(hyp, x, y) == pytest.approx(-1.0, abs=1e-12)
    berwald = _metric(ps.solved_q(0.0, 1.0, -1.0), 0.0, 1.0, (0.1, -0.2, 0.05), K=0.0)
    for x, y in _points(berwald, 10, radius=0.3, s_frac=0.9):
        assert abs(fz.projective_K(berwald, x, y)) < 1e-7


def test_psi_route():
    for x, y in _points(FUNK, 10):
        assert fz.psi_K(FUNK, x, y) == pytest.approx(fz.projective_K(FUNK, x, y), abs=1e-7)
    for mu in (-1.0, 0.5):
        m = _metric(ONE, mu, 1.0, (0.2, 0.0, 0.0))
        assert fz.psi_K(m, [0.1, 0.1, 0.0], [1.0, 2.0, 0.5]) == pytest.approx(mu, abs=1e-14)
    for x, y in _points(SQUARE, 10, s_frac=0.9):
        assert abs(fz.psi_K(SQUARE, x, y)) < 1e-8


def test_not_projectively_flat():
    m = _metric(ps.custom(lambda b2, s: 1 + 0.2 * s * s), -1.0, 1.0, (0.2, 0.1, 0.0))
    with pytest.raises(NotProjectivelyFlat):
        fz.projective_K(m, np.array([0.1, 0.2, 0.0]), np.array([1.0, 0.3, -0.5]))


def test_metric_validation():
    with pytest.raises(ValueError):
        fz.GeneralABMetric(FUNK.chart, ps.funk(), None, "sometimes")
    with pytest.raises(ValueError):
        fz.CurvatureFit(0.0, -1.0)
