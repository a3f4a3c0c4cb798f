import math

import numpy as np
import pytest

from finsler_lab import deform as dm
from finsler_lab import phisolver as ps
from finsler_lab import riemann as rm
from finsler_lab.errors import DomainViolation, UnsupportedSignature
from finsler_lab.riemann import ProjectiveChart

NONZERO = [
    ProjectiveChart(3, -1.0, 1.0, (0.0, 0.0, 0.0)),
    ProjectiveChart(3, 1.0, 0.5, (0.3, -0.2, 0.1)),
    ProjectiveChart(3, -0.5, 1.2, (0.4, 0.3, 0.0)),
]
ZERO = ProjectiveChart(3, -1.0, 1.0, (1.0, 0.0, 0.0), kappa_zero=True)


def _points(ch, count, seed=0, radius=0.3):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        x = radius * rng.uniform(-1, 1, ch.n)
        if ch.admissible(x) and ch.kappa - ch.mu * ch.b2(x) > 0.05 and ch.b2(x) > 0.01:
            out.append((x, rng.standard_normal(ch.n)))
    return out


@pytest.mark.parametrize("ch", NONZERO)
def test_nonzero_certificate(ch):
    pair = dm.deform_nonzero(ch)
    for x, y in _points(ch, 50):
        cert = dm.certify(ch, pair, x, y)
        assert cert.flatness < 1e-7
        assert cert.conformal < 1e-8
        assert cert.identity < 1e-10
        assert cert.roundtrip < 1e-9


@pytest.mark.parametrize("ch", NONZERO)
def test_conformal_factor_magnitude(ch):
    pair = dm.deform_nonzero(ch)
    for x, y in _points(ch, 5, seed=1):
        fr = rm.metric_frame(pair.abar_eval, x, y)
        bd = rm.oneform_data(fr, pair.bbar_eval, x, y)
        ratio = np.diag(bd.bij) / np.diag(fr.a_ij)
        assert np.allclose(np.abs(ratio), math.sqrt(abs(ch.mu)), atol=1e-8)


def test_reverse_with_b2_in_inner_factor_does_not_invert():
    ch = NONZERO[2]
    pair = dm.deform_nonzero(ch)
    x, y = _points(ch, 1, seed=2)[0]
    fr = rm.metric_frame(pair.abar_eval, x, y)
    bbar2 = rm.oneform_data(fr, pair.bbar_eval, x, y).b2
    args = (ch.kappa, ch.mu, pair.abar_eval(x, y), pair.bbar_eval(x, y), bbar2)
    a2, _ = dm.reverse_nonzero(*args)
    a2_inner, _ = dm.reverse_nonzero(*args, inner_b2=ch.b2(x))
    assert a2 == pytest.approx(ch.alpha2(x, y), rel=1e-12)
    assert abs(a2_inner / ch.alpha2(x, y) - 1) > 1e-7


def test_zero_certificate():
    pair = dm.deform_zero(ZERO)
    for x, y in _points(ZERO, 50, seed=3):
        cert = dm.certify(ZERO, pair, x, y)
        assert cert.flatness < 1e-7
        assert cert.conformal < 1e-8
        assert cert.identity < 1e-10
        assert math.isnan(cert.roundtrip)


def test_guards():
    with pytest.raises(DomainViolation):
        dm.deform_nonzero(ZERO)
    with pytest.raises(DomainViolation):
        dm.deform_nonzero(ProjectiveChart(3, 0.0, 1.0, (0.0, 0.0, 0.0)))
    with pytest.raises(UnsupportedSignature):
        dm.deform_nonzero(ProjectiveChart(3, -1.0, 0.5, (1.0, 0.0, 0.0)))
    with pytest.raises(DomainViolation):
        dm.deform_zero(NONZERO[0])


@pytest.mark.parametrize("mu", [-1.0, 0.5])
def test_transfer_funk(mu):
    kappa = 1.0
    fam = dm.transfer(ps.funk(), mu, kappa)
    b_hi = min(0.9, fam.b_max * 0.95)
    for b in np.linspace(0.05, b_hi, 12):
        for s in np.linspace(-0.95 * b, 0.95 * b, 12):
            assert ps.eval_phi(fam, b * b, s) > 0
            assert abs(ps.residual_pde(fam, b * b, s)) < 1e-7
            assert abs(ps.residual_pde2(fam, b * b, s, kappa, mu, -0.25 * abs(mu))) < 1e-7


def test_transfer_guards():
    with pytest.raises(DomainViolation):
        dm.transfer(ps.funk(), 0.0, 1.0)
    with pytest.raises(DomainViolation):
        dm.phi_transfer(ps.funk(), 1.0, 1.0, 1.5, 0.0)
