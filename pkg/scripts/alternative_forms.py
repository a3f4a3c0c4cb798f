"""Numerical checks that decide between nearby variants of a few formulas.

Each block prints the residual of the variant that fails next to the one that holds.
"""
import math

import numpy as np

from finsler_lab import catalog as cat
from finsler_lab import deform as dm
from finsler_lab import diffengine as de
from finsler_lab import phisolver as ps
from finsler_lab import riemann as rm
from finsler_lab.errors import NoRealRoot


def shen_denominator():
    for verbatim in (True, False):
        fam = ps.shen_eps(0.5, verbatim)
        worst = max(abs(ps.residual_pde(fam, b * b, f * b)) for b in np.linspace(0.1, 0.9, 9)
                    for f in np.linspace(-0.9, 0.9, 7))
        print(f"eps-family, {'1 - eps b^2  ' if verbatim else '1 - eps^2 b^2'} denominator: max |pde| = {worst:.2e}")


def reverse_deformation():
    ch = rm.ProjectiveChart(3, -0.5, 1.2, (0.4, 0.3, 0.0))
    pair = dm.deform_nonzero(ch)
    rng = np.random.default_rng(0)
    err_inner = err_fixed = 0.0
    for _ in range(20):
        x, y = 0.3 * rng.uniform(-1, 1, 3), rng.standard_normal(3)
        fr = rm.metric_frame(pair.abar_eval, x, y)
        bbar2 = rm.oneform_data(fr, pair.bbar_eval, x, y).b2
        args = (ch.kappa, ch.mu, pair.abar_eval(x, y), pair.bbar_eval(x, y), bbar2)
        a2 = ch.alpha2(x, y)
        err_fixed = max(err_fixed, abs(dm.reverse_nonzero(*args)[0] - a2) / a2)
        err_inner = max(err_inner, abs(dm.reverse_nonzero(*args, inner_b2=ch.b2(x))[0] - a2) / a2)
    print(f"reverse deformation, b^2 in inner factor: rel err {err_inner:.2e}; bbar^2 in both: {err_fixed:.2e}")


def hessian_example():
    j = de.jet2(lambda x: x[0] ** 2 * x[1], [2.0, 3.0])
    print(f"d^2(x1^2 x2)/dx1 dx2 at (2, 3) = {j.hess[0, 1]:g} (2 x1 = 4)")


def quartic_example():
    for u in (1.0, 3.0):
        try:
            roots = ps.solve_q_quartic(u, 1.0, 2.0, 0.0)
        except NoRealRoot as e:
            roots = f"no real root ({e})"
        print(f"D=0, sigma=1, C=2, u={u}: q = {roots}")


def third_zero_curvature_closed_form():
    """Closed form of the (c1, c2) K = 0 metric against the solution formula."""
    c1 = c2 = 1
    pair = cat.pq_pairs()["k0-two-sign(+1,+1)"]
    fam = ps.kappa_zero(pair.tau, pair.p, pair.q, pair.sign)
    worst = 0.0
    for b in np.linspace(0.2, 0.8, 7):
        for s in np.linspace(-0.8 * b, 0.8 * b, 7):
            W = math.sqrt(1 + c1 * (b * b - s * s))
            closed = (1 + c2 * W) ** 2 * (b + s) ** 2 / (W * (1 + c1 * b * (b + s) + c2 * W) ** 2)
            worst = max(worst, abs(fam(b * b, s) - closed))
    print(f"(c1, c2) K = 0 metric, corrected closed form vs solution formula: {worst:.2e}")


if __name__ == "__main__":
    shen_denominator()
    reverse_deformation()
    hessian_example()
    quartic_example()
    third_zero_curvature_closed_form()
