import math

import pytest

from finsler_lab import catalog as cat

TOML = """
[metric.quad-test]
mu = 0.0
lam = 1.0
a = [0.1, 0.0, 0.0]
family = "expr"
phi = "1 + s*s"
description = "not a solution"
b_range = [0.0, 0.8]

[metric.funk-wide]
mu = 0.0
lam = 1.0
a = [0.0, 0.2, 0.0]
family = "funk"
params = { sigma = -0.25, C = 2.0 }
expected_K = -0.25
x_radius = 0.3

[metric.k0-constant]
mu = -1.0
lam = 3.0
a = [3.0, 0.0, 0.0]
family = "kappa-zero"
params = { tau = -1.0, C = 2.8284271247461903, signs = [1, 1, 1] }
expected_K = -1.0
b_range = [0.1, 10.0]
s_margin = 0.05
regularity = "singular-pm-b"
k_tol = 1e-5

[deformation.sphere-test]
mu = 1.0
lam = 0.5
a = [0.3, 0.0, 0.0]
route = "nonzero"
"""


def test_builtin_contents(entries):
    assert entries["funk"].expected_K == -0.25
    assert entries["square-b"].expected_K == 0 and entries["square-b"].regularity == "singular-pm-b"
    assert entries["bryant"].expected_K == 1
    assert {"lemma33-hyperbolic", "lemma34-k0"} <= set(entries)
    assert entries["lemma34-k0"].kind == "deformation"


def test_worked_kappa_zero_entries(entries):
    Ks = sorted(e.expected_K for e in entries.values() if e.kind == "metric" and e.family["tag"] == "pq")
    # two K = 0 (besides the square metric), three K = -1, one K = 1
    assert Ks == [-1, -1, -1, 0, 0, 1]


def test_every_pair_is_named():
    names = set(cat.pq_pairs())
    assert "square-b" in names and "k1" in names
    assert sum(n.startswith("k0-two-sign") for n in names) == 4


def test_summary_is_json_ready(entries):
    s = entries["funk-transfer"].summary()
    assert s["name"] == "funk-transfer"
    assert all(not isinstance(v, float) or math.isfinite(v) for v in s.values())


def test_load_toml(tmp_path):
    p = tmp_path / "extra.toml"
    p.write_text(TOML)
    got = cat.load_catalog([str(p)])
    assert got["funk-wide"].phi()[0].b_max == pytest.approx(math.sqrt(2))
    assert got["quad-test"].phi()[0](0.25, 0.5) == pytest.approx(1.25)
    assert got["sphere-test"].kind == "deformation"
    assert got["k0-constant"].phi()[1].tau == -1
    assert "funk" in got


def test_env_var(tmp_path, monkeypatch):
    p = tmp_path / "extra.toml"
    p.write_text(TOML)
    monkeypatch.setenv(cat.ENV_VAR, str(p))
    assert "quad-test" in cat.load_catalog()
    assert cat.get("quad-test").b_range == (0.0, 0.8)


def test_later_files_override(tmp_path):
    p = tmp_path / "extra.toml"
    p.write_text(TOML.replace("[metric.funk-wide]", "[metric.funk]"))
    assert cat.load_catalog([str(p)])["funk"].a == (0.0, 0.2, 0.0)


@pytest.mark.parametrize("bad", [
    "[metric.x]\nmu = 0.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'funk'\ncolour = 'red'\n",
    "[metric.x]\nmu = 0.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'funk'\nregularity = 'mostly'\n",
    "[metric.x]\nmu = 0.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'funk'\nexpected_K = 1.0\n",
    "[metric.x]\nmu = -1.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'square-b'\n",
    "[metric.x]\nmu = -1.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'bryant'\n",
    "[metric.x]\nmu = 0.0\nlam = 1.0\na = [0, 0, 0]\nfamily = 'nope'\n",
    "[deformation.x]\nmu = -1.0\nlam = 1.0\na = [0, 0, 0]\nroute = 'sideways'\n",
    "[other.x]\nmu = 1\n",
])
def test_bad_entries(tmp_path, bad):
    p = tmp_path / "bad.toml"
    p.write_text(bad)
    with pytest.raises(cat.CatalogError):
        cat.load_file(str(p))


def test_chart_keeps_kappa_in_lower_dimension(entries):
    e = entries["lemma33-sphere"]
    assert e.chart(2).kappa == pytest.approx(e.chart(3).kappa)
    assert e.chart(5).a[3:] == (0.0, 0.0)
