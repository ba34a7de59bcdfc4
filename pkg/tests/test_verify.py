import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ale_expand.metric import MetricExpansion, SeedData, run_bootstrap
from ale_expand.poly import HarmonicPoly, Poly
from ale_expand.rational import Rational
from ale_expand.sampling import random_seeds, random_state, rng_from
from ale_expand.terms import Expansion
from ale_expand.verify import (
    ZERO_PROXY,
    KelvinError,
    NotPolynomial,
    NotPositiveDefiniteError,
    SamplePlan,
    decay_slope,
    fd_crosscheck,
    fd_tolerance,
    kelvin_expansion,
    kelvin_metric,
    kelvin_polynomial_check,
    numeric_eval,
    numeric_ricci_proxy,
    sample_proxy,
)

from helpers import x


def one(n):
    return HarmonicPoly(Poly.constant(n, 1))


# -- Kelvin ------------------------------------------------------------------------

def test_kelvin_examples():
    n = 6
    assert kelvin_expansion(Expansion.one(n)) == Expansion.atom(2 - n, one(n))
    h = HarmonicPoly(x(n, 0))
    assert kelvin_expansion(Expansion.atom(-5, h)) == Expansion.atom(1, h)
    with pytest.raises(KelvinError):
        kelvin_expansion(Expansion.atom(-5, one(4), 1))


@given(st.integers(0, 2**32), st.sampled_from([4, 5, 6]))
def test_kelvin_involution_and_order_law(seed, n):
    a = random_state(rng_from(seed), n, 12)[0][1]
    k = kelvin_expansion(a)
    assert kelvin_expansion(k) == a
    assert sorted(k.sigmas()) == sorted(2 - n - s for s in a.sigmas())


def test_kelvin_polynomial_examples():
    n = 6
    h = HarmonicPoly(x(n, 0))
    assert kelvin_polynomial_check(Expansion.atom(-5, h), n) == x(n, 0)
    bad = kelvin_polynomial_check(Expansion.atom(-6, h), n)
    assert isinstance(bad, NotPolynomial) and bad.offending == ((-6, 1),)
    with pytest.raises(KelvinError, match="odd dimension"):
        kelvin_polynomial_check(Expansion.atom(-4, HarmonicPoly(x(5, 0))), 5)
    with pytest.raises(KelvinError):
        kelvin_polynomial_check(Expansion.atom(-3, HarmonicPoly(x(4, 0))), 4)


def test_kelvin_n6_bootstrap():
    n = 6
    metric, _ = run_bootstrap(n, 10, random_seeds(rng_from(8), n))
    img = kelvin_metric(metric)
    assert img.is_polynomial and img.vanishes_at_origin()
    assert img.degree() <= 10 + 2 - n
    # the first n - 1 orders are harmonic seeds, so their images are harmonic
    early, _ = run_bootstrap(n, n - 1, random_seeds(rng_from(8), n))
    assert all(not p.laplacian() for p in kelvin_metric(early).entries.values())


# -- numeric evaluation ----------------------------------------------------------

def test_numeric_eval_examples():
    n = 4
    assert numeric_eval(Expansion.atom(-4, one(n)), (10, 0, 0, 0)) == pytest.approx(1e-4, rel=1e-14)
    assert numeric_eval(Expansion.atom(-4, HarmonicPoly(x(n, 0))), (10, 0, 0, 0)) == pytest.approx(1e-4, rel=1e-14)


@given(st.integers(0, 2**32))
def test_numeric_eval_linear(seed):
    rng = rng_from(seed)
    s = random_state(rng, 4, 9)
    a, b = s[0][1], s[2][3]
    p = (3.0, -4.0, 12.0, 1.5)
    lhs = numeric_eval(a + b, p)
    rhs = numeric_eval(a, p) + numeric_eval(b, p)
    assert abs(lhs - rhs) <= 1e-12 * max(abs(lhs), abs(rhs), 1e-300)


def test_numeric_eval_logs():
    n = 4
    p = (3.0, 4.0, 0.0, 0.0)
    v = numeric_eval(Expansion.atom(-2, one(n), 2, Rational(1, 2)), p)
    assert v == pytest.approx(0.5 * 25 ** -1 * math.log(5) ** 2, rel=1e-14)


# -- slopes ------------------------------------------------------------------------

def test_plan_validation():
    with pytest.raises(ValueError):
        SamplePlan(radii=(10, 20))
    with pytest.raises(ValueError):
        SamplePlan(radii=(10, 30, 20))
    with pytest.raises(ValueError):
        SamplePlan(directions=((0, 0, 0, 0),))
    assert len(SamplePlan().unit_directions(5)) == 6


@given(st.lists(st.floats(1.5, 500), min_size=3, max_size=6, unique=True), st.integers(-12, -1))
def test_exact_power_slope(radii, power):
    plan = SamplePlan(radii=sorted(radii))
    s = decay_slope(lambda p: float(np.linalg.norm(p)) ** power, plan, 4)
    assert s.slope == pytest.approx(power, abs=1e-9)


def test_log_power_slope_matches_regression():
    radii = (10.0, 20.0, 50.0, 100.0)
    plan = SamplePlan(radii=radii)

    def f(p):
        r = float(np.linalg.norm(p))
        return r ** -4 * math.log(r)

    s = decay_slope(f, plan, 4).slope
    ref = statistics.linear_regression([math.log(r) for r in radii],
                                       [math.log(r ** -4 * math.log(r)) for r in radii]).slope
    assert s == pytest.approx(ref, abs=1e-9)
    assert -4 < s < -3.5


def test_zero_proxy():
    s = decay_slope(lambda p: 0.0, SamplePlan(), 4)
    assert s.slope is None and s.status == ZERO_PROXY and s.within(-100)


# -- Ricci proxy -------------------------------------------------------------------

def test_flat_proxy():
    assert numeric_ricci_proxy(MetricExpansion.zero(5), (10, 0, 0, 0, 0)) == 0.0
    assert sample_proxy(MetricExpansion.zero(5), SamplePlan()).slope.status == ZERO_PROXY


def test_not_positive_definite():
    n = 4
    u = MetricExpansion(n, [[Expansion.atom(-3, one(n), coeff=-10 ** 6) if i == j else Expansion.zero(n)
                             for j in range(n)] for i in range(n)])
    with pytest.raises(NotPositiveDefiniteError):
        numeric_ricci_proxy(u, (2, 0, 0, 0))


def test_certified_slope():
    n = 5
    metric, _ = run_bootstrap(n, 8, random_seeds(rng_from(1), n, levels=(1, 2)))
    s = sample_proxy(metric, SamplePlan(radii=(10, 20, 40)))
    assert s.slope.slope <= -10 + 0.1
    assert s.fd_ok


@settings(max_examples=8)
@given(st.integers(0, 2**32))
def test_fd_matches_symbolic_derivatives(seed):
    n = 4
    rng = rng_from(seed)
    metric = MetricExpansion(n, random_state(rng, n, 7))
    for r in (10.0, 40.0):
        d = np.array([rng.uniform(-1, 1) for _ in range(n)])
        p = r * d / np.linalg.norm(d)
        assert fd_crosscheck(metric, p, 1e-3) <= fd_tolerance(p, 1e-3)


def test_csv_columns(tmp_path):
    n = 5
    seeds = SeedData(n, {1: {(0, 0): HarmonicPoly(x(n, 0))}})
    metric, _ = run_bootstrap(n, 8, seeds)
    s = sample_proxy(metric, SamplePlan(radii=(10, 20, 40)))
    path = tmp_path / "s.csv"
    s.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "r,direction_id,entry_i,entry_j,value"
    assert len(lines) == 1 + 3 * 6 * 15
