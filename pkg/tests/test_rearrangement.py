import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from varlorentz.compactness import closed_form_s_star, s_field
from varlorentz.domain import BallDomain, LogSingularExponent, RadialProfile
from varlorentz.rearrangement import (StepFunction, decreasing_rearrangement, distribution_function,
                                      exponent_rearrangement, hardy_littlewood_check,
                                      symmetric_decreasing_rearrangement)

UNIT2 = BallDomain(2, 1.0)


def two_level(dom=UNIT2):
    """2 on a ball of measure 0.1, then 1 out to measure 0.3, then 0."""
    rA, rB = dom.radius_of_measure(0.1), dom.radius_of_measure(0.3)
    return RadialProfile.steps(dom, [float(rA), float(rB)], [2.0, 1.0, 0.0])


def test_distribution_two_level():
    df = distribution_function(two_level())
    assert df(np.array([0.5, 1.5, 2.5])) == pytest.approx([0.3, 0.1, 0.0], abs=1e-15)
    assert df(1.0) == pytest.approx(0.1, abs=1e-15)
    assert df.left_limit(1.0) == pytest.approx(0.3, abs=1e-15)


def test_distribution_zero_and_tent():
    assert distribution_function(RadialProfile.constant(UNIT2, 0.0))(np.array([0.0, 1.0])).tolist() == [0, 0]
    df = distribution_function(RadialProfile.tent(UNIT2))
    assert df(0.5) == pytest.approx(math.pi / 4, rel=1e-14)
    lam = np.linspace(0, 0.999, 50)
    assert df(lam) == pytest.approx(math.pi * (1 - lam) ** 2, rel=1e-12)


def test_rearrangement_two_level():
    fs = decreasing_rearrangement(two_level())
    t = np.array([0.0, 0.05, 0.0999, 0.1, 0.2, 0.2999, 0.3, 1.0, 10.0])
    assert fs(t).tolist() == [2, 2, 2, 1, 1, 1, 0, 0, 0]
    assert fs.support == pytest.approx(0.3, abs=1e-15)


def test_rearrangement_of_decreasing_profile():
    rng = np.random.default_rng(2)
    dom = BallDomain(3, 0.8)
    knots = np.concatenate([[0], np.sort(rng.uniform(0, 0.8, 10)), [0.8]])
    f = RadialProfile(dom, knots, np.sort(rng.uniform(0, 1, knots.size))[::-1])
    t = np.linspace(0, dom.measure(), 10_000, endpoint=False)
    direct = f(dom.radius_of_measure(t))
    assert np.max(np.abs(decreasing_rearrangement(f)(t) - direct)) < 1e-12


def test_rearrangement_of_annulus_indicator():
    dom = BallDomain(3, 1.0)
    chi = RadialProfile.annulus_indicator(dom, 0.4, 0.7, c=2.5)
    A = float(dom.ball_measure(0.7) - dom.ball_measure(0.4))
    fs = decreasing_rearrangement(chi)
    assert fs(np.array([0.0, A * (1 - 1e-12), A, A * 1.01])).tolist() == [2.5, 2.5, 0, 0]


def test_symmetric_examples():
    dom = BallDomain(2, 1.0)
    f = RadialProfile(dom, [0, 0.3, 0.6, 1], [1.0, 0.8, 0.2, 0.0])
    assert symmetric_decreasing_rearrangement(f) is f
    chi = RadialProfile.annulus_indicator(dom, 0.5, 0.8, c=3.0)
    fsh = symmetric_decreasing_rearrangement(chi)
    rho = math.sqrt(0.8 ** 2 - 0.5 ** 2)
    assert fsh(np.array([0.0, rho * 0.999, rho * 1.001])) == pytest.approx([3, 3, 0])
    lam = np.random.default_rng(0).uniform(0, 3, 20)
    assert distribution_function(fsh)(lam) == pytest.approx(distribution_function(chi)(lam), abs=1e-12)


def test_exponent_rearrangement_simple_cases():
    dom = BallDomain(2, 0.5)
    closed = exponent_rearrangement(RadialProfile.constant(dom, 0.7), 3.0)
    t = np.linspace(0, dom.measure(), 20, endpoint=False)
    assert closed(t) == pytest.approx(3.0 ** 0.7, rel=1e-15)
    assert closed(dom.measure()) == 0.0
    s = RadialProfile.steps(dom, [0.2], [0.5, 2.0])
    closed = exponent_rearrangement(s, 2.0)
    inner = float(dom.ball_measure(0.2))
    outer = dom.measure() - inner
    assert closed(np.array([0.0, outer * 0.99, outer * 1.01])) == pytest.approx([4.0, 4.0, 2 ** 0.5])
    with pytest.raises(ValueError):
        exponent_rearrangement(s, 1.0)


def test_exponent_rearrangement_log_singular():
    q = LogSingularExponent(1, 2, 1.0, 0.5, 0.1)
    dom = BallDomain(2, 1 / math.sqrt(math.pi))
    field = s_field(q, q.critical)
    s = RadialProfile.from_function(dom, field, n_knots=4096, r_min=1e-14)
    closed = exponent_rearrangement(s, 2.0)
    ref = closed_form_s_star(1.0, 2, 0.5, 0.1, dom)
    t = np.geomspace(1e-6, dom.measure(), 400)[:-1]
    assert np.max(np.abs(closed(t) / 2.0 ** ref(t) - 1)) < 1e-3


def test_hardy_littlewood_examples():
    dom = BallDomain(2, 1.0)
    f = RadialProfile(dom, [0, 0.4, 1], [0.2, 1.0, 0.5])
    one = RadialProfile.constant(dom)
    lhs, rhs = hardy_littlewood_check(f, one)
    assert lhs == pytest.approx(oracles.lp_norm(f, 1), rel=1e-12)
    assert rhs == pytest.approx(lhs, rel=1e-12)
    a = RadialProfile.annulus_indicator(dom, 0.0, 0.3)
    b = RadialProfile.annulus_indicator(dom, 0.5, 0.9)
    lhs, rhs = hardy_littlewood_check(a, b)
    assert lhs == 0.0
    assert rhs == pytest.approx(math.pi * 0.09, rel=1e-12)
    with pytest.raises(ValueError):
        hardy_littlewood_check(RadialProfile.tent(dom, -1.0), one)


def test_step_function():
    F = StepFunction([0.0, 0.1, 0.3], [2.0, 1.0])
    assert F(np.array([0.0, 0.1, 0.29, 0.3])).tolist() == [2, 1, 1, 0]
    assert F.measure_above(np.array([0.5, 1.0, 2.0])).tolist() == [0.3, 0.1, 0.0]
    with pytest.raises(ValueError):
        StepFunction([0.0, 0.1], [1.0, 2.0])
    with pytest.raises(ValueError):
        StepFunction([0.0, 0.2, 0.1], [2.0, 1.0])


def test_to_steps_error_bound():
    rng = np.random.default_rng(4)
    for _ in range(10):
        f = oracles.random_profile(rng, BallDomain(2, 1.0))
        fs = decreasing_rearrangement(f)
        steps = fs.to_steps(4096)
        assert steps.levels.size <= 4096
        t = rng.uniform(0, f.domain.measure(), 2000)
        gap = fs(t) - steps(t)
        n_plateau = np.unique(np.abs(f.values)).size
        assert np.all(gap >= -1e-12 * f.sup)
        assert np.max(gap) <= f.sup / (4096 - n_plateau) * (1 + 1e-9)


profiles = st.builds(
    lambda d, radius, seed, signed: oracles.random_profile(
        np.random.default_rng(seed), BallDomain(d, radius), max_knots=16, signed=signed),
    st.integers(2, 3), st.floats(0.3, 1.2), st.integers(0, 2 ** 32 - 1), st.booleans())


@settings(max_examples=60, deadline=None)
@given(profiles, st.integers(0, 2 ** 32 - 1))
def test_equimeasurability(f, seed):
    lam = np.random.default_rng(seed).uniform(0, f.sup, 20)
    df = distribution_function(f)(lam)
    fs = decreasing_rearrangement(f)
    fsh = symmetric_decreasing_rearrangement(f)
    assert np.max(np.abs(df - oracles.distribution(f, lam))) < 1e-9
    assert np.max(np.abs(fs.measure_above(lam) - df)) < 1e-9
    assert np.max(np.abs(distribution_function(fsh)(lam) - df)) < 1e-9


@settings(max_examples=60, deadline=None)
@given(profiles)
def test_rearrangement_monotone_and_supported(f):
    fs = decreasing_rearrangement(f)
    m = f.domain.measure()
    t = np.sort(np.concatenate([np.linspace(0, 1.2 * m, 500), fs.breakpoints]))
    v = fs(t)
    assert np.all(np.diff(v) <= 0)
    assert np.all(v[t >= m] == 0)
    # generalized inverse, breakpoints included: d_f(f*(t)) <= t < d_f(f*(t) - 0)
    df = distribution_function(f)
    t = t[t < fs.support]
    v = fs(t)
    assert np.all(df(v) <= t + 1e-12 * m)
    below = v * (1 - 1e-9) - 1e-300
    assert np.all(df(below) > t - 1e-12 * m)


@settings(max_examples=30, deadline=None)
@given(profiles)
def test_symmetric_idempotent(f):
    fsh = symmetric_decreasing_rearrangement(f)
    again = symmetric_decreasing_rearrangement(fsh)
    r = np.linspace(0, f.domain.radius, 300)
    assert again(r) == pytest.approx(fsh(r), abs=1e-9 * max(f.sup, 1))


@settings(max_examples=40, deadline=None)
@given(profiles)
def test_hardy_littlewood_property(f):
    g = f.abs()
    h = oracles.random_profile(np.random.default_rng(int(f.values.size)), f.domain, signed=False)
    lhs, rhs = hardy_littlewood_check(g, h)
    assert lhs <= rhs + 1e-9
    lhs, rhs = hardy_littlewood_check(g, g)
    assert lhs == pytest.approx(rhs, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2 ** 32 - 1), st.sampled_from([1.0, 1.5, 2.0]))
def test_polya_szego(d, seed, p):
    rng = np.random.default_rng(seed)
    dom = BallDomain(d, 0.9)
    f = oracles.random_profile(rng, dom, max_knots=10, jumps=False, signed=False)
    f = RadialProfile(dom, f.knots, np.concatenate([f.values[:-1], [0.0]]))
    fsh = symmetric_decreasing_rearrangement(f)
    assert fsh.seminorm(p) <= f.seminorm(p) * (1 + 1e-9)
    dec = RadialProfile(dom, f.knots, np.sort(f.values)[::-1])
    assert symmetric_decreasing_rearrangement(dec).seminorm(p) == dec.seminorm(p)
