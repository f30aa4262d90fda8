import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

import oracles
from varlorentz.compactness import s_field
from varlorentz.domain import BallDomain, ConstantExponent, LogSingularExponent, RadialProfile
from varlorentz.norms import (NormSpec, ball_indicator_norm, holder_conjugate_field, lorentz_norm,
                              luxemburg_norm, modular)
from varlorentz.rearrangement import symmetric_decreasing_rearrangement

UNIT2 = BallDomain(2, 1.0)
LOG_Q = LogSingularExponent(1, 2, 1.0, 1.0, 0.1)


def ball_of_measure(m, d=2):
    return BallDomain(d, float((m / oracles.ball_volume(d)) ** (1 / d)))


def test_modular_examples():
    assert modular(RadialProfile.constant(UNIT2, 0.0), LOG_Q) == 0.0
    assert modular(RadialProfile.constant(UNIT2), LOG_Q) == pytest.approx(math.pi, rel=1e-12)
    dom = ball_of_measure(0.5)
    assert modular(RadialProfile.constant(dom, 2.0), ConstantExponent(3)) == pytest.approx(4.0, rel=1e-12)


def test_modular_matches_quad_on_log_singular_field():
    rng = np.random.default_rng(8)
    breaks = LOG_Q.breakpoints()
    for _ in range(5):
        f = oracles.random_profile(rng, UNIT2, max_knots=8, jumps=False)
        assert modular(f, LOG_Q) == pytest.approx(oracles.variable_modular(f, LOG_Q, 1.0, breaks), rel=1e-10)


def test_luxemburg_examples():
    dom = ball_of_measure(0.0625)
    chi = RadialProfile.constant(dom)
    assert luxemburg_norm(chi, ConstantExponent(4)) == pytest.approx(0.5, rel=1e-12)
    assert luxemburg_norm(RadialProfile.constant(UNIT2, 0.0), LOG_Q) == 0.0
    small = RadialProfile.annulus_indicator(UNIT2, 0.0, 0.01)
    ref = oracles.variable_luxemburg(small, LOG_Q, LOG_Q.breakpoints())
    assert luxemburg_norm(small, LOG_Q) == pytest.approx(ref, rel=1e-8)


def test_lorentz_examples():
    dom = ball_of_measure(0.25)
    spec = NormSpec(ConstantExponent(4), 2)
    assert lorentz_norm(RadialProfile.constant(dom), spec) == pytest.approx(0.5, rel=1e-10)
    assert lorentz_norm(RadialProfile.constant(dom, 0.0), spec) == 0.0
    phi = RadialProfile.plateau_tent(UNIT2)
    ref = oracles.dense_constant_lorentz(phi, 2.0, 1.0)
    assert lorentz_norm(phi, NormSpec(ConstantExponent(2), 1)) == pytest.approx(ref, rel=1e-6)


def test_norm_spec_validation():
    with pytest.raises(ValueError):
        NormSpec(ConstantExponent(2), 0.5)
    with pytest.raises(TypeError):
        NormSpec(2.0, 1)


def test_holder_conjugate_examples():
    field = holder_conjugate_field(ConstantExponent(6), ConstantExponent(3))
    assert np.all(field(np.array([1e-5, 0.3])) == 6.0)
    same = holder_conjugate_field(ConstantExponent(3), ConstantExponent(3))
    assert np.all(np.isinf(same(np.array([0.1, 0.5]))))
    assert same.infinite_on_positive_measure
    with pytest.raises(ValueError):
        luxemburg_norm(RadialProfile.constant(UNIT2), same)
    with pytest.raises(ValueError):
        holder_conjugate_field(ConstantExponent(2), ConstantExponent(3))


def test_holder_conjugate_of_log_singular():
    q = LogSingularExponent(1, 2, 1.0, 0.5, 0.1)
    pstar = q.critical
    field = holder_conjugate_field(ConstantExponent(pstar), q)
    r = np.geomspace(1e-30, 0.9, 200)
    expect = pstar * q(r) * s_field(q, pstar)(r)
    assert field(r) == pytest.approx(expect, rel=1e-12)
    assert np.all(np.isfinite(field(r)))
    assert not field.bounded and not field.infinite_on_positive_measure


def test_indicator_norms_in_unbounded_field_decrease():
    q = LogSingularExponent(1, 2, 1.0, 0.5, 0.1)
    field = holder_conjugate_field(ConstantExponent(q.critical), q)
    vals = ball_indicator_norm(UNIT2, 2.0 ** -np.arange(1, 12), field)
    assert np.all(np.diff(vals) < 0)


profiles = st.builds(
    lambda seed: oracles.random_profile(np.random.default_rng(seed), UNIT2, max_knots=8),
    st.integers(0, 2 ** 32 - 1))
exponents = st.sampled_from([ConstantExponent(1.5), ConstantExponent(3.0), LOG_Q,
                             LogSingularExponent(1, 3, 0.5, 0.5, 0.3)])


@settings(max_examples=25, deadline=None)
@given(profiles, exponents)
def test_luxemburg_unit_ball_property(f, q):
    assume(f.sup > 0)
    c = luxemburg_norm(f, q)
    assert modular(f * (1 / c), q) <= 1 + 1e-9
    assert modular(f * (1 / (c * (1 - 1e-8))), q) >= 1 - 1e-6


@settings(max_examples=15, deadline=None)
@given(profiles, exponents, st.floats(0.01, 100.0), st.sampled_from([1.0, 2.0]))
def test_homogeneity(f, q, t, p):
    assert luxemburg_norm(f * t, q) == pytest.approx(t * luxemburg_norm(f, q), rel=1e-8)
    spec = NormSpec(q, p)
    assert lorentz_norm(f * -t, spec) == pytest.approx(t * lorentz_norm(f, spec), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(st.floats(1.0, 6.0), st.floats(1.0, 4.0), st.floats(0.0, 0.8), st.floats(0.05, 0.2))
def test_constant_exponent_indicator(q0, p, r1, width):
    chi = RadialProfile.annulus_indicator(UNIT2, r1, r1 + width)
    A = math.pi * ((r1 + width) ** 2 - r1 ** 2)
    ref = (A ** (p / q0) / p) ** (1 / p)
    assert lorentz_norm(chi, NormSpec(ConstantExponent(q0), p)) == pytest.approx(ref, rel=1e-8)


@settings(max_examples=15, deadline=None)
@given(profiles, st.integers(0, 2 ** 32 - 1), exponents)
def test_lattice_monotonicity(f, seed, q):
    rng = np.random.default_rng(seed)
    bump = oracles.random_profile(rng, UNIT2, max_knots=8, signed=False)
    g = RadialProfile.combine([f.abs(), bump], [1.0, 1.0])
    assert luxemburg_norm(f, q) <= luxemburg_norm(g, q) * (1 + 1e-10)
    spec = NormSpec(q, 1.0)
    assert lorentz_norm(f, spec) <= lorentz_norm(g, spec) * (1 + 1e-10)


@settings(max_examples=10, deadline=None)
@given(profiles, st.sampled_from([1.0, 2.0]))
def test_symmetrization_inequality(f, p):
    # |Omega| <= 1 and q decreasing in |x|
    dom = BallDomain(2, 0.5)
    f = RadialProfile(dom, f.knots * 0.5, f.values)
    spec = NormSpec(LOG_Q, p)
    assert lorentz_norm(f, spec) <= lorentz_norm(symmetric_decreasing_rearrangement(f), spec) * (1 + 1e-9)
