from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logbonnet.errors import DomainError, ValidationError
from logbonnet.terms import (
    AngularHarmonic, Blend, Bump, Const, IterLog, LogOnePlus, LogR, PowR, Product, Scale, SmoothTerm, Sum,
    smooth_from_dict,
)

mpmath.mp.dps = 50


def mp_value(term, r, theta):
    """Independent high-precision evaluation of a catalog term."""
    if isinstance(term, Const):
        return mpmath.mpf(term.c)
    if isinstance(term, PowR):
        return r ** term.p
    if isinstance(term, LogOnePlus):
        return mpmath.log(1 + term.coef * r ** (2 * term.a))
    if isinstance(term, AngularHarmonic):
        return term.amplitude * r ** abs(term.m) * mpmath.cos(term.m * theta)
    if isinstance(term, Bump):
        x = (r - term.r0) / (term.r1 - term.r0)
        if x <= 0:
            return mpmath.mpf(1)
        if x >= 1:
            return mpmath.mpf(0)
        psi = lambda y: mpmath.exp(-1 / y)  # noqa: E731
        return psi(1 - x) / (psi(x) + psi(1 - x))
    if isinstance(term, Sum):
        return sum(mp_value(x, r, theta) for x in term.terms)
    if isinstance(term, Scale):
        return term.factor * mp_value(term.term, r, theta)
    if isinstance(term, Product):
        out = mpmath.mpf(1)
        for x in term.terms:
            out *= mp_value(x, r, theta)
        return out
    raise TypeError(term)


CATALOG = {
    "const": Const(0.7),
    "pow_r": PowR(1.5),
    "log_one_plus": LogOnePlus(1.0),
    "log_one_plus_negative": LogOnePlus(1.0, -0.25),
    "bump": Bump(0.2, 0.6),
    "harmonic": AngularHarmonic(2, 0.5),
    "harmonic_negative_m": AngularHarmonic(-3, 1.2),
    "sum": Const(1.0) + PowR(2.0) - LogOnePlus(0.5),
    "scale": 3.0 * PowR(0.5),
    "bump_times_harmonic": AngularHarmonic(1, 1.0) * Bump(0.2, 0.6),
    "product": PowR(1.0) * LogOnePlus(2.0),
}


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_catalog_derivatives_match_central_differences(name):
    # the closed forms are log-polar jets: d/dt and d^2/dt^2 with t = log r, plus theta
    term = CATALOG[name]
    t_grid = np.log(np.geomspace(0.05, 0.9, 50))
    theta = 0.7
    jet = term.jet(t_grid, theta)
    for i, t in enumerate(t_grid):
        tm, th = mpmath.mpf(t), mpmath.mpf(theta)
        along_t = lambda x: mp_value(term, mpmath.exp(x), th)  # noqa: E731
        along_theta = lambda y: mp_value(term, mpmath.exp(tm), y)  # noqa: E731
        pairs = [
            (jet.v[i], along_t(tm)),
            (jet.t[i], mpmath.diff(along_t, tm, 1)),
            (jet.tt[i], mpmath.diff(along_t, tm, 2)),
            (jet.th[i], mpmath.diff(along_theta, th, 1)),
            (jet.thth[i], mpmath.diff(along_theta, th, 2)),
        ]
        for got, want in pairs:
            want = float(want)
            if abs(want) < 1e-40:  # exact zero up to the oracle's own differencing noise
                assert abs(got) < 1e-40
            else:
                assert abs(got - want) < 1e-6 * abs(want)


@pytest.mark.parametrize("name", ["pow_r", "log_one_plus", "harmonic", "sum", "product"])
def test_catalog_first_derivatives_match_double_precision_differences(name):
    term = CATALOG[name]
    r = np.geomspace(0.05, 0.9, 50)
    h = 1e-5 * r
    fd = (term.value(r + h, 0.3) - term.value(r - h, 0.3)) / (2 * h)
    exact = term.derivatives(r, 0.3)[1]
    assert np.max(np.abs(fd - exact) / np.abs(exact)) < 1e-6


def test_harmonic_is_harmonic():
    term = AngularHarmonic(3, 0.8)
    r = np.geomspace(0.01, 2.0, 30)
    assert np.max(np.abs(term.laplacian(r, 1.1))) < 1e-12 * np.max(np.abs(term.value(r, 1.1))) / 0.01**2


def test_log_r_is_harmonic_and_iterlog_matches_closed_form():
    assert LogR(1.3).laplacian(0.2) == 0.0
    assert IterLog(1, 0.7).laplacian(math.exp(-1)) == pytest.approx(-0.7 * math.e**2, rel=1e-14)


def test_round_sphere_factor_has_unit_curvature():
    u = Const(math.log(2.0)) - LogOnePlus(1.0)
    r = np.geomspace(1e-3, 5.0, 40)
    k = -np.exp(-2 * u.value(r, 0.0)) * u.laplacian(r, 0.0)
    assert np.max(np.abs(k - 1.0)) < 1e-12


def test_bump_values_and_validation():
    b = Bump(0.2, 0.6)
    assert b.value(0.1) == 1.0
    assert b.value(0.7) == 0.0
    assert b.value(0.4) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValidationError):
        Bump(0.5, 0.5)
    with pytest.raises(ValidationError):
        Bump(0.0, 0.5)


def test_bump_derivatives_vanish_outside_annulus():
    b = Bump(0.2, 0.6)
    for r in (0.1, 0.199, 0.61, 0.9):
        _, fr, frr, _, _ = b.derivatives(r)
        assert fr == 0.0 and frr == 0.0


def test_log_one_plus_domain():
    term = LogOnePlus(1.0, -1.0)
    assert term.max_radius() == pytest.approx(1.0)
    with pytest.raises(DomainError):
        term.value(1.5)


def test_invalid_catalog_parameters():
    with pytest.raises(ValidationError):
        PowR(0.0)
    with pytest.raises(ValidationError):
        LogOnePlus(-1.0)


def test_blend_is_inner_inside_and_outer_outside():
    inner = LogR(0.3) + IterLog(1, 0.7)
    outer = Const(math.log(2.0)) - LogOnePlus(1.0)
    blend = Blend(inner, outer, Bump(0.2, 0.45))
    assert blend.value(0.1, 0.0) == pytest.approx(inner.value(0.1, 0.0), rel=1e-15)
    assert blend.value(0.8, 0.0) == pytest.approx(outer.value(0.8, 0.0), rel=1e-15)
    assert blend.laplacian(0.1) == pytest.approx(inner.laplacian(0.1), rel=1e-14)
    assert blend.laplacian(0.8) == pytest.approx(outer.laplacian(0.8), rel=1e-14)


def test_blend_never_evaluates_inner_beyond_r1():
    # depth-2 profile is undefined for r > 1/e, blended well inside that radius
    blend = Blend(IterLog(2, 1.0), Const(0.0), Bump(0.1, 0.3))
    assert blend.value(0.9) == 0.0


def test_blend_laplacian_matches_product_rule_fd():
    blend = Blend(LogR(0.3) + IterLog(1, 0.7), Const(math.log(2.0)) - LogOnePlus(1.0), Bump(0.2, 0.45))
    r = np.linspace(0.21, 0.44, 25)
    h = 1e-4 * r
    f = lambda x: blend.value(x, 0.0)  # noqa: E731
    fd = (f(r + h) - 2 * f(r) + f(r - h)) / h**2 + (f(r + h) - f(r - h)) / (2 * h) / r
    exact = blend.laplacian(r, 0.0)
    assert np.max(np.abs(fd - exact)) < 1e-4 * np.max(np.abs(exact))


def test_algebra_types():
    assert isinstance(Const(1.0) + PowR(1.0), SmoothTerm)
    assert isinstance(2.0 * LogOnePlus(1.0), Scale)
    assert not isinstance(LogR(1.0) + Const(1.0), SmoothTerm)
    with pytest.raises(TypeError):
        LogR(1.0) * PowR(1.0)


def test_jet_broadcasts_over_grids():
    term = AngularHarmonic(2, 1.0) + PowR(1.0)
    t = np.linspace(-3, -1, 4)[:, None]
    theta = np.linspace(0, 2 * np.pi, 7)[None, :]
    jet = term.jet(t, theta)
    assert jet.v.shape == (4, 7) and jet.thth.shape == (4, 7)


# --- serialization ---------------------------------------------------------------

leaf = st.one_of(
    st.builds(Const, st.floats(-5, 5)),
    st.builds(PowR, st.floats(0.1, 4)),
    st.builds(LogOnePlus, st.floats(0.1, 3), st.floats(0.0, 2.0)),
    st.builds(lambda a, w: Bump(a, a + w), st.floats(0.05, 0.5), st.floats(0.05, 0.5)),
    st.builds(AngularHarmonic, st.integers(-4, 4), st.floats(-2, 2)),
)
smooth_terms = st.recursive(
    leaf,
    lambda inner: st.one_of(
        st.builds(lambda xs: Sum(tuple(xs)), st.lists(inner, min_size=1, max_size=3)),
        st.builds(Scale, st.floats(-3, 3), inner),
        st.builds(lambda xs: Product(tuple(xs)), st.lists(inner, min_size=1, max_size=3)),
    ),
    max_leaves=8,
)


@settings(max_examples=150, deadline=None)
@given(smooth_terms)
def test_smooth_term_dict_round_trip(term):
    rebuilt = smooth_from_dict(term.to_dict())
    assert rebuilt == term
    assert rebuilt.to_dict() == term.to_dict()


@settings(max_examples=100, deadline=None)
@given(smooth_terms, st.floats(0.02, 0.95), st.floats(0, 2 * math.pi))
def test_sum_jet_is_sum_of_jets(term, r, theta):
    other = PowR(1.0)
    t = math.log(r)
    a, b, s = term.jet(t, theta), other.jet(t, theta), (term + other).jet(t, theta)
    for x, y, z in zip(a, b, s):
        assert float(z) == pytest.approx(float(x) + float(y), rel=1e-12, abs=1e-12)


def test_unknown_type_is_rejected():
    with pytest.raises(ValidationError):
        smooth_from_dict({"type": "spline"})
