from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logbonnet.errors import DomainError
from logbonnet.ladders import (
    LadderResult, dirichlet_energy_ladder, flux_ladder, ladder_radii, tail_liminf,
)
from logbonnet.metric import ConformalPatchMetric, SingularProfile
from logbonnet.terms import AngularHarmonic, Bump, Const, LogOnePlus


def patch(alpha=0.0, betas=(), smooth=None, chart_radius=None):
    return ConformalPatchMetric(SingularProfile(alpha, tuple(betas), smooth or Const(0.0)), chart_radius)


def test_pure_alpha_ladder():
    lad = flux_ladder(patch(-0.5), 0.1, 8)
    assert np.allclose(lad.values, 2 * math.pi * -0.5, atol=1e-12)
    assert lad.liminf_estimate == pytest.approx(math.pi, rel=1e-12)


def test_log_ladder_decays_like_inverse_log():
    lad = flux_ladder(patch(0.0, [1.0]), 0.1, 10)
    expected = [2 * math.pi / math.log(e) for e in lad.radii]
    assert np.allclose(lad.values, expected, rtol=1e-12)
    mags = np.abs(lad.values)
    assert np.all(np.diff(mags) < 0)
    assert lad.decay_constant == pytest.approx(2 * math.pi, rel=1e-10)
    assert lad.decay_exponent == pytest.approx(1.0, rel=1e-8)


def test_bump_localized_ladder_vanishes_below_r0():
    lad = flux_ladder(patch(0.0, smooth=3.0 * Bump(0.2, 0.4)), 0.1, 6)
    assert np.all(np.array(lad.values) == 0.0)


def test_liminf_is_tail_minimum():
    assert tail_liminf([5.0, -4.0, 3.0, -2.5, 2.0, 2.2]) == 2.0


def test_ladder_validation():
    with pytest.raises(ValueError):
        LadderResult((0.1, 0.05), (1.0, 1.0), (0.0, 0.0), 1.0)
    with pytest.raises(ValueError):
        LadderResult((0.1, 0.2, 0.05), (1.0,) * 3, (0.0,) * 3, 1.0)
    with pytest.raises(ValueError):
        ladder_radii(0.1, 2)
    with pytest.raises(DomainError):
        flux_ladder(patch(0.3), 0.9, 4)


def test_csv_output(tmp_path):
    lad = flux_ladder(patch(0.0, [1.0]), 0.1, 4)
    path = tmp_path / "ladder.csv"
    lad.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["eps", "value", "error_estimate"]
    assert len(rows) == 5
    assert float(rows[1][1]) == lad.values[0]


def test_dirichlet_energy_constant_is_zero():
    lad = dirichlet_energy_ladder(patch(0.3, smooth=Const(1.7)), 0.1, 5)
    assert all(v == 0.0 for v in lad.values)


def test_dirichlet_energy_log_one_plus_converges():
    m = patch(0.0, smooth=LogOnePlus(1.0), chart_radius=0.5)
    lad = dirichlet_energy_ladder(m, 0.25, 12)
    values = np.array(lad.values)
    assert np.all(np.diff(values) >= 0)
    # |grad log(1+r^2)|^2 = 4r^2/(1+r^2)^2; over eps<r<R the integral is 4pi[log(1+r^2) + 1/(1+r^2)]
    prim = lambda r: 4 * math.pi * (math.log(1 + r * r) + 1 / (1 + r * r))  # noqa: E731
    for eps, v in zip(lad.radii, values):
        assert v == pytest.approx(prim(0.5) - prim(eps), rel=1e-10)


def test_dirichlet_energy_oscillating_term_is_bounded():
    smooth = AngularHarmonic(2, 0.7) * Bump(0.05, 0.3)
    lad = dirichlet_energy_ladder(patch(0.0, smooth=smooth, chart_radius=0.5), 0.2, 10)
    values = np.array(lad.values)
    assert np.all(np.diff(values) >= -1e-12)
    assert values[-1] == pytest.approx(values[-2], rel=1e-8)  # nothing left inside r0
    # fine-grid oracle
    r = np.linspace(1e-4, 0.5, 4001)[:, None]
    th = np.linspace(0, 2 * np.pi, 129)[None, :-1]
    _, fr, _, fth, _ = smooth.derivatives(r, th)
    integrand = (fr**2 + (fth / r) ** 2) * r
    radial = integrand.mean(axis=1) * 2 * np.pi
    oracle = float(np.sum(0.5 * (radial[1:] + radial[:-1]) * np.diff(r[:, 0])))
    assert values[-1] == pytest.approx(oracle, rel=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(0.05, 3), min_size=1, max_size=2), st.sampled_from([1.0, -1.0]))
def test_flux_liminf_decreases_toward_zero_for_alpha_zero(mags, sign):
    # one sign throughout: mixed signs can cancel on a short ladder
    betas = [sign * b for b in mags]
    short = flux_ladder(patch(0.0, betas), 0.01, 6)
    long = flux_ladder(patch(0.0, betas), 0.01, 60)
    assert long.liminf_estimate < short.liminf_estimate
    # 1/log eps decay: at eps ~ 1e-20 the flux is of order sum |beta| 2 pi / 46
    assert long.liminf_estimate < 2 * math.pi * sum(abs(b) for b in betas) / 30
