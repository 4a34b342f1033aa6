from __future__ import annotations

import math

import numpy as np
import pytest

from logbonnet.errors import ValidationError
from logbonnet.metric import euclidean_curvature_density, eval_u, order_of
from logbonnet.sks import (
    CubicMonomial, SKModel, l1_closed_form, model_summary, pde_residual, residual_grid, sk_curvature_density,
    sks_l1_check, sks_order, sks_profile,
)


@pytest.mark.parametrize("n", [-1, 0, 2])
def test_model_a_residual_vanishes(n):
    assert residual_grid(SKModel("A", 0.25, n)) < 1e-9


def test_model_b_exact_residual_vanishes():
    assert residual_grid(SKModel("B", 0.25, 0, a=0.5)) < 1e-9
    assert residual_grid(SKModel("B", 0.7, 2, a=0.5)) < 1e-9


def test_flat_limit():
    model = SKModel("A", 0.0, 0)
    assert model.flat and residual_grid(model) == 0.0
    assert sks_order(model) == 0.0
    assert sk_curvature_density(model.patch(), model.theta0, 0.3) == 0.0


def test_orders():
    assert sks_profile(SKModel("A", 0.25, 0)).alpha == 0.5
    assert sks_profile(SKModel("A", 0.25, 0)).betas == (0.5,)
    assert sks_profile(SKModel("A", 0.25, -1)).alpha == 0.0
    assert sks_profile(SKModel("B", 0.25, 1, beta=1.2, C=1.0)).alpha == 0.6
    assert sks_profile(SKModel("B", 0.25, 0, a=0.5)).alpha == 0.0
    for n in (-1, 0, 1, 2, 3):
        assert order_of(SKModel("A", 0.25, n).patch()) == (n + 1) / 2


def test_model_a_metric_density():
    # u = (1/2) log(-4c r^(n+1) log r)
    model = SKModel("A", 0.3, 1)
    r = 0.2
    assert eval_u(model.patch(), r) == pytest.approx(0.5 * math.log(-4 * 0.3 * r**2 * math.log(r)), rel=1e-14)


def test_model_b_metric_density():
    # pullback of 4|dw|^2/(1-|w|^2)^2 by w = a z^(n+1), rescaled by c: 2c|f'|^2 / (a(n+1)) ... in closed form
    a, n, c, r = 0.5, 0, 0.25, 0.5
    model = SKModel("B", c, n, a=a)
    expected = 0.5 * math.log(2 * c / (a * (n + 1)) * (1 - a**2 * r ** (2 * n + 2)))
    assert eval_u(model.patch(), r) == pytest.approx(expected, rel=1e-14)


def test_model_a_density_closed_form():
    model = SKModel("A", 0.25, 2)
    r = np.geomspace(1e-6, 0.9, 30)
    dens = sk_curvature_density(model.patch(), model.theta0, r)
    assert np.allclose(dens, 1 / (2 * r**2 * np.log(r) ** 2), rtol=1e-12)


@pytest.mark.parametrize("model", [SKModel("A", 0.25, 0), SKModel("A", 1.0, 2), SKModel("B", 0.25, 0, a=0.5)])
def test_density_agrees_with_metric_curvature(model):
    patch = model.patch()
    r = np.geomspace(1e-2, 0.9 * patch.chart_radius, 40)[:, None]
    theta = np.linspace(0, 2 * np.pi, 16, endpoint=False)[None, :]
    a = sk_curvature_density(patch, model.theta0, r, theta)
    b = euclidean_curvature_density(patch, r, theta)
    assert np.max(np.abs(a - b) / np.abs(a)) < 1e-9


def test_model_b_density_at_half_is_finite_positive():
    model = SKModel("B", 0.25, 0, a=0.5)
    v = sk_curvature_density(model.patch(), model.theta0, 0.5)
    assert 0 < v < math.inf


@pytest.mark.parametrize("eps", [0.1, 0.01, math.exp(-10.0)])
def test_model_a_l1_closed_form(eps):
    assert abs(sks_l1_check(SKModel("A", 0.25, 0), eps) + math.pi / math.log(eps)) < 1e-8


def test_model_b_l1_bounded_and_exact():
    model = SKModel("B", 0.25, 0, a=0.5)
    eps = 0.25
    value = sks_l1_check(model, eps)
    patch = model.patch()
    bound = max(sk_curvature_density(patch, model.theta0, r) for r in np.linspace(1e-6, eps, 200)) * math.pi * eps**2
    assert 0 < value <= bound * (1 + 1e-12)
    assert value == pytest.approx(l1_closed_form(model, eps), rel=1e-10)


def test_pde_residual_flags_wrong_normalization():
    good = SKModel("A", 0.25, 0)
    wrong = SKModel("A", 0.5, 0)
    assert abs(pde_residual(wrong.patch(), good.theta0, 0.3)) > 1e-3


def test_validation():
    with pytest.raises(ValidationError):
        SKModel("C", 0.25, 0)
    with pytest.raises(ValidationError):
        SKModel("B", 0.25, 0, beta=1.5, C=1.0)
    with pytest.raises(ValidationError):
        SKModel("B", 0.25, 0, beta=0.5, C=-1.0)
    with pytest.raises(ValidationError):
        SKModel("B", 0.25, 0)
    with pytest.raises(ValidationError):
        CubicMonomial(-1.0, 0)
    with pytest.raises(ValidationError):
        sks_l1_check(SKModel("A", 0.25, 0), 0.99)


def test_dict_round_trip_and_summary():
    model = SKModel("B", 0.25, 1, beta=1.2, C=2.0)
    assert SKModel.from_dict(model.to_dict()) == model
    summary = model_summary(SKModel("A", 0.25, 0))
    assert summary["order"] == 0.5 and summary["residual_max"] < 1e-9
