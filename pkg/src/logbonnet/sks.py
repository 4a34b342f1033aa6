"""Local special Kahler metrics with a meromorphic cubic form.

With ``g = e^{-U} |dz|^2`` and cubic form ``theta_0 dz^3``, ``theta_0 = c z^n``,
the structure equation is ``Lap U = 16 |theta_0|^2 e^{2U}`` and the curvature
form is ``K dA = 8 e^{2U} |theta_0|^2 dx dy``.  Two local models occur near a
pole or zero of order ``n``:

* model A: ``g = -4c r^(n+1) log r |dz|^2`` (exact solution, ``0 < r < 1``),
  order ``(n+1)/2``;
* model B: ``g = r^beta (C + o(1)) |dz|^2`` with ``beta < n+1``, order
  ``beta/2``.  The exact member used here comes from pulling back the
  Poincare metric by ``f = a z^(n+1)``, giving
  ``g = (2c / (a(n+1))) (1 - a^2 r^(2n+2)) |dz|^2`` (``beta = 0``).

In terms of the conformal factor ``u`` of ``g = e^{2u}|dz|^2`` one has
``U = -2u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import quad
from .errors import QuadratureError, ValidationError
from .metric import ConformalPatchMetric, SingularProfile
from .terms import Const, LogOnePlus


@dataclass(frozen=True)
class CubicMonomial:
    """``theta_0 = c z^n``; ``c = 0`` is accepted as the vanishing cubic form."""

    c: float
    n: int

    def __post_init__(self):
        if not self.c >= 0:
            raise ValidationError(f"cubic coefficient must be non-negative, got {self.c}")
        if int(self.n) != self.n:
            raise ValidationError("cubic order n must be an integer")

    def abs_squared(self, r):
        return self.c**2 * np.asarray(r, dtype=float) ** (2 * self.n)


@dataclass(frozen=True)
class SKModel:
    variant: str
    c: float
    n: int
    a: float | None = None
    beta: float | None = None
    C: float | None = None

    def __post_init__(self):
        variant = str(self.variant).upper()
        object.__setattr__(self, "variant", variant)
        if variant not in ("A", "B"):
            raise ValidationError(f"SK model variant must be 'A' or 'B', got {self.variant!r}")
        CubicMonomial(self.c, self.n)
        if self.c == 0:
            return
        if variant == "A":
            if self.n < -1:
                raise ValidationError("model A exact solutions need n >= -1")
            return
        if self.a is not None:
            if self.n < 0:
                raise ValidationError("the exact model B construction needs n >= 0")
            if not self.a > 0:
                raise ValidationError("model B disk parameter a must be positive")
        else:
            if self.beta is None or self.C is None:
                raise ValidationError("model B needs either a (exact) or beta and C (asymptotic)")
            if not self.beta < self.n + 1:
                raise ValidationError(f"model B needs beta < n + 1, got beta={self.beta}, n={self.n}")
            if not self.C > 0:
                raise ValidationError("model B needs C > 0")

    @property
    def theta0(self):
        return CubicMonomial(self.c, self.n)

    @property
    def flat(self):
        return self.c == 0

    @property
    def exact(self):
        return self.flat or self.variant == "A" or self.a is not None

    @property
    def domain_radius(self):
        """Outer radius of the model's domain."""
        if self.flat:
            return math.inf
        if self.variant == "A":
            return 1.0
        if self.a is not None:
            return self.a ** (-1.0 / (self.n + 1))
        return math.inf

    @property
    def beta_exponent(self):
        """``beta`` in ``r^beta (C + o(1))`` (model B only)."""
        if self.variant != "B" or self.flat:
            return None
        return 0.0 if self.a is not None else float(self.beta)

    @property
    def C_constant(self):
        if self.variant != "B" or self.flat:
            return None
        if self.a is not None:
            return 2.0 * self.c / (self.a * (self.n + 1))
        return float(self.C)

    def patch(self, chart_radius=None):
        if chart_radius is None:
            chart_radius = 0.95 * min(self.domain_radius, 1.0 if self.variant == "A" else math.inf)
            if math.isinf(chart_radius):
                chart_radius = 0.95
        return ConformalPatchMetric(sks_profile(self), chart_radius)

    def to_dict(self):
        d = {"variant": self.variant, "c": self.c, "n": int(self.n)}
        for key in ("a", "beta", "C"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                d.get("variant", "A"), float(d["c"]), int(d["n"]),
                a=None if d.get("a") is None else float(d["a"]),
                beta=None if d.get("beta") is None else float(d["beta"]),
                C=None if d.get("C") is None else float(d["C"]),
            )
        except KeyError as exc:
            raise ValidationError(f"SK model is missing field {exc}") from None


def sks_profile(model):
    """Singular profile of the model metric (``u = -U/2``)."""
    if model.flat:
        return SingularProfile(0.0, (), Const(0.0))
    if model.variant == "A":
        return SingularProfile((model.n + 1) / 2.0, (0.5,), Const(0.5 * math.log(4.0 * model.c)))
    C = model.C_constant
    if model.a is not None:
        smooth = Const(0.5 * math.log(C)) + 0.5 * LogOnePlus(model.n + 1.0, -model.a**2)
        return SingularProfile(0.0, (), smooth)
    return SingularProfile(model.beta / 2.0, (), Const(0.5 * math.log(C)))


def sks_order(model):
    """``(n+1)/2`` for model A, ``beta/2`` for model B, 0 for the flat limit."""
    if model.flat:
        return 0.0
    if model.variant == "A":
        return (model.n + 1) / 2.0
    return model.beta_exponent / 2.0


def _jet_t(patch, r, theta):
    t = patch._t(r)
    return t, patch.term().jet(t, theta)


def pde_residual(patch, theta0, r, theta=0.0):
    """``Lap U e^{-2U} - 16 |theta_0|^2`` for ``U = -2u`` of the patch."""
    t, j = _jet_t(patch, r, theta)
    lap_scaled = -2.0 * (j.tt + j.thth)  # r^2 Lap U
    lhs = lap_scaled * np.exp(4.0 * j.v - 2.0 * t)
    out = lhs - theta0.abs_squared(np.exp(t)) * 16.0
    return float(out) if np.ndim(out) == 0 else out


def _scaled_density(patch, theta0, t, theta):
    """``r^2 * 8 e^{2U} |theta_0|^2`` in log-polar coordinates.

    The ``alpha log r`` part of ``u`` is combined with ``r^(2n+2)`` analytically
    so the exponent does not cancel catastrophically at tiny radii.
    """
    if theta0.c == 0:
        return np.zeros(np.broadcast(t, theta).shape)
    profile = patch.profile
    j = profile.reduced_term().jet(t, theta)
    exponent = (2.0 * theta0.n + 2.0 - 4.0 * profile.alpha) * np.asarray(t) - 4.0 * j.v
    return 8.0 * theta0.c**2 * np.exp(exponent)


def sk_curvature_density(patch, theta0, r, theta=0.0):
    """Euclidean density of ``K dA``: ``8 e^{2U} |theta_0|^2``."""
    t = patch._t(r)
    out = _scaled_density(patch, theta0, t, theta) * np.exp(-2.0 * t)
    return float(out) if np.ndim(out) == 0 else out


def residual_grid(model, n_r=40, n_theta=16, r_min=1e-2):
    """Max ``|pde_residual|`` over a log-spaced radius by uniform angle grid."""
    patch = model.patch()
    r_max = 0.9 * min(model.domain_radius, patch.chart_radius / 0.95)
    r = np.geomspace(r_min, r_max, n_r)[:, None]
    theta = 2.0 * np.pi * np.arange(n_theta)[None, :] / n_theta
    res = pde_residual(patch, model.theta0, r, theta)
    return float(np.max(np.abs(res)))


def sks_l1_check(model, eps, rel_tol=1e-12, abs_tol=1e-15, full_output=False):
    """``int_{B_eps \\ 0} |K| dA`` for the model metric.

    For model A the exact value is ``-pi / log eps``.
    """
    patch = model.patch()
    if not 0 < eps < patch.chart_radius:
        raise ValidationError(f"eps must lie in (0, {patch.chart_radius})")
    theta0 = model.theta0

    def g(t):
        return np.abs(_scaled_density(patch, theta0, t, 0.0))

    result = quad.integrate_log_radial(g, -math.inf, math.log(eps), depth_hint=2,
                                       rel_tol=rel_tol, abs_tol=abs_tol).scaled(2.0 * math.pi)
    if not result.converged:
        raise QuadratureError("L1 curvature integral did not converge", result)
    return result if full_output else result.value


def l1_closed_form(model, eps):
    """Closed-form ``int |K| dA`` on ``B_eps`` where one exists.

    Model A gives ``-pi / log eps``; the exact model B gives
    ``2 pi (n+1) q / (1 - q)`` with ``q = a^2 eps^(2n+2)``.
    """
    if model.flat:
        return 0.0
    if model.variant == "A":
        return -math.pi / math.log(eps)
    if model.a is not None:
        q = model.a**2 * eps ** (2 * model.n + 2)
        return 2.0 * math.pi * (model.n + 1) * q / (1.0 - q)
    return None


def model_summary(model, eps_values=(0.1, 0.01, math.exp(-10.0))):
    """Residual, order and L1 checks for one model, as a plain dict."""
    patch = model.patch()
    eps_values = [e for e in eps_values if e < patch.chart_radius]
    summary = {
        "model": model.to_dict(),
        "order": sks_order(model),
        "profile": patch.profile.to_dict(),
        "exact_solution": model.exact,
        "residual_max": residual_grid(model) if model.exact else None,
        "l1": [],
    }
    for eps in eps_values:
        value = sks_l1_check(model, eps, full_output=True)
        closed = l1_closed_form(model, eps)
        summary["l1"].append({
            "eps": eps,
            "value": value.value,
            "error_estimate": value.error_estimate,
            "closed_form": closed,
            "difference": None if closed is None else value.value - closed,
        })
    return summary
