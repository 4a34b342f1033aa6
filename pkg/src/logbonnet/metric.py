"""Conformal metrics ``e^{2u} |dz|^2`` with iterated-log singular factors.

The local conformal factor at a puncture is::

    u = alpha log r + sum_l beta_l log^(l) r + v(r, theta)

with ``v`` a bounded smooth catalog term.  For ``g = e^{2u}|dz|^2`` the
curvature is ``K = -e^{-2u} Lap u``, so ``K dA`` has Euclidean density
``-Lap u`` and, in log-polar coordinates, ``-(u_tt + u_thth) dt dtheta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import logcalc, quad
from .errors import DomainError, ValidationError
from .terms import Const, IterLog, LogR, SmoothTerm, smooth_from_dict

# deeper chains have no representable domain in double precision
MAX_PROFILE_DEPTH = logcalc.MAX_DEPTH


@dataclass(frozen=True)
class SingularProfile:
    alpha: float = 0.0
    betas: tuple = ()
    smooth: SmoothTerm = field(default_factory=Const)

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        if not isinstance(self.smooth, SmoothTerm):
            raise ValidationError("profile.smooth must be a catalog SmoothTerm")
        if self.depth > MAX_PROFILE_DEPTH:
            raise ValidationError(f"at most {MAX_PROFILE_DEPTH} iterated-log coefficients are supported")

    @property
    def depth(self):
        return len(self.betas)

    def singular_term(self):
        """``alpha log r + sum beta_l log^(l) r`` (no smooth part)."""
        term = LogR(self.alpha)
        for ell, beta in enumerate(self.betas, start=1):
            if beta != 0.0:
                term = term + IterLog(ell, beta)
        return term

    def term(self):
        return self.singular_term() + self.smooth

    def reduced_term(self):
        """The factor with the ``alpha log r`` part removed."""
        term = self.smooth
        for ell, beta in enumerate(self.betas, start=1):
            if beta != 0.0:
                term = term + IterLog(ell, beta)
        return term

    def to_dict(self):
        return {"alpha": self.alpha, "betas": list(self.betas), "smooth": self.smooth.to_dict()}

    @classmethod
    def from_dict(cls, d):
        try:
            smooth = smooth_from_dict(d.get("smooth", {"type": "const", "value": 0.0}))
            return cls(float(d.get("alpha", 0.0)), tuple(d.get("betas", ())), smooth)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"invalid profile {d!r}: {exc}") from None


def default_chart_radius(depth):
    """``min(0.5, R_k / 2)`` for a profile of depth ``k``."""
    if depth == 0:
        return 0.5
    return min(0.5, logcalc.guard_radius(depth) / 2.0)


@dataclass(frozen=True)
class ConformalPatchMetric:
    profile: SingularProfile
    chart_radius: float | None = None
    puncture_flag: bool = True

    def __post_init__(self):
        radius = self.chart_radius
        if radius is None:
            radius = default_chart_radius(self.profile.depth)
            object.__setattr__(self, "chart_radius", radius)
        if not radius > 0:
            raise ValidationError("chart radius must be positive")
        k = self.profile.depth
        if k >= 1 and not math.log(radius) < logcalc.log_guard(k):
            raise ValidationError(
                f"chart radius {radius} violates the depth-{k} guard R_{k} = {logcalc.guard_radius(k):.6g}")

    def term(self):
        return self.profile.term()

    def _t(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(~(r > 0)) or np.any(r >= self.chart_radius):
            raise DomainError(f"radius must lie in (0, {self.chart_radius})")
        return np.log(r)

    def jet(self, r, theta=0.0):
        return self.term().jet(self._t(r), theta)

    def jet_t(self, t, theta=0.0):
        t = np.asarray(t, dtype=float)
        if np.any(t >= math.log(self.chart_radius)):
            raise DomainError(f"log radius must be below log({self.chart_radius})")
        return self.term().jet(t, theta)


def _out(x, r, theta):
    if np.ndim(r) == 0 and np.ndim(theta) == 0:
        return float(np.asarray(x))
    return np.asarray(x)


def eval_u(m, r, theta=0.0):
    """Conformal factor ``u`` at ``(r, theta)``."""
    return _out(m.jet(r, theta).v, r, theta)


def laplacian_u(m, r, theta=0.0):
    """Flat Laplacian of ``u`` from the exact jets (``alpha log r`` contributes 0)."""
    t = m._t(r)
    return _out(m.term().jet(t, theta).laplacian(t), r, theta)


def euclidean_curvature_density(m, r, theta=0.0):
    """Density of ``K dA`` against ``dx dy``: ``-Lap u``."""
    return _out(-np.asarray(laplacian_u(m, r, theta)), r, theta)


def curvature_K(m, r, theta=0.0):
    """Pointwise Gaussian curvature ``-e^{-2u} Lap u``.

    Raises ``OverflowError`` when ``e^{-2u}`` leaves the double range; near
    strong singularities integrate :func:`euclidean_curvature_density` instead.
    """
    t = m._t(r)
    j = m.term().jet(t, theta)
    exponent = -2.0 * np.asarray(j.v)
    if np.any(exponent > 709.0):
        raise OverflowError("e^{-2u} overflows; use the curvature density form")
    return _out(-np.exp(exponent) * j.laplacian(t), r, theta)


def area_density(m, r, theta=0.0):
    return _out(np.exp(2.0 * np.asarray(eval_u(m, r, theta))), r, theta)


def order_of(m):
    """Order of the metric at the puncture: the ``log r`` coefficient."""
    if not m.puncture_flag:
        raise ValidationError("order_of is only defined on a puncture patch")
    return m.profile.alpha


def flux_result(term, log_eps, rel_tol=1e-13, abs_tol=1e-15):
    """``int_{r=eps} *du = int_0^{2pi} u_t(log eps, theta) dtheta`` for any term."""
    return quad.integrate_circle(lambda th: term.jet(np.full_like(th, log_eps), th).t, rel_tol, abs_tol)


def flux(m, eps):
    """Boundary integral of ``*du`` over ``|z| = eps``: ``eps * int u_r dtheta``."""
    if not 0 < eps < m.chart_radius:
        raise DomainError(f"eps must lie in (0, {m.chart_radius})")
    return flux_result(m.term(), math.log(eps)).value
