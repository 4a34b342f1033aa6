"""Shrinking-radius ladders for boundary flux and Dirichlet energy.

A ladder evaluates a quantity on ``eps_i = eps0 * 2^-i``.  The numeric stand-in
for a ``liminf`` as ``eps -> 0`` is the minimum of ``|value|`` over the tail
half of the ladder; no extrapolation is attempted because the flux corrections
decay only like ``1/log eps``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import quad
from .errors import DomainError
from .metric import flux_result


@dataclass(frozen=True)
class LadderResult:
    radii: tuple
    values: tuple
    errors: tuple
    liminf_estimate: float
    # fit of value - 2 pi alpha ~ C / log eps, and of |value - 2 pi alpha| ~ |log eps|^-p
    decay_constant: float | None = None
    decay_exponent: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.radii) < 3 or not (len(self.radii) == len(self.values) == len(self.errors)):
            raise ValueError("a ladder needs at least 3 radii and matching value/error lists")
        if any(b >= a for a, b in zip(self.radii, self.radii[1:])):
            raise ValueError("ladder radii must be strictly decreasing")

    def as_dict(self):
        d = {
            "radii": list(self.radii),
            "values": list(self.values),
            "errors": list(self.errors),
            "liminf_estimate": self.liminf_estimate,
            "decay_constant": self.decay_constant,
            "decay_exponent": self.decay_exponent,
        }
        d.update(self.meta)
        return d

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["eps", "value", "error_estimate"])
            for row in zip(self.radii, self.values, self.errors):
                writer.writerow([repr(float(x)) for x in row])


def tail_liminf(values):
    values = np.abs(np.asarray(values, dtype=float))
    return float(values[len(values) // 2:].min())


def ladder_radii(eps0, count):
    if count < 3:
        raise ValueError("ladder_count must be at least 3")
    radii = [eps0 * 2.0**-i for i in range(count)]
    if not radii[-1] > 0:
        raise DomainError("ladder radii underflow; reduce ladder_count")
    return radii


def _fit_decay(radii, values, alpha):
    x = np.array([1.0 / math.log(r) for r in radii])
    res = np.asarray(values) - 2.0 * math.pi * alpha
    constant = float(res @ x / (x @ x))
    floor = 1e-11 * (1.0 + abs(2.0 * math.pi * alpha))
    exponent = None
    if np.all(np.abs(res) > floor):
        loglog = np.log(np.abs(np.log(radii)))
        slope = np.polyfit(loglog, np.log(np.abs(res)), 1)[0]
        exponent = float(-slope)
    return constant, exponent


def term_flux_ladder(term, radii, alpha=0.0):
    """Flux of an arbitrary conformal-factor term along the given radii."""
    results = [flux_result(term, math.log(eps)) for eps in radii]
    values = tuple(r.value for r in results)
    constant, exponent = _fit_decay(radii, values, alpha)
    return LadderResult(
        radii=tuple(radii), values=values, errors=tuple(r.error_estimate for r in results),
        liminf_estimate=tail_liminf(values), decay_constant=constant, decay_exponent=exponent,
    )


def flux_ladder(m, eps0, count):
    """Flux of ``u`` on ``eps0 * 2^-i``, ``i < count``, with the ``C/log eps`` decay fit."""
    if not 0 < eps0 < m.chart_radius:
        raise DomainError(f"eps0 must lie in (0, {m.chart_radius})")
    return term_flux_ladder(m.term(), ladder_radii(eps0, count), m.profile.alpha)


def dirichlet_energy_ladder(m, eps0, count, rel_tol=1e-11, abs_tol=1e-14):
    """``int_{eps_i < r < R} |grad v|^2 dx dy`` for the smooth remainder ``v``.

    In log-polar coordinates the integrand is ``v_t^2 + v_theta^2``.  The
    ladder is accumulated ring by ring so the values are non-decreasing up to
    the quadrature error.
    """
    if not 0 < eps0 < m.chart_radius:
        raise DomainError(f"eps0 must lie in (0, {m.chart_radius})")
    smooth = m.profile.smooth
    radii = ladder_radii(eps0, count)

    def density(t, theta):
        j = smooth.jet(t, theta)
        return j.t**2 + j.th**2

    outer = math.log(m.chart_radius)
    values, errors = [], []
    total, total_err = 0.0, 0.0
    for eps in radii:
        inner = math.log(eps)
        ring = quad.integrate_log_polar(density, inner, outer, 1, rel_tol, abs_tol)
        total += ring.value
        total_err += ring.error_estimate
        values.append(total)
        errors.append(total_err)
        outer = inner
    return LadderResult(tuple(radii), tuple(values), tuple(errors), tail_liminf(values))
