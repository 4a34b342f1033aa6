"""Punctured sphere and torus assembly and the Gauss-Bonnet defect.

Sphere: two charts ``z`` and ``w = 1/z``, each covering a closed unit disk, so
the surfaces are split at the equator ``|z| = 1``.  The round base metric is
``u = log 2 - log(1 + r^2)`` in both charts.  A puncture at ``0`` (or ``inf``)
replaces the chart factor by ``bump * u_profile + (1 - bump) * u_base``; with
``blend="none"`` the profile governs the whole hemisphere, which must then
match the other chart across the equator (``u_w = u_z + 2 log|z|``).

Torus: the flat metric on ``C / (Z + tau Z)``; punctures sit in disjoint disk
charts blended to the flat factor, so the curvature lives in the disks.

Each disk is integrated in log-polar coordinates: the inner part
``r < r_split`` in ``s = log|log r|`` down to the puncture, the outer part in
``t = log r``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import quad
from .errors import QuadratureError, ValidationError
from .ladders import LadderResult, ladder_radii, term_flux_ladder
from .metric import SingularProfile, default_chart_radius
from .sks import SKModel, model_summary, sks_profile
from .terms import Blend, Bump, Const, LogOnePlus, Term
from . import logcalc

SPHERE_LOCATIONS = ("0", "inf")
# the s = log|log r| integrands do not resolve much below this
REFINEMENT_TOL_FLOOR = 1e-12
# |K| has angular kinks wherever K changes sign, which caps the circle rule near
# O(h^2); the L1 integral only needs to certify finiteness
L1_REL_TOL_FLOOR = 1e-6
L1_ABS_TOL_FLOOR = 1e-9


@dataclass(frozen=True)
class PunctureSpec:
    """A puncture with its local profile.

    ``blend`` is a :class:`Bump`, ``None`` for the default bump
    ``Bump(0.4 rho, 0.9 rho)`` (``rho`` the chart radius) or ``"none"`` for an
    unblended profile.  ``sks`` records the special Kahler model the profile
    came from, if any.
    """

    location: object
    profile: SingularProfile
    blend: object = None
    chart_radius: float | None = None
    sks: SKModel | None = None

    @classmethod
    def from_sks(cls, location, model, **kwargs):
        return cls(location, sks_profile(model), sks=model, **kwargs)

    def resolved_chart_radius(self):
        if self.chart_radius is not None:
            return float(self.chart_radius)
        if self.blend == "none":
            return 1.0
        return default_chart_radius(self.profile.depth)

    def resolved_blend(self):
        if self.blend == "none":
            return None
        if self.blend is None:
            rho = self.resolved_chart_radius()
            return Bump(0.4 * rho, 0.9 * rho)
        return self.blend


@dataclass(frozen=True)
class SurfaceSpec:
    kind: str = "sphere"
    tau: tuple = (0.0, 1.0)
    base_metric: str = "round"
    punctures: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "punctures", tuple(self.punctures))
        object.__setattr__(self, "tau", tuple(float(x) for x in self.tau))


@dataclass
class Chart:
    name: str
    term: Term
    outer_radius: float
    split_radius: float
    puncture_index: int | None = None
    center: complex = 0j


@dataclass
class Surface:
    spec: SurfaceSpec
    chi: int
    charts: list
    orders: list
    bulk: object = None  # torus fundamental domain integrator

    @property
    def punctures(self):
        return self.spec.punctures


def euler_characteristic(kind):
    if kind == "sphere":
        return 2
    if kind == "torus":
        return 0
    raise ValidationError(f"unknown surface kind {kind!r}; expected 'sphere' or 'torus'")


def round_factor():
    """``log 2 - log(1 + r^2)``: the unit round sphere in a stereographic chart."""
    return Const(math.log(2.0)) - LogOnePlus(1.0)


def football_profile(alpha):
    """Constant-curvature factor ``4(1+a)^2 r^(2a) / (1 + r^(2+2a))^2`` as a profile."""
    if not alpha > -1:
        raise ValidationError("football needs alpha > -1")
    smooth = Const(math.log(2.0 * (1.0 + alpha))) - LogOnePlus(1.0 + alpha)
    return SingularProfile(alpha, (), smooth)


def football_spec(alpha):
    return SurfaceSpec("sphere", base_metric="round", punctures=(
        PunctureSpec("0", football_profile(alpha), blend="none"),
        PunctureSpec("inf", football_profile(alpha), blend="none"),
    ))


def _base_term(spec):
    if spec.kind == "sphere":
        if spec.base_metric != "round":
            raise ValidationError(f"sphere base metric must be 'round', got {spec.base_metric!r}")
        return round_factor()
    if spec.base_metric != "flat":
        raise ValidationError(f"torus base metric must be 'flat', got {spec.base_metric!r}")
    return Const(0.0)


def _puncture_term(p, base, rho):
    profile = p.profile
    k = profile.depth
    if k >= 1 and not math.log(rho) < logcalc.log_guard(k):
        raise ValidationError(
            f"puncture chart radius {rho} violates the depth-{k} guard R_{k} = {logcalc.guard_radius(k):.6g}")
    blend = p.resolved_blend()
    if blend is None:
        return profile.term(), None
    if not blend.r1 <= rho:
        raise ValidationError(f"blend radius r1={blend.r1} exceeds the puncture chart radius {rho}")
    return Blend(profile.term(), base, blend), blend


def build_surface(spec):
    """Validate ``spec`` and assemble the chart cover."""
    chi = euler_characteristic(spec.kind)
    base = _base_term(spec)
    orders = [p.profile.alpha for p in spec.punctures]
    if spec.kind == "sphere":
        return Surface(spec, chi, _sphere_charts(spec, base), orders)
    charts, bulk = _torus_charts(spec, base)
    return Surface(spec, chi, charts, orders, bulk)


def _sphere_charts(spec, base):
    by_location = {}
    for index, p in enumerate(spec.punctures):
        loc = str(p.location)
        if loc not in SPHERE_LOCATIONS:
            raise ValidationError(f"sphere punctures must sit at '0' or 'inf', got {p.location!r}")
        if loc in by_location:
            raise ValidationError(f"two punctures at {loc!r}: puncture charts overlap")
        by_location[loc] = index
    radii = {}
    charts = []
    for loc, name in (("0", "z"), ("inf", "w")):
        index = by_location.get(loc)
        if index is None:
            charts.append(Chart(name, base, 1.0, 0.5))
            continue
        p = spec.punctures[index]
        rho = p.resolved_chart_radius()
        if not 0 < rho <= 1.0:
            raise ValidationError(f"sphere puncture chart radius must lie in (0, 1], got {rho}")
        radii[loc] = rho
        term, blend = _puncture_term(p, base, rho)
        if blend is None and p.profile.depth > 0:
            raise ValidationError("an unblended puncture profile must have no iterated-log terms")
        split = blend.r0 if blend is not None else 0.5
        charts.append(Chart(name, term, 1.0, split, index))
    if len(radii) == 2 and radii["0"] * radii["inf"] > 1.0:
        raise ValidationError("puncture charts at 0 and inf overlap")
    _check_equator(charts[0].term, charts[1].term)
    return charts


def _check_equator(u_z, u_w, samples=32, tol=1e-9):
    """``u_w(w) = u_z(z) + 2 log|z|`` and matching normal derivatives on ``|z| = 1``."""
    theta = 2.0 * np.pi * np.arange(samples) / samples
    jz = u_z.jet(np.zeros(samples), theta)
    jw = u_w.jet(np.zeros(samples), -theta)
    value_gap = np.max(np.abs(jw.v - jz.v))
    slope_gap = np.max(np.abs(jw.t + jz.t + 2.0))
    scale = 1.0 + float(np.max(np.abs(jz.v)))
    if value_gap > tol * scale or slope_gap > tol * scale:
        raise ValidationError(
            f"chart factors disagree across |z| = 1 (value gap {value_gap:.3g}, slope gap {slope_gap:.3g}); "
            "unblended profiles must define one global metric")


def _lattice(spec):
    tau = complex(*spec.tau)
    if not tau.imag > 0:
        raise ValidationError("torus modulus needs Im tau > 0")
    return tau


def _torus_distance(z1, z2, tau):
    d = z1 - z2
    # reduce into the fundamental parallelogram, then check neighbouring translates
    b = math.floor(d.imag / tau.imag)
    d -= b * tau
    d -= math.floor(d.real)
    return min(abs(d + m + n * tau) for m in (-2, -1, 0, 1, 2) for n in (-2, -1, 0, 1, 2))


def _torus_charts(spec, base):
    tau = _lattice(spec)
    shortest = min(abs(m + n * tau) for m in (-2, -1, 0, 1, 2) for n in (-2, -1, 0, 1, 2) if (m, n) != (0, 0))
    charts, centers = [], []
    for index, p in enumerate(spec.punctures):
        try:
            x, y = p.location
            center = complex(float(x), float(y))
        except (TypeError, ValueError):
            raise ValidationError(f"torus puncture location must be [x, y], got {p.location!r}") from None
        if p.resolved_blend() is None:
            raise ValidationError("torus punctures must be blended into the flat metric")
        rho = p.resolved_chart_radius()
        if not 0 < rho <= 0.5 * shortest:
            raise ValidationError(f"torus puncture chart radius {rho} exceeds half the shortest period")
        for other_index, (c, r) in enumerate(centers):
            if _torus_distance(center, c, tau) < 1e-12:
                raise ValidationError(f"punctures {other_index} and {index} are lattice-equivalent")
            if _torus_distance(center, c, tau) < rho + r:
                raise ValidationError(f"puncture charts {other_index} and {index} overlap")
        centers.append((center, rho))
        term, blend = _puncture_term(p, base, rho)
        charts.append(Chart(f"puncture[{index}]", term, rho, blend.r0, index, center))
    return charts, _TorusBulk(tau, base, centers)


class _TorusBulk:
    """Periodic trapezoid rule over the fundamental parallelogram minus the disks."""

    def __init__(self, tau, base, disks):
        self.tau, self.base, self.disks = tau, base, disks

    def integrate(self, absolute, rel_tol, abs_tol, max_nodes=2**10):
        area = self.tau.imag
        prev, n, evaluations = None, 16, 0
        while True:
            a = (np.arange(n) + 0.5) / n
            z = a[:, None] + a[None, :] * self.tau
            density = self._density(z)
            if absolute:
                density = np.abs(density)
            evaluations += density.size
            value = area * float(math.fsum(density.ravel())) / n**2
            if prev is not None:
                err = abs(value - prev)
                if err <= max(abs_tol, rel_tol * abs(value)) or n >= max_nodes:
                    ok = err <= max(abs_tol, rel_tol * abs(value))
                    return quad.QuadResult(value, err, evaluations, ok)
            prev, n = value, 2 * n

    def _density(self, z):
        r = np.abs(z)
        with np.errstate(divide="ignore"):
            t = np.log(np.where(r > 0, r, 1e-300))
        jet = self.base.jet(t, np.angle(z))
        density = -(jet.tt + jet.thth) * np.exp(-2.0 * t)
        inside = np.zeros(z.shape, dtype=bool)
        for center, rho in self.disks:
            for m in (-1, 0, 1):
                for k in (-1, 0, 1):
                    inside |= np.abs(z - center - m - k * self.tau) < rho
        return np.where(inside, 0.0, density)


# ---------------------------------------------------------------------------
# integration


@dataclass
class ChartIntegral:
    name: str
    disk: quad.QuadResult
    annulus: quad.QuadResult
    split_radius: float
    cutoff: float

    @property
    def total(self):
        return quad.combine([self.disk, self.annulus])

    def as_dict(self):
        return {
            "chart": self.name,
            "split_radius": self.split_radius,
            "cutoff": self.cutoff,
            "disk": self.disk.as_dict(),
            "annulus": self.annulus.as_dict(),
        }


def _density_fn(term, absolute):
    def density(t, theta):
        j = term.jet(t, theta)
        d = -(j.tt + j.thth)
        return np.abs(d) if absolute else d
    return density


def integrate_chart(chart, absolute=False, rel_tol=quad.DEFAULT_REL_TOL, abs_tol=quad.DEFAULT_ABS_TOL,
                    max_evaluations=quad.DEFAULT_MAX_EVALUATIONS, cutoff=0.0, split_factor=1.0):
    """Integral of ``-Lap u`` (or its absolute value) over the chart disk.

    ``cutoff > 0`` removes the disk ``|z| < cutoff`` around a puncture.
    """
    split = chart.split_radius * split_factor
    if not 0 < split < chart.outer_radius:
        raise ValidationError(f"split radius {split} must lie inside the chart (0, {chart.outer_radius})")
    if chart.puncture_index is None:
        cutoff = 0.0
    if cutoff >= split:
        raise ValidationError(f"cutoff {cutoff} must be below the split radius {split}")
    density = _density_fn(chart.term, absolute)
    t_lo = -math.inf if cutoff == 0 else math.log(cutoff)
    disk = quad.integrate_log_polar(density, t_lo, math.log(split), 2, rel_tol, abs_tol, max_evaluations)
    annulus = quad.integrate_log_polar(density, math.log(split), math.log(chart.outer_radius), 1,
                                       rel_tol, abs_tol, max_evaluations)
    return ChartIntegral(chart.name, disk, annulus, split, cutoff)


def _surface_integral(surface, absolute, rel_tol, abs_tol, max_evaluations, cutoff=0.0, split_factor=1.0):
    pieces = [integrate_chart(c, absolute, rel_tol, abs_tol, max_evaluations, cutoff, split_factor)
              for c in surface.charts]
    results = [p.total for p in pieces]
    if surface.bulk is not None:
        results.append(surface.bulk.integrate(absolute, rel_tol, abs_tol))
    return quad.combine(results), pieces


def total_curvature(surface, rel_tol=quad.DEFAULT_REL_TOL, abs_tol=quad.DEFAULT_ABS_TOL,
                    max_evaluations=quad.DEFAULT_MAX_EVALUATIONS, split_factor=1.0, full_output=False):
    """``(1/2pi) int_{X \\ D} K dA``."""
    result, pieces = _surface_integral(surface, False, rel_tol, abs_tol, max_evaluations,
                                       split_factor=split_factor)
    result = result.scaled(1.0 / (2.0 * math.pi))
    if not result.converged:
        raise QuadratureError("total curvature integral did not converge", result)
    return (result, pieces) if full_output else result.value


def l1_curvature(surface, rel_tol=quad.DEFAULT_REL_TOL, abs_tol=quad.DEFAULT_ABS_TOL,
                 max_evaluations=quad.DEFAULT_MAX_EVALUATIONS, cutoff=0.0, full_output=False):
    """``(1/2pi) int_{X \\ D} |K| dA``; convergence is the numeric evidence for ``K in L^1``."""
    result, pieces = _surface_integral(surface, True, max(rel_tol, L1_REL_TOL_FLOOR),
                                       max(abs_tol, L1_ABS_TOL_FLOOR), max_evaluations, cutoff=cutoff)
    result = result.scaled(1.0 / (2.0 * math.pi))
    if not result.converged:
        raise QuadratureError("L1 curvature integral did not converge", result)
    return (result, pieces) if full_output else result.value


@dataclass
class GaussBonnetReport:
    chi: int
    orders: list
    total_curvature_over_2pi: float
    l1_curvature: float
    defect: float
    flux_ladders: list
    quadrature_meta: dict
    notes: list = field(default_factory=list)
    sks: list = field(default_factory=list)
    refinement: list = field(default_factory=list)

    @property
    def converged(self):
        return bool(self.quadrature_meta.get("total_converged") and self.quadrature_meta.get("l1_converged"))

    @property
    def error_budget(self):
        return self.quadrature_meta["total_error_estimate"]

    def passed(self, factor=10.0):
        return self.converged and abs(self.defect) <= factor * self.error_budget

    def as_dict(self):
        d = {
            "chi": self.chi,
            "orders": list(self.orders),
            "total_curvature_over_2pi": self.total_curvature_over_2pi,
            "l1_curvature": self.l1_curvature,
            "defect": self.defect,
            "flux_ladders": [lad.as_dict() for lad in self.flux_ladders],
            "quadrature_meta": self.quadrature_meta,
            "notes": list(self.notes),
        }
        if self.sks:
            d["sks"] = self.sks
        if self.refinement:
            d["refinement"] = self.refinement
        return d


def puncture_flux_ladders(surface, eps0=0.05, count=12):
    ladders = []
    for chart in surface.charts:
        if chart.puncture_index is None:
            continue
        p = surface.punctures[chart.puncture_index]
        start = min(eps0, 0.5 * chart.outer_radius)
        lad = term_flux_ladder(chart.term, ladder_radii(start, count), p.profile.alpha)
        ladders.append(LadderResult(
            lad.radii, lad.values, lad.errors, lad.liminf_estimate, lad.decay_constant, lad.decay_exponent,
            meta={"puncture": chart.puncture_index, "location": _location_label(p.location),
                  "order": p.profile.alpha, "limit": 2.0 * math.pi * p.profile.alpha},
        ))
    return ladders


def _location_label(location):
    if isinstance(location, str):
        return location
    return list(location)


def gauss_bonnet_defect(surface, rel_tol=quad.DEFAULT_REL_TOL, abs_tol=quad.DEFAULT_ABS_TOL,
                        max_evaluations=quad.DEFAULT_MAX_EVALUATIONS, ladder_eps0=0.05, ladder_count=12,
                        split_factor=1.0, refinement_steps=0):
    """Evaluate both sides of the Gauss-Bonnet identity and their discrepancy.

    ``defect = (1/2pi) int K dA - chi - sum(orders)``.  Non-convergence of the
    total raises; non-convergence of the L1 integral is recorded in the report.
    """
    total, pieces = _surface_integral(surface, False, rel_tol, abs_tol, max_evaluations,
                                      split_factor=split_factor)
    total = total.scaled(1.0 / (2.0 * math.pi))
    if not total.converged:
        raise QuadratureError("total curvature integral did not converge", total)
    l1, _ = _surface_integral(surface, True, max(rel_tol, L1_REL_TOL_FLOOR), max(abs_tol, L1_ABS_TOL_FLOOR),
                              max_evaluations, split_factor=split_factor)
    l1 = l1.scaled(1.0 / (2.0 * math.pi))
    orders = list(surface.orders)
    defect = total.value - surface.chi - math.fsum(orders)
    meta = {
        "rel_tol": rel_tol,
        "abs_tol": abs_tol,
        "max_evaluations": max_evaluations,
        "split_factor": split_factor,
        "total_error_estimate": total.error_estimate,
        "total_evaluations": total.evaluations,
        "total_converged": total.converged,
        "l1_error_estimate": l1.error_estimate,
        "l1_evaluations": l1.evaluations,
        "l1_converged": l1.converged,
        "charts": [p.as_dict() for p in pieces],
    }
    notes = [
        "curvature integrated as -(u_tt + u_thth) dt dtheta in log-polar chart coordinates (t = log r)",
        "puncture disks integrated in s = log|log r| down to the puncture",
    ]
    if surface.bulk is not None:
        notes.append("torus fundamental domain outside puncture disks integrated with a periodic trapezoid rule")
    report = GaussBonnetReport(
        chi=surface.chi,
        orders=orders,
        total_curvature_over_2pi=total.value,
        l1_curvature=l1.value,
        defect=defect,
        flux_ladders=puncture_flux_ladders(surface, ladder_eps0, ladder_count) if surface.punctures else [],
        quadrature_meta=meta,
        notes=notes,
    )
    for index, p in enumerate(surface.punctures):
        if p.sks is not None:
            summary = model_summary(p.sks)
            summary["puncture"] = index
            report.sks.append(summary)
    if refinement_steps:
        report.refinement = defect_refinement(surface, refinement_steps, rel_tol=rel_tol, abs_tol=abs_tol,
                                              max_evaluations=max_evaluations)
    return report


def defect_refinement(surface, steps=3, eps_start=0.1, rel_tol=1e-6, abs_tol=1e-9,
                      max_evaluations=quad.DEFAULT_MAX_EVALUATIONS):
    """Defect of the integral over ``X`` minus the disks ``|z_j| < eps_i``.

    Step ``i`` uses ``eps_i = eps_start^(2^i)`` (each step doubles ``|log eps|``),
    with ``eps_start`` lowered to half the smallest puncture split radius if needed,
    and tightens the tolerances tenfold; a final entry removes the cutoff.
    The truncated defect equals ``sum_j (flux_j(eps_i) / 2pi - alpha_j)`` up to
    quadrature error, i.e. the ``1/log eps`` terms of the flux expansion.
    """
    splits = [c.split_radius for c in surface.charts if c.puncture_index is not None]
    if splits:  # the first cutoff must sit inside every puncture disk
        eps_start = min(eps_start, 0.5 * min(splits))
    rows = []
    chi_plus = surface.chi + math.fsum(surface.orders)
    for i in range(steps + 1):
        final = i == steps
        cutoff = 0.0 if final else eps_start ** (2**i)
        tol = max(rel_tol * 10.0**-i, REFINEMENT_TOL_FLOOR)
        result, _ = _surface_integral(surface, False, tol, max(abs_tol * 10.0**-i, 1e-3 * tol), max_evaluations,
                                      cutoff=cutoff)
        value = result.value / (2.0 * math.pi)
        rows.append({
            "cutoff": cutoff,
            "rel_tol": tol,
            "total_curvature_over_2pi": value,
            "defect": value - chi_plus,
            "error_estimate": result.error_estimate / (2.0 * math.pi),
            "converged": result.converged,
        })
    return rows
