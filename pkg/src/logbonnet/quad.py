"""Error-controlled quadrature for singular radial and chart integrals.

Radial integrals are done in ``t = log r`` (so ``r dr = r^2 dt``) and, for
iterated-log blow-up at the origin, additionally in ``s = log|t|``.  The
one-dimensional engine is a globally adaptive Gauss-Kronrod 7/15 rule with
panel bisection; circle integrals use the periodic trapezoid rule with node
doubling.  Panel contributions are summed with ``math.fsum`` so the result does
not depend on panel order.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import QuadratureError

# Gauss-Kronrod 7/15 abscissae (positive half) and weights.
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

# Full 15-point node set on [-1, 1] and matching weight vectors.
NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
# Gauss nodes are the odd-indexed Kronrod abscissae (x_1, x_3, x_5, 0).
for _i, _w in zip((1, 3, 5), _WG[:3]):
    GAUSS_WEIGHTS[_i] = _w
    GAUSS_WEIGHTS[14 - _i] = _w
GAUSS_WEIGHTS[7] = _WG[3]

_EPS = np.finfo(float).eps
DEFAULT_REL_TOL = 1e-10
DEFAULT_ABS_TOL = 1e-13
DEFAULT_MAX_EVALUATIONS = 2**20
CIRCLE_MIN_NODES = 16
CIRCLE_MAX_NODES = 2**14


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __post_init__(self):
        # plain Python scalars so reports serialize without numpy types
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "error_estimate", float(self.error_estimate))
        object.__setattr__(self, "evaluations", int(self.evaluations))
        object.__setattr__(self, "converged", bool(self.converged))

    def scaled(self, factor):
        return replace(self, value=self.value * factor, error_estimate=self.error_estimate * abs(factor))

    def as_dict(self):
        return {
            "value": self.value,
            "error_estimate": self.error_estimate,
            "evaluations": self.evaluations,
            "converged": self.converged,
        }


def combine(results):
    """Sum independent results (values via fsum, error estimates added)."""
    results = list(results)
    return QuadResult(
        value=math.fsum(r.value for r in results),
        error_estimate=math.fsum(r.error_estimate for r in results),
        evaluations=sum(r.evaluations for r in results),
        converged=all(r.converged for r in results),
    )


def _target(value, rel_tol, abs_tol):
    return max(abs_tol, rel_tol * abs(value))


# ---------------------------------------------------------------------------
# variable maps for infinite limits


def _interval_map(a, b):
    """Return ``(x_of_u, jac, ua, ub)`` mapping a finite ``u`` interval onto ``(a, b)``."""
    if a >= b:
        raise ValueError(f"empty interval ({a}, {b})")
    a_inf, b_inf = math.isinf(a), math.isinf(b)
    if not a_inf and not b_inf:
        return (lambda u: u), (lambda u: np.ones_like(u)), a, b
    if not a_inf:
        return (lambda u: a + u / (1.0 - u)), (lambda u: 1.0 / (1.0 - u) ** 2), 0.0, 1.0
    if not b_inf:
        return (lambda u: b - (1.0 - u) / u), (lambda u: 1.0 / u**2), 0.0, 1.0
    return (lambda u: u / (1.0 - u * u)), (lambda u: (1.0 + u * u) / (1.0 - u * u) ** 2), -1.0, 1.0


# ---------------------------------------------------------------------------
# adaptive engine


class _Panel:
    __slots__ = ("a", "b", "value", "error", "resabs")

    def __init__(self, a, b, value, error, resabs):
        self.a, self.b, self.value, self.error, self.resabs = a, b, value, error, resabs

    def __lt__(self, other):
        return self.error > other.error


def _adaptive(panel_rule, a, b, rel_tol, abs_tol, max_evaluations, initial_panels=1):
    """Global adaptive bisection driven by ``panel_rule(a, b) -> (K, err, resabs, nevals)``."""
    edges = np.linspace(a, b, initial_panels + 1)
    heap, frozen = [], []
    evaluations = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        k, err, resabs, n = panel_rule(lo, hi)
        evaluations += n
        heapq.heappush(heap, _Panel(lo, hi, k, err, resabs))

    def totals():
        panels = heap + frozen
        return math.fsum(p.value for p in panels), math.fsum(p.error for p in panels)

    value, error = totals()
    # the reported state is the one with the smallest error estimate seen; a
    # tighter tolerance only extends the same trajectory, so it never reports more
    best = (error, value)
    iteration = 0
    while heap and error > _target(value, rel_tol, abs_tol) and evaluations < max_evaluations:
        worst = heapq.heappop(heap)
        mid = 0.5 * (worst.a + worst.b)
        half = 0.5 * (worst.b - worst.a)
        if half <= 8 * _EPS * max(abs(worst.a), abs(worst.b), 1e-300):
            frozen.append(worst)
            continue
        left = panel_rule(worst.a, mid)
        right = panel_rule(mid, worst.b)
        evaluations += left[3] + right[3]
        heapq.heappush(heap, _Panel(worst.a, mid, left[0], left[1], left[2]))
        heapq.heappush(heap, _Panel(mid, worst.b, right[0], right[1], right[2]))
        value += left[0] + right[0] - worst.value
        error += left[1] + right[1] - worst.error
        iteration += 1
        if iteration % 64 == 0:
            value, error = totals()
        if error < best[0]:
            best = (error, value)
    error, value = best
    return QuadResult(value, error, evaluations, error <= _target(value, rel_tol, abs_tol))


def _gk_panel(values, half):
    k = half * float(KRONROD_WEIGHTS @ values)
    g = half * float(GAUSS_WEIGHTS @ values)
    resabs = half * float(KRONROD_WEIGHTS @ np.abs(values))
    err = max(abs(k - g), 50.0 * _EPS * resabs)
    return k, err, resabs


def gauss_kronrod(f, a, b, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                  max_evaluations=DEFAULT_MAX_EVALUATIONS, initial_panels=1):
    """Adaptive G7/K15 integration of a vectorized ``f`` over ``(a, b)``.

    Either limit may be infinite.  Abscissae that the infinite-range map sends
    to +-inf contribute nothing; any other non-finite value raises.
    """
    x_of_u, jac, ua, ub = _interval_map(a, b)

    def rule(lo, hi):
        half = 0.5 * (hi - lo)
        u = 0.5 * (lo + hi) + half * NODES
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            x = x_of_u(u)
            j = jac(u)
        keep = np.isfinite(x) & np.isfinite(j)
        vals = np.zeros(15)
        if np.any(keep):
            fx = np.asarray(f(x[keep]), dtype=float)
            if np.any(~np.isfinite(fx)):
                bad = x[keep][~np.isfinite(fx)]
                raise QuadratureError(f"integrand is not finite at x={bad[0]!r}")
            vals[keep] = fx * j[keep]
        k, err, resabs = _gk_panel(vals, half)
        return k, err, resabs, int(np.count_nonzero(keep))

    return _adaptive(rule, ua, ub, rel_tol, abs_tol, max_evaluations, initial_panels)


# ---------------------------------------------------------------------------
# circle rule


def _circle_rows(h, rows, rel_tol, abs_tol, max_nodes=CIRCLE_MAX_NODES):
    """Trapezoid rule on ``[0, 2pi)`` for ``rows`` integrands at once.

    ``h(theta)`` receives a 1-D array of angles and returns a ``(rows, n)``
    array.  Returns ``(values, errors, evaluations, converged)``.
    """
    n = CIRCLE_MIN_NODES
    theta = 2.0 * np.pi * np.arange(n) / n
    vals = np.broadcast_to(np.asarray(h(theta), dtype=float), (rows, n))
    _check_finite(vals)
    total = vals.sum(axis=1)
    abs_total = np.abs(vals).sum(axis=1)
    evaluations = rows * n
    estimate = 2.0 * np.pi * total / n
    errors = np.full(rows, np.inf)
    while True:
        theta = 2.0 * np.pi * (np.arange(n) + 0.5) / n
        new = np.broadcast_to(np.asarray(h(theta), dtype=float), (rows, n))
        _check_finite(new)
        evaluations += rows * n
        total = total + new.sum(axis=1)
        abs_total = abs_total + np.abs(new).sum(axis=1)
        n *= 2
        refined = 2.0 * np.pi * total / n
        scale = 2.0 * np.pi * abs_total / n
        errors = np.maximum(np.abs(refined - estimate), 50.0 * _EPS * scale)
        estimate = refined
        # rows feed one weighted panel sum, so each is judged against the largest
        ok = errors <= max(abs_tol, rel_tol * float(scale.max()))
        if np.all(ok) or n >= max_nodes:
            return estimate, errors, evaluations, bool(np.all(ok))


def _check_finite(vals):
    if np.any(~np.isfinite(vals)):
        raise QuadratureError("angular integrand is not finite")


def integrate_circle(h, rel_tol=1e-12, abs_tol=1e-14, max_nodes=CIRCLE_MAX_NODES):
    """``int_0^{2pi} h(theta) dtheta`` for smooth periodic ``h``.

    Starts at 16 nodes and doubles; the error estimate is the change between
    the last two levels.
    """
    def rows(theta):
        vals = np.asarray(h(theta), dtype=float)
        return np.broadcast_to(vals, theta.shape)[None, :]

    values, errors, n, ok = _circle_rows(rows, 1, rel_tol, abs_tol, max_nodes)
    return QuadResult(float(values[0]), float(errors[0]), n, ok)


# ---------------------------------------------------------------------------
# radial and chart integrals


def _log_variable_map(t_a, t_b, depth_hint):
    """Return ``(lo, hi, to_t, jac)`` for integrating over ``t`` in ``(t_a, t_b)``."""
    if depth_hint <= 1:
        return t_a, t_b, (lambda x: x), (lambda x: np.ones_like(x))
    if not t_b < 0:
        raise ValueError("the s = log|t| substitution needs the outer radius below 1")
    lo = math.log(-t_b)
    hi = math.inf if math.isinf(t_a) else math.log(-t_a)

    def to_t(s):
        with np.errstate(over="ignore"):
            return -np.exp(s)

    return lo, hi, to_t, (lambda s: -to_t(s))


def integrate_log_radial(g, t_a, t_b, depth_hint=1, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                         max_evaluations=DEFAULT_MAX_EVALUATIONS):
    """``int_{t_a}^{t_b} g(t) dt`` where ``g(t) = r^2 f(r)`` and ``t = log r``.

    ``t_a`` may be ``-inf`` (integration down to the origin).  With
    ``depth_hint >= 2`` the integral is carried out in ``s = log|t|``, which
    turns ``1/(t^2 log^2|t| ...)`` tails into exponentially decaying ones.
    Nodes beyond ``|t| ~ 1e307`` are dropped.
    """
    lo, hi, to_t, jac = _log_variable_map(t_a, t_b, depth_hint)

    def integrand(x):
        t = to_t(x)
        out = np.zeros_like(t)
        keep = np.isfinite(t)
        if np.any(keep):
            out[keep] = np.asarray(g(t[keep]), dtype=float) * jac(x[keep])
        return out

    return gauss_kronrod(integrand, lo, hi, rel_tol, abs_tol, max_evaluations)


# radii below this are not representable once squared; r-variable integrands are
# integrated down to it and the remaining tail is estimated
R_FLOOR = 1e-150
T_FLOOR = math.log(R_FLOOR)


def _power_tail(g, t_floor, samples=24):
    """Estimate ``int_{-inf}^{t_floor} g dt`` by fitting ``g ~ C |t|^-p`` near the floor.

    Two fits on adjacent windows give the estimate and its uncertainty.
    Returns ``(value, error, evaluations, ok)``; ``ok`` is False when the fit
    does not decay fast enough (``p <= 1``) for the tail to be finite.
    """
    t = t_floor * np.geomspace(0.25, 1.0, samples)
    vals = np.asarray(g(t), dtype=float)
    if not np.all(np.isfinite(vals)):
        return 0.0, math.inf, samples, False
    if np.all(vals == 0.0):
        return 0.0, 0.0, samples, True
    if np.any(vals == 0.0) or np.any(np.sign(vals) != np.sign(vals[-1])):
        return 0.0, float(np.max(np.abs(vals))) * abs(t_floor), samples, False
    sign = float(np.sign(vals[-1]))
    x, y = np.log(-t), np.log(np.abs(vals))
    tails = []
    for sl in (slice(0, samples // 2 + 1), slice(samples // 2, samples)):
        slope, icept = np.polyfit(x[sl], y[sl], 1)
        p = -slope
        if not p > 1.0:
            return 0.0, math.inf, samples, False
        log_tail = icept + (1.0 - p) * math.log(-t_floor) - math.log(p - 1.0)
        tails.append(math.exp(log_tail) if log_tail > -745.0 else 0.0)
    # the window nearest the floor is the better local model
    value = sign * tails[1]
    return value, abs(tails[1] - tails[0]), samples, True


def integrate_radial_singular(f, a, b, depth_hint=1, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                              max_evaluations=DEFAULT_MAX_EVALUATIONS):
    """``int_a^b f(r) r dr`` via ``t = log r`` (and ``s = log|t|`` for depth >= 2).

    ``a = 0`` integrates down to the origin.  Below ``R_FLOOR`` the integrand
    cannot be formed in double precision, so that tail is extrapolated from a
    power-law fit in ``|log r|`` and its uncertainty is added to the error
    estimate.  Integrands known in closed form in ``t`` should use
    :func:`integrate_log_radial`, which needs no tail model.
    """
    if not (0 <= a < b):
        raise ValueError("need 0 <= a < b")

    def g(t):
        r = np.exp(t)
        return np.asarray(f(r), dtype=float) * r * r

    t_b = math.log(b)
    if a > 0 or t_b <= T_FLOOR:
        t_a = -math.inf if a == 0 else math.log(a)
        if a == 0:
            raise ValueError(f"upper radius must exceed {R_FLOOR} when integrating to the origin")
        return integrate_log_radial(g, t_a, t_b, depth_hint, rel_tol, abs_tol, max_evaluations)
    body = integrate_log_radial(g, T_FLOOR, t_b, depth_hint, rel_tol, abs_tol, max_evaluations)
    tail, tail_err, n, ok = _power_tail(g, T_FLOOR)
    value = body.value + tail
    error = body.error_estimate + tail_err
    converged = body.converged and ok and error <= _target(value, rel_tol, abs_tol)
    return QuadResult(value, error, body.evaluations + n, converged)


def integrate_log_polar(density, t_a, t_b, depth_hint=1, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                        max_evaluations=DEFAULT_MAX_EVALUATIONS, initial_panels=1):
    """``int_{t_a}^{t_b} int_0^{2pi} density(t, theta) dtheta dt``.

    ``density`` is called with ``t`` of shape ``(m, 1)`` and ``theta`` of shape
    ``(1, n)`` and must broadcast to ``(m, n)``.  The outer variable is handled
    by the adaptive Gauss-Kronrod engine, the inner one by the vectorized circle
    rule run on all 15 panel nodes at once.
    """
    lo, hi, to_t, jac_s = _log_variable_map(t_a, t_b, depth_hint)
    x_of_u, jac_u, ua, ub = _interval_map(lo, hi)
    inner_rel = rel_tol * 0.1
    inner_abs = abs_tol * 0.01

    def rule(ulo, uhi):
        half = 0.5 * (uhi - ulo)
        u = 0.5 * (ulo + uhi) + half * NODES
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            x = x_of_u(u)
            t = to_t(x)
            j = jac_u(u) * jac_s(x)
        keep = np.isfinite(t) & np.isfinite(j)
        vals = np.zeros(15)
        errs = np.zeros(15)
        n = 0
        if np.any(keep):
            tk = t[keep][:, None]
            # rows that stop short of the inner target still carry their error
            # estimate into the panel error, so the outer test accounts for them
            ring, ring_err, n, _ = _circle_rows(
                lambda th: density(tk, th[None, :]), tk.shape[0], inner_rel, inner_abs)
            vals[keep] = ring * j[keep]
            errs[keep] = ring_err * np.abs(j[keep])
        k, err, resabs = _gk_panel(vals, half)
        err += half * float(KRONROD_WEIGHTS @ errs)
        return k, err, resabs, n

    return _adaptive(rule, ua, ub, rel_tol, abs_tol, max_evaluations, initial_panels)


def integrate_chart_2d(density, r_range, rel_tol=DEFAULT_REL_TOL, abs_tol=DEFAULT_ABS_TOL,
                       max_evaluations=DEFAULT_MAX_EVALUATIONS):
    """``int int density(r, theta) r dr dtheta`` over the annulus ``r_range``.

    ``density(r, theta)`` follows the broadcasting contract of
    :func:`integrate_log_polar`.  ``r_range[0]`` may be 0 for densities
    bounded near the origin: the disk below ``R_FLOOR`` is bounded by
    ``max |density| * pi * R_FLOOR^2`` and that bound joins the error estimate.
    Singular densities belong in :func:`integrate_log_polar`.
    """
    a, b = r_range
    if not (0 <= a < b):
        raise ValueError("need 0 <= a < b")

    def g(t, theta):
        r = np.exp(t)
        return np.asarray(density(r, theta), dtype=float) * r * r

    if a > 0:
        return integrate_log_polar(g, math.log(a), math.log(b), 1, rel_tol, abs_tol, max_evaluations)
    if not b > R_FLOOR:
        raise ValueError(f"outer radius must exceed {R_FLOOR}")
    body = integrate_log_polar(g, T_FLOOR, math.log(b), 1, rel_tol, abs_tol, max_evaluations)
    theta = 2.0 * np.pi * np.arange(CIRCLE_MIN_NODES) / CIRCLE_MIN_NODES
    edge = np.asarray(density(np.full_like(theta, R_FLOOR), theta), dtype=float)
    tail_bound = float(np.max(np.abs(edge))) * math.pi * R_FLOOR**2
    error = body.error_estimate + tail_bound
    return QuadResult(body.value, error, body.evaluations + theta.size,
                      body.converged and error <= _target(body.value, rel_tol, abs_tol))
