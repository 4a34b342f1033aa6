"""Iterated logarithms of the radius and their exact radial calculus.

The chain is indexed by depth ``k``::

    L_0(r) = |log r| = -log r          (r < 1)
    L_k(r) = log L_{k-1}(r)            (k >= 1)

``L_k`` is defined for ``r < R_k`` where ``R_0 = R_1 = 1`` and ``R_{k+1}`` is the
radius at which ``L_k`` vanishes (``R_2 = e^-1``, ``R_3 = e^-e``, ...).

Every routine has a radius form (``f(k, r)``) and a log-radius form
(``f_t(k, t)`` with ``t = log r``).  The log-radius form is the one the
integrators use: it keeps the chain products free of ``r`` so that depths whose
domain lies below the smallest positive double (``R_5 = exp(-e^(e^e))``) are
still computable.  In the log-radius variable the radial operators become::

    r d/dr          = d/dt
    r^2 (f'' + f'/r) = d^2 f / dt^2
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError, QuadratureError

MAX_DEPTH = 6


def _guard_table(depth):
    table = [0.0, 0.0]
    while len(table) <= depth:
        prev = table[-1]
        try:
            table.append(-math.exp(-prev))
        except OverflowError:
            table.append(-math.inf)
    return tuple(table)


# log R_k for k = 0..MAX_DEPTH; R_6 lies beyond the double range (-inf here).
LOG_GUARDS = _guard_table(MAX_DEPTH)


def log_guard(k):
    """Return ``log R_k``, the log-radius bound of the domain of ``L_k``."""
    _check_depth(k)
    return LOG_GUARDS[k]


def guard_radius(k):
    """Return ``R_k``.  Underflows to 0.0 for ``k >= 5``."""
    return math.exp(log_guard(k))


def _check_depth(k):
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"depth must be an integer, got {k!r}")
    if k < 0 or k > MAX_DEPTH:
        raise DomainError(f"depth k={k} outside 0..{MAX_DEPTH}")


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _finish(arr, scalar):
    return float(arr) if scalar else arr


def _check_t(k, t):
    bound = LOG_GUARDS[k]
    if np.any(np.isnan(t)) or np.any(t >= bound):
        raise DomainError(
            f"log^({k}) r requires r < R_{k} = exp({bound:.17g}); got log r up to "
            f"{float(np.nanmax(t)) if np.any(~np.isnan(t)) else math.nan:.17g}"
        )


def _log_radius(r):
    r, scalar = _as_array(r)
    if np.any(~(r > 0)):
        raise DomainError("radius must be strictly positive")
    with np.errstate(divide="ignore"):
        return np.log(r), scalar


def chain_t(k, t):
    """Return ``[L_0, ..., L_k]`` evaluated at log-radius ``t`` (arrays)."""
    _check_depth(k)
    t = np.asarray(t, dtype=float)
    _check_t(k, t)
    links = [-t]
    for _ in range(k):
        links.append(np.log(links[-1]))
    return links


def iterlog_eval_t(k, t):
    t, scalar = _as_array(t)
    return _finish(chain_t(k, t)[k], scalar)


def iterlog_eval(k, r):
    """Evaluate ``log^(k) r``; ``k = 0`` gives ``|log r|``.

    >>> iterlog_eval(1, math.exp(-math.e))
    1.0
    """
    t, scalar = _log_radius(r)
    return _finish(chain_t(k, t)[k], scalar)


def iterlog_dt(k, t):
    """``r * d/dr log^(k) r`` as a function of ``t = log r``: ``-1 / prod_{j<k} L_j``."""
    t, scalar = _as_array(t)
    links = chain_t(k, t)
    prod = np.ones_like(t)
    for link in links[:k]:
        prod = prod * link
    if k == 0:
        return _finish(-prod, scalar)
    return _finish(-1.0 / prod, scalar)


def iterlog_dr(k, r):
    """Closed-form radial derivative ``-1 / (r * prod_{j=0}^{k-1} L_j)``.

    ``k = 0`` is accepted and returns ``d|log r|/dr = -1/r``.
    """
    t, scalar = _log_radius(r)
    value = iterlog_dt(k, t) / np.exp(t)
    if np.any(~np.isfinite(value)):
        raise DomainError(f"radial derivative of log^({k}) r is not finite at the given radius")
    return _finish(value, scalar)


def laplacian_numerator_t(k, t):
    """Numerator polynomial of the closed-form Laplacian.

    For ``k >= 1`` this is ``-prod_{j=1}^{k-1} L_j - sum_{l=1}^{k-1} prod_{j=l+1}^{k-1} L_j``
    (equal to ``-1`` for ``k = 1``).  Strictly negative on the whole domain.
    """
    t, scalar = _as_array(t)
    if k == 0:
        return _finish(np.zeros_like(t), scalar)
    links = chain_t(k, t)
    inner = links[1:k]
    # tail[l] = prod_{j=l+1}^{k-1} L_j, built right to left.
    total = np.zeros_like(t)
    tail = np.ones_like(t)
    for link in reversed(inner):
        total = total + tail
        tail = tail * link
    return _finish(-(tail + total), scalar)


def iterlog_scaled_laplacian_t(k, t):
    """``r^2 * Laplacian(log^(k) r)`` as a function of ``t = log r``.

    This is ``N_k / (prod_{j=0}^{k-1} L_j)^2`` with ``N_k`` from
    :func:`laplacian_numerator_t`; zero for ``k = 0``.
    """
    t, scalar = _as_array(t)
    if k == 0:
        _check_depth(k)
        _check_t(0, t)
        return _finish(np.zeros_like(t), scalar)
    links = chain_t(k, t)
    numerator = laplacian_numerator_t(k, t)
    # ratio built factor by factor to avoid overflow of the squared product
    value = numerator
    for link in links[:k]:
        value = value / link / link
    return _finish(value, scalar)


def iterlog_laplacian(k, r):
    """Flat Laplacian of ``log^(k) r``.

    ``k = 0`` returns 0 (``log r`` is harmonic), ``k = 1`` returns
    ``-1 / (r^2 (log r)^2)``.
    """
    t, scalar = _log_radius(r)
    value = iterlog_scaled_laplacian_t(k, t) / np.exp(2.0 * t)
    if np.any(~np.isfinite(value)):
        raise DomainError(f"Laplacian of log^({k}) r overflows at the given radius; use the log-radius form")
    return _finish(value, scalar)


def iterlog_abs_laplacian_integral(k, eps, rel_tol=1e-12, abs_tol=1e-14, max_evaluations=2**20,
                                   full_output=False):
    """Integral of ``|Laplacian(log^(k) r)|`` over the punctured disk of radius ``eps``.

    Evaluated as ``2 pi * int_{-inf}^{log eps} |r^2 Lap| dt`` with a further
    ``s = log|t|`` substitution for ``k >= 2``.  For ``k = 1`` the exact value
    is ``2 pi / |log eps|`` (angular factor included).
    """
    from . import quad

    if k < 1:
        raise DomainError("the integral is only defined for depth k >= 1")
    if not eps > 0:
        raise DomainError("eps must be positive")
    t_eps = math.log(eps)
    _check_depth(k)
    _check_t(k, np.asarray(t_eps))
    _check_sign_constant(k, t_eps)

    def integrand(t):
        return np.abs(iterlog_scaled_laplacian_t(k, t))

    result = quad.integrate_log_radial(
        integrand, -math.inf, t_eps, depth_hint=1 if k == 1 else 2,
        rel_tol=rel_tol, abs_tol=abs_tol, max_evaluations=max_evaluations,
    )
    result = result.scaled(2.0 * math.pi)
    if not result.converged:
        raise QuadratureError(
            f"|Lap log^({k}) r| integral on B_{eps:g} did not converge "
            f"(error {result.error_estimate:.3g})", result)
    return result if full_output else result.value


def _check_sign_constant(k, t_eps, samples=64):
    # Probe log-spaced points in the s = log|t| variable between |t_eps| and a deep cutoff.
    s_lo = math.log(-t_eps)
    s = s_lo + np.geomspace(1e-9, 600.0, samples)
    t = -np.exp(np.clip(s, None, 700.0))
    num = laplacian_numerator_t(k, np.append(t, t_eps))
    if not (np.all(num < 0) or np.all(num > 0)):
        raise DomainError(f"Laplacian of log^({k}) r changes sign inside B_eps; choose a smaller eps")
