"""Closed catalog of radial/angular expressions with exact derivatives.

Every term evaluates a :class:`Jet` in log-polar coordinates ``(t, theta)``
with ``t = log r``: the value and the derivatives ``d/dt``, ``d^2/dt^2``,
``d/dtheta``, ``d^2/dtheta^2``.  In these coordinates the flat Laplacian is
``e^{-2t} (f_tt + f_thth)``, the gradient norm is ``e^{-2t} (f_t^2 + f_th^2)``
and ``r d/dr = d/dt``, which keeps every quantity finite down to the origin.

:class:`SmoothTerm` subclasses form the catalog of bounded smooth remainders
and round-trip through plain dicts; :class:`LogR`, :class:`IterLog` and
:class:`Blend` are the singular and gluing pieces used to assemble conformal
factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import logcalc
from .errors import DomainError, ValidationError


class Jet(NamedTuple):
    v: np.ndarray
    t: np.ndarray
    tt: np.ndarray
    th: np.ndarray
    thth: np.ndarray

    def radial(self, t):
        """Return ``(f, f_r, f_rr)`` in the radius variable."""
        r = np.exp(t)
        return self.v, self.t / r, (self.tt - self.t) / r**2

    def laplacian(self, t):
        return (self.tt + self.thth) * np.exp(-2.0 * t)


def _grid(t, theta):
    t, theta = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(theta, dtype=float))
    return t, theta


def _zeros_jet(shape, v=0.0):
    z = np.zeros(shape)
    return Jet(np.full(shape, float(v)), z, z, z, z)


class Term:
    """Base class: anything that produces a :class:`Jet` on a log-polar grid."""

    def jet(self, t, theta=0.0):
        t, theta = _grid(t, theta)
        return self._jet(t, theta)

    def _jet(self, t, theta):
        raise NotImplementedError

    # radius-variable conveniences -------------------------------------------------
    def value(self, r, theta=0.0):
        return _scalarize(self.jet(np.log(r), theta).v, r, theta)

    def derivatives(self, r, theta=0.0):
        """``(f, f_r, f_rr, f_theta, f_thetatheta)`` at radius ``r``."""
        t = np.log(np.asarray(r, dtype=float))
        j = self.jet(t, theta)
        f, fr, frr = j.radial(t)
        return tuple(_scalarize(x, r, theta) for x in (f, fr, frr, j.th, j.thth))

    def laplacian(self, r, theta=0.0):
        t = np.log(np.asarray(r, dtype=float))
        return _scalarize(self.jet(t, theta).laplacian(t), r, theta)

    # algebra ---------------------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Const(float(other))
        if not isinstance(other, Term):
            return NotImplemented
        return _make_sum(self, other)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            cls = Scale if isinstance(self, SmoothTerm) else _SingularScale
            return cls(float(other), self)
        if not isinstance(other, Term):
            return NotImplemented
        return _make_product(self, other)

    __rmul__ = __mul__


def _scalarize(x, r, theta):
    if np.ndim(r) == 0 and np.ndim(theta) == 0:
        return float(np.asarray(x))
    return x


def _is_smooth(*terms):
    return all(isinstance(x, SmoothTerm) for x in terms)


def _make_sum(a, b):
    parts = []
    for x in (a, b):
        parts.extend(x.terms if isinstance(x, (Sum, _SingularSum)) else (x,))
    cls = Sum if _is_smooth(*parts) else _SingularSum
    return cls(tuple(parts))


def _make_product(a, b):
    if not _is_smooth(a, b):
        raise TypeError("products are only defined between catalog terms")
    parts = []
    for x in (a, b):
        parts.extend(x.terms if isinstance(x, Product) else (x,))
    return Product(tuple(parts))


# ---------------------------------------------------------------------------
# smooth catalog


class SmoothTerm(Term):
    """Bounded smooth remainder from the closed catalog."""

    kind = ""

    def to_dict(self):
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Const(SmoothTerm):
    c: float = 0.0
    kind = "const"

    def _jet(self, t, theta):
        return _zeros_jet(t.shape, self.c)

    def to_dict(self):
        return {"type": self.kind, "value": self.c}


@dataclass(frozen=True, eq=True)
class PowR(SmoothTerm):
    """``r^p`` with ``p > 0``."""

    p: float
    kind = "pow_r"

    def __post_init__(self):
        if not self.p > 0:
            raise ValidationError(f"pow_r needs p > 0, got {self.p}")

    def _jet(self, t, theta):
        v = np.exp(self.p * t)
        z = np.zeros_like(v)
        return Jet(v, self.p * v, self.p**2 * v, z, z)

    def to_dict(self):
        return {"type": self.kind, "p": self.p}


@dataclass(frozen=True, eq=True)
class LogOnePlus(SmoothTerm):
    """``log(1 + coef * r^(2a))`` with ``a > 0``; ``coef`` defaults to 1.

    A negative ``coef`` restricts the domain to ``coef * r^(2a) > -1``.
    """

    a: float
    coef: float = 1.0
    kind = "log_one_plus"

    def __post_init__(self):
        if not self.a > 0:
            raise ValidationError(f"log_one_plus needs a > 0, got {self.a}")

    def _jet(self, t, theta):
        q = self.coef * np.exp(2.0 * self.a * t)
        if np.any(q <= -1.0):
            raise DomainError("log_one_plus evaluated where 1 + coef r^(2a) <= 0")
        v = np.log1p(q)
        w = q / (1.0 + q)
        z = np.zeros_like(v)
        return Jet(v, 2.0 * self.a * w, 4.0 * self.a**2 * w / (1.0 + q), z, z)

    def max_radius(self):
        if self.coef >= 0:
            return math.inf
        return (-1.0 / self.coef) ** (1.0 / (2.0 * self.a))

    def to_dict(self):
        d = {"type": self.kind, "a": self.a}
        if self.coef != 1.0:
            d["coef"] = self.coef
        return d


_BUMP_EDGE = 1.0 / 700.0


def _smooth_step(x):
    """``S(x) = psi(1-x) / (psi(x) + psi(1-x))`` with ``psi(x) = exp(-1/x)``; returns S, S', S''."""
    s = np.where(x <= 0.0, 1.0, 0.0)
    ds = np.zeros_like(x)
    dds = np.zeros_like(x)
    inside = (x > _BUMP_EDGE) & (x < 1.0 - _BUMP_EDGE)
    # on (0, EDGE] and [1-EDGE, 1) the step differs from its limit by < exp(-690)
    s = np.where((x > 0) & (x <= _BUMP_EDGE), 1.0, s)
    if np.any(inside):
        xi = x[inside]
        q = 1.0 / (1.0 - xi) - 1.0 / xi
        # logistic 1 / (1 + e^q) in a form that keeps tiny tails
        e = np.exp(-np.abs(q))
        b = np.where(q > 0, e / (1.0 + e), 1.0 / (1.0 + e))
        bb = e / (1.0 + e) ** 2  # b (1 - b)
        dq = 1.0 / (1.0 - xi) ** 2 + 1.0 / xi**2
        ddq = 2.0 / (1.0 - xi) ** 3 - 2.0 / xi**3
        db = -bb * dq
        s[inside] = b
        ds[inside] = db
        dds[inside] = -db * (1.0 - 2.0 * b) * dq - bb * ddq
    return s, ds, dds


@dataclass(frozen=True, eq=True)
class Bump(SmoothTerm):
    """Smooth transition equal to 1 on ``[0, r0]`` and 0 on ``[r1, inf)``."""

    r0: float
    r1: float
    kind = "bump"

    def __post_init__(self):
        if not (0 < self.r0 < self.r1):
            raise ValidationError(f"bump needs 0 < r0 < r1, got ({self.r0}, {self.r1})")

    def _jet(self, t, theta):
        r = np.exp(t)
        w = self.r1 - self.r0
        s, ds, dds = _smooth_step((r - self.r0) / w)
        z = np.zeros_like(s)
        bt = r * ds / w
        return Jet(s, bt, r**2 * dds / w**2 + bt, z, z)

    def to_dict(self):
        return {"type": self.kind, "r0": self.r0, "r1": self.r1}


@dataclass(frozen=True, eq=True)
class AngularHarmonic(SmoothTerm):
    """``amplitude * r^|m| * cos(m theta)`` (harmonic in the plane)."""

    m: int
    amplitude: float = 1.0
    kind = "harmonic"

    def _jet(self, t, theta):
        m = abs(int(self.m))
        radial = self.amplitude * np.exp(m * t)
        c = radial * np.cos(self.m * theta)
        s = radial * np.sin(self.m * theta)
        return Jet(c, m * c, m * m * c, -self.m * s, -(self.m**2) * c)

    def to_dict(self):
        return {"type": self.kind, "m": int(self.m), "amplitude": self.amplitude}


@dataclass(frozen=True, eq=True)
class Sum(SmoothTerm):
    terms: tuple
    kind = "sum"

    def _jet(self, t, theta):
        jets = [x._jet(t, theta) for x in self.terms]
        return Jet(*(sum(parts) for parts in zip(*jets)))

    def to_dict(self):
        return {"type": self.kind, "terms": [x.to_dict() for x in self.terms]}


@dataclass(frozen=True, eq=True)
class Scale(SmoothTerm):
    factor: float
    term: Term
    kind = "scale"

    def _jet(self, t, theta):
        return Jet(*(self.factor * x for x in self.term._jet(t, theta)))

    def to_dict(self):
        return {"type": self.kind, "factor": self.factor, "term": self.term.to_dict()}


@dataclass(frozen=True, eq=True)
class Product(SmoothTerm):
    terms: tuple
    kind = "product"

    def _jet(self, t, theta):
        acc = self.terms[0]._jet(t, theta)
        for x in self.terms[1:]:
            acc = _product_jet(acc, x._jet(t, theta))
        return acc

    def to_dict(self):
        return {"type": self.kind, "terms": [x.to_dict() for x in self.terms]}


def _product_jet(f, g):
    return Jet(
        f.v * g.v,
        f.t * g.v + f.v * g.t,
        f.tt * g.v + 2.0 * f.t * g.t + f.v * g.tt,
        f.th * g.v + f.v * g.th,
        f.thth * g.v + 2.0 * f.th * g.th + f.v * g.thth,
    )


_CATALOG = {cls.kind: cls for cls in (Const, PowR, LogOnePlus, Bump, AngularHarmonic, Sum, Scale, Product)}


def smooth_from_dict(d):
    """Build a catalog term from its dict form (the JSON config representation)."""
    if not isinstance(d, dict) or "type" not in d:
        raise ValidationError(f"smooth term must be an object with a 'type' key, got {d!r}")
    kind = d["type"]
    try:
        if kind == "const":
            return Const(float(d.get("value", 0.0)))
        if kind == "pow_r":
            return PowR(float(d["p"]))
        if kind == "log_one_plus":
            return LogOnePlus(float(d["a"]), float(d.get("coef", 1.0)))
        if kind == "bump":
            return Bump(float(d["r0"]), float(d["r1"]))
        if kind == "harmonic":
            return AngularHarmonic(int(d["m"]), float(d.get("amplitude", 1.0)))
        if kind == "sum":
            return Sum(tuple(smooth_from_dict(x) for x in d["terms"]))
        if kind == "scale":
            return Scale(float(d["factor"]), smooth_from_dict(d["term"]))
        if kind == "product":
            return Product(tuple(smooth_from_dict(x) for x in d["terms"]))
    except KeyError as exc:
        raise ValidationError(f"smooth term {kind!r} is missing field {exc}") from None
    raise ValidationError(f"unknown smooth term type {kind!r}; expected one of {sorted(_CATALOG)}")


# ---------------------------------------------------------------------------
# singular pieces


@dataclass(frozen=True, eq=True)
class LogR(Term):
    """``alpha * log r`` (harmonic away from the origin)."""

    alpha: float

    def _jet(self, t, theta):
        z = np.zeros_like(t)
        return Jet(self.alpha * t, np.full_like(t, self.alpha), z, z, z)


@dataclass(frozen=True, eq=True)
class IterLog(Term):
    """``beta * log^(k) r``; evaluation is guarded by the chain domain."""

    k: int
    beta: float = 1.0

    def _jet(self, t, theta):
        z = np.zeros_like(t)
        return Jet(
            self.beta * logcalc.iterlog_eval_t(self.k, t),
            self.beta * logcalc.iterlog_dt(self.k, t),
            self.beta * logcalc.iterlog_scaled_laplacian_t(self.k, t),
            z, z,
        )


@dataclass(frozen=True, eq=True)
class _SingularSum(Term):
    terms: tuple

    def _jet(self, t, theta):
        jets = [x._jet(t, theta) for x in self.terms]
        return Jet(*(sum(parts) for parts in zip(*jets)))


@dataclass(frozen=True, eq=True)
class _SingularScale(Term):
    factor: float
    term: Term

    def _jet(self, t, theta):
        return Jet(*(self.factor * x for x in self.term._jet(t, theta)))


@dataclass(frozen=True, eq=True)
class Blend(Term):
    """``bump * inner + (1 - bump) * outer``.

    ``inner`` is only evaluated where the bump is nonzero (``r < r1``), so it
    may be undefined beyond the blend annulus.
    """

    inner: Term
    outer: Term
    bump: Bump

    def _jet(self, t, theta):
        b = self.bump._jet(t, theta)
        o = self.outer._jet(t, theta)
        mask = t < math.log(self.bump.r1)
        d = [np.zeros_like(t) for _ in range(5)]
        if np.any(mask):
            inner = self.inner._jet(t[mask], theta[mask])
            for slot, (iv, ov) in enumerate(zip(inner, o)):
                d[slot][mask] = iv - ov[mask]
        dv, dt, dtt, dth, dthth = d
        return Jet(
            o.v + b.v * dv,
            o.t + b.t * dv + b.v * dt,
            o.tt + b.tt * dv + 2.0 * b.t * dt + b.v * dtt,
            o.th + b.v * dth,
            o.thth + b.v * dthth,
        )
