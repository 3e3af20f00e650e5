"""Steady rotation and field profiles on an annulus [r1, r2].

The steady state is u = r*omega(r) e_theta with vertical field eps*b(r) e_z.
Every profile stores omega^2 and its radial derivative as callables so that
the coefficient functions F(r) and Upsilon(r) can be evaluated without
finite differences.  All callables accept scalars or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import InvalidProfile

KINDS = ("keplerian", "powerlaw", "twoterm", "tabulated", "analytic")


@dataclass(frozen=True)
class FieldShape:
    """Vertical field shape b(r) with its first two derivatives."""
    b: Callable
    db: Callable
    d2b: Callable
    label: str = "uniform"
    params: dict = field(default_factory=dict)


def uniform_field(b0: float = 1.0) -> FieldShape:
    b0 = float(b0)
    if b0 <= 0:
        raise InvalidProfile("field shape must be positive, got b0=%g" % b0)
    return FieldShape(b=lambda r: np.full_like(np.asarray(r, float), b0),
                      db=lambda r: np.zeros_like(np.asarray(r, float)),
                      d2b=lambda r: np.zeros_like(np.asarray(r, float)),
                      label="uniform", params={"b0": b0})


def gaussian_field(c: float, rm: float, w: float) -> FieldShape:
    """b(r) = 1 + c*exp(-((r - rm)/w)^2)."""
    c, rm, w = float(c), float(rm), float(w)
    if w <= 0:
        raise InvalidProfile("gaussian field width must be positive")

    def g(r):
        s = (np.asarray(r, float) - rm) / w
        return np.exp(-s * s), s

    def b(r):
        e, _ = g(r)
        return 1.0 + c * e

    def db(r):
        e, s = g(r)
        return -2.0 * c * s * e / w

    def d2b(r):
        e, s = g(r)
        return c * e * (4.0 * s * s - 2.0) / w**2

    return FieldShape(b=b, db=db, d2b=d2b, label="gaussian",
                      params={"c": c, "rm": rm, "w": w})


@dataclass(frozen=True)
class RadialProfile:
    r1: float
    r2: float
    omega: Callable
    omega2: Callable
    domega: Callable
    domega2: Callable
    b: Callable
    db: Callable
    d2b: Callable
    eps: float
    kind: str
    params: dict = field(default_factory=dict)

    def with_eps(self, eps: float) -> "RadialProfile":
        return replace(self, eps=float(eps))

    @property
    def length(self) -> float:
        return self.r2 - self.r1

    def sample(self, n: int = 1001) -> np.ndarray:
        return np.linspace(self.r1, self.r2, n)


@dataclass(frozen=True)
class CoefficientSample:
    r: np.ndarray
    F: np.ndarray
    upsilon: np.ndarray


@dataclass(frozen=True)
class SignReport:
    domega2_sign: str
    upsilon_sign: str


def _check_interval(r1, r2):
    if not (np.isfinite(r1) and np.isfinite(r2)) or not (0 < r1 < r2):
        raise InvalidProfile("need 0 < r1 < r2 < inf, got [%g, %g]" % (r1, r2))


def _finish(r1, r2, omega2, domega2, eps, kind, params, fld, omega=None, domega=None):
    _check_interval(r1, r2)
    fld = fld if fld is not None else uniform_field()
    rs = np.linspace(r1, r2, 2001)
    w2 = np.asarray(omega2(rs), float)
    if omega is None:
        if np.any(~np.isfinite(w2)) or np.any(w2 <= 0):
            raise InvalidProfile("omega^2 must be positive on [%g, %g]" % (r1, r2))
        omega = lambda r: np.sqrt(omega2(r))
        domega = lambda r: 0.5 * domega2(r) / np.sqrt(omega2(r))
    bs = np.asarray(fld.b(rs), float)
    if np.any(~np.isfinite(bs)) or bs.min() <= 0:
        raise InvalidProfile("field shape b must stay positive, min b = %g" % bs.min())
    p = dict(params)
    p["field"] = dict(fld.params, label=fld.label)
    return RadialProfile(r1=float(r1), r2=float(r2), omega=omega, omega2=omega2,
                         domega=domega, domega2=domega2, b=fld.b, db=fld.db,
                         d2b=fld.d2b, eps=float(eps), kind=kind, params=p)


def make_keplerian(gm: float, r1: float, r2: float, eps: float,
                   field: FieldShape | None = None) -> RadialProfile:
    """omega^2 = gm / r^3."""
    if not gm > 0:
        raise InvalidProfile("gm must be positive, got %r" % gm)
    gm = float(gm)
    return _finish(r1, r2, lambda r: gm / np.asarray(r, float)**3,
                   lambda r: -3.0 * gm / np.asarray(r, float)**4,
                   eps, "keplerian", {"gm": gm}, field)


def make_powerlaw(omega0: float, beta: float, gamma: float, r1: float, r2: float,
                  eps: float, field: FieldShape | None = None) -> RadialProfile:
    """omega^2 = omega0^2 (1 + beta r^gamma)."""
    o2, beta, gamma = float(omega0)**2, float(beta), float(gamma)
    return _finish(r1, r2,
                   lambda r: o2 * (1.0 + beta * np.asarray(r, float)**gamma),
                   lambda r: o2 * beta * gamma * np.asarray(r, float)**(gamma - 1.0),
                   eps, "powerlaw", {"omega0": float(omega0), "beta": beta,
                                     "gamma": gamma}, field)


def make_twoterm(c1: float, c2: float, r1: float, r2: float, eps: float,
                 field: FieldShape | None = None) -> RadialProfile:
    """omega^2 = c1 r + c2 / r."""
    c1, c2 = float(c1), float(c2)
    return _finish(r1, r2,
                   lambda r: c1 * np.asarray(r, float) + c2 / np.asarray(r, float),
                   lambda r: c1 - c2 / np.asarray(r, float)**2,
                   eps, "twoterm", {"c1": c1, "c2": c2}, field)


def make_analytic(omega2: Callable, domega2: Callable, r1: float, r2: float,
                  eps: float, field: FieldShape | None = None,
                  params: dict | None = None) -> RadialProfile:
    """Profile from user-supplied omega^2 and d(omega^2)/dr callables."""
    return _finish(r1, r2, omega2, domega2, eps, "analytic", params or {}, field)


def make_tabulated(samples, eps: float) -> RadialProfile:
    """Monotone cubic (PCHIP) interpolation of tabulated (r, omega, b) rows."""
    arr = np.asarray(samples, float)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidProfile("tabulated samples must be rows of (r, omega, b)")
    if arr.shape[0] < 8:
        raise InvalidProfile("need at least 8 samples, got %d" % arr.shape[0])
    r, om, bb = arr.T
    if np.any(np.diff(r) <= 0):
        raise InvalidProfile("sample radii must be strictly increasing")
    if np.any(bb <= 0):
        raise InvalidProfile("field shape b must be positive at every sample")
    wi = PchipInterpolator(r, om)
    dwi = wi.derivative()
    bi = PchipInterpolator(r, bb)
    dbi, d2bi = bi.derivative(), bi.derivative(2)
    fld = FieldShape(b=lambda x: bi(x), db=lambda x: dbi(x), d2b=lambda x: d2bi(x),
                     label="tabulated")
    return _finish(r[0], r[-1], lambda x: wi(x)**2, lambda x: 2.0 * wi(x) * dwi(x),
                   eps, "tabulated", {"n_samples": int(arr.shape[0])}, fld,
                   omega=lambda x: wi(x), domega=lambda x: dwi(x))


# ---------------------------------------------------------------------------
# coefficient functions

def curvature_term(p: RadialProfile, r):
    """b''/(r b) - b'/(r^2 b); the field-shape part of F(r)*r."""
    r = np.asarray(r, float)
    b = p.b(r)
    return p.d2b(r) / (r * b) - p.db(r) / (r * r * b)


def eval_F(p: RadialProfile, r):
    if p.eps == 0:
        raise ZeroDivisionError("F(r) is undefined for field strength eps (ε) = 0")
    r = np.asarray(r, float)
    b = p.b(r)
    return p.domega2(r) / (p.eps**2 * b * b * r) + curvature_term(p, r) / r


def eval_rayleigh(p: RadialProfile, r):
    """Upsilon(r) = d(omega^2 r^4)/dr / r^3 = r d(omega^2)/dr + 4 omega^2."""
    r = np.asarray(r, float)
    return r * p.domega2(r) + 4.0 * p.omega2(r)


def coefficients(p: RadialProfile, r) -> CoefficientSample:
    r = np.asarray(r, float)
    return CoefficientSample(r=r, F=eval_F(p, r), upsilon=eval_rayleigh(p, r))


def _sign(v, tol=1e-12):
    v = np.asarray(v, float)
    scale = np.max(np.abs(v)) if v.size else 0.0
    pos = np.any(v > tol * scale)
    neg = np.any(v < -tol * scale)
    if pos and neg:
        return "mixed"
    return "negative" if neg else "positive"


def check_signs(p: RadialProfile, n: int = 400) -> SignReport:
    """Signs of d(omega^2)/dr and Upsilon on n interior sample points.

    Values within 1e-12*max|value| count as zero; an identically zero
    coefficient is reported as positive (semidefinite).
    """
    r = np.linspace(p.r1, p.r2, n + 2)[1:-1]
    return SignReport(_sign(p.domega2(r)), _sign(eval_rayleigh(p, r)))
