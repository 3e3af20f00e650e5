"""Shipped profiles used by tests, examples and the CLI."""
from __future__ import annotations

import numpy as np

from .profiles import (RadialProfile, gaussian_field, make_analytic, make_keplerian,
                       make_powerlaw)


def keplerian(eps: float = 0.05) -> RadialProfile:
    """omega^2 = 1/r^3 on [1, 2]: Rayleigh stable, MRI unstable for weak fields."""
    return make_keplerian(1.0, 1.0, 2.0, eps)


def rigid(eps: float = 0.05, omega0: float = 1.0) -> RadialProfile:
    """Rigid rotation omega = omega0 on [1, 2]; Upsilon = 4 omega0^2."""
    return make_powerlaw(omega0, 0.0, 0.0, 1.0, 2.0, eps)


def rayleigh_sign_change(eps: float = 0.05) -> RadialProfile:
    """omega^2 = 1 + 30.375 r^-5 on [1, 2]; Upsilon changes sign at r = 1.5."""
    return make_powerlaw(1.0, 30.375, -5.0, 1.0, 2.0, eps)


def increasing(eps: float = 0.05) -> RadialProfile:
    """omega^2 = 1 + r^2 on [1, 2]: d(omega^2)/dr > 0, stable at every field strength."""
    return make_powerlaw(1.0, 1.0, 2.0, 1.0, 2.0, eps)


def gaussian_bump(eps: float = 0.05, c: float = 0.5, rm: float = 1.5,
                  w: float = 0.2) -> RadialProfile:
    """Keplerian rotation threaded by b = 1 + c exp(-((r - rm)/w)^2)."""
    return make_keplerian(1.0, 1.0, 2.0, eps, field=gaussian_field(c, rm, w))


def euler_well(eps: float = 0.05, depth: float = 0.7, curv: float = 1.0,
               rm: float = 1.5, l0: float = 5.0) -> RadialProfile:
    """Rayleigh-unstable flow with Upsilon = -depth + curv (r - rm)^2 on [1, 2].

    The squared angular momentum is l(r) = omega^2 r^4 = l0 + int_1^r s^3 Upsilon ds,
    a polynomial, so omega^2 and its derivative are exact.  The minimum of
    Upsilon is interior, which makes lambda_k^2 approach depth at rate 1/k.
    """
    a, c = float(depth), float(curv)
    # s^3 Upsilon = c s^5 - 2 c rm s^4 + (c rm^2 - a) s^3
    co = np.array([c, -2.0 * c * rm, c * rm * rm - a])

    def prim(r):
        return co[0] * r**6 / 6.0 + co[1] * r**5 / 5.0 + co[2] * r**4 / 4.0

    def ell(r):
        return l0 + prim(r) - prim(1.0)

    def dell(r):
        return co[0] * r**5 + co[1] * r**4 + co[2] * r**3

    def om2(r):
        r = np.asarray(r, float)
        return ell(r) / r**4

    def dom2(r):
        r = np.asarray(r, float)
        return dell(r) / r**4 - 4.0 * ell(r) / r**5

    return make_analytic(om2, dom2, 1.0, 2.0, eps,
                         params={"fixture": "euler_well", "depth": a, "curv": c,
                                 "rm": float(rm), "l0": float(l0)})


FIXTURES = {
    "keplerian": keplerian,
    "rigid": rigid,
    "rayleigh_sign_change": rayleigh_sign_change,
    "increasing": increasing,
    "gaussian_bump": gaussian_bump,
    "euler_well": euler_well,
}
