"""Local (WKB) dispersion relation for axisymmetric MHD modes.

With X = Lambda^2 + eps^2 k^2 and radial wavenumber k_r at a radius r0,

    (1 + k^2/k_r^2) X^2 + (k^2/k_r^2) Upsilon X - (k^4/k_r^2) eps^2 4 omega^2 = 0.

The constant term is never positive, so both roots are real.  The root of
larger magnitude is the epicyclic branch, the other the MRI branch.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import WrongRegime
from .operators import RadialGrid
from .profiles import RadialProfile, eval_rayleigh


@dataclass(frozen=True)
class DispersionInput:
    r0: float
    upsilon0: float
    omega0: float
    eps: float
    k: float
    kr: float

    def __post_init__(self):
        if not self.kr > 0:
            raise ValueError("kr must be positive")
        if self.k == 0:
            raise ValueError("k must be nonzero")

    @classmethod
    def at(cls, p: RadialProfile, r0: float, k: float, kr: float):
        return cls(float(r0), float(eval_rayleigh(p, r0)), float(p.omega(r0)),
                   p.eps, float(k), float(kr))


@dataclass(frozen=True)
class DispersionRoots:
    X: np.ndarray
    lambda2: np.ndarray
    labels: tuple
    coeffs: tuple

    def residuals(self) -> np.ndarray:
        """Backward error |p(X)| / (|a| X^2 + |b| |X| + |c|) of each root."""
        a, b, c = self.coeffs
        X = self.X
        num = np.abs((a * X + b) * X + c)
        den = abs(a) * X * X + abs(b) * np.abs(X) + abs(c)
        return np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)

    @property
    def epicyclic(self) -> float:
        return float(self.lambda2[0])

    @property
    def mri(self) -> float:
        return float(self.lambda2[1])


def coefficients(upsilon, omega, eps, k, kr):
    q = (k / kr)**2
    return 1.0 + q, q * upsilon, -q * k * k * eps * eps * 4.0 * omega * omega


def quadratic_roots(a, b, c):
    """Roots (big, small) of a x^2 + b x + c with a > 0, c <= 0, cancellation-free."""
    a, b, c = np.broadcast_arrays(*(np.asarray(v, float) for v in (a, b, c)))
    disc = np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))
    sgn = np.where(b >= 0, 1.0, -1.0)
    q = -0.5 * (b + sgn * disc)
    safe = np.where(q != 0, q, 1.0)
    x1 = q / a
    x2 = np.where(q != 0, c / safe, 0.0)
    big = np.where(np.abs(x1) >= np.abs(x2), x1, x2)
    small = np.where(np.abs(x1) >= np.abs(x2), x2, x1)
    return big, small


def dispersion_roots(inp: DispersionInput) -> DispersionRoots:
    a, b, c = coefficients(inp.upsilon0, inp.omega0, inp.eps, inp.k, inp.kr)
    big, small = quadratic_roots(a, b, c)
    X = np.array([float(big), float(small)])
    ek2 = (inp.eps * inp.k)**2
    labels = ("degenerate", "degenerate") if abs(X[0]) == abs(X[1]) else ("epicyclic", "mri")
    return DispersionRoots(X=X, lambda2=X - ek2, labels=labels, coeffs=(a, b, c))


def asymptotic_roots(inp: DispersionInput):
    """Leading-order branches for eps^2 k^2 << Upsilon.

    Returns (epicyclic_lambda2, mri_lambda2, warn).  The MRI branch uses
    r0 d(omega^2)/dr = Upsilon - 4 omega^2.
    """
    ups, om2 = inp.upsilon0, inp.omega0**2
    if ups == 0:
        raise WrongRegime("Upsilon(r0) = 0: asymptotic branches are degenerate")
    ek2 = (inp.eps * inp.k)**2
    warn = ek2 / abs(ups) >= 0.1
    if warn:
        warnings.warn("eps^2 k^2 / Upsilon = %.3g is not small" % (ek2 / abs(ups)))
    kk = inp.k**2
    epi = -kk / (kk + inp.kr**2) * ups - (4.0 * om2 / ups + 1.0) * ek2
    mri = -((ups - 4.0 * om2) / ups) * ek2
    return epi, mri, warn


def mri_branch(p: RadialProfile, r0, k, kr):
    """MRI-branch Lambda^2 at the radii r0 (vectorized)."""
    r0 = np.asarray(r0, float)
    a, b, c = coefficients(eval_rayleigh(p, r0), p.omega(r0), p.eps, k, kr)
    _, small = quadratic_roots(a, b, c)
    return small - (p.eps * k)**2


def local_vs_global(p: RadialProfile, g: RadialGrid, k: int, eps: float | None, kr_list,
                    global_rate=None):
    """Local MRI estimate maximized over interior radii, next to the global rate.

    Returns rows (kr, r0_argmax, lambda2_local, lambda_global); lambda_global is
    nan when no unstable global mode exists.
    """
    from .modes import find_growth_rate

    if eps is not None:
        p = p.with_eps(eps)
    if global_rate is None:
        sol = find_growth_rate(p, g, k)
        global_rate = sol.lam if sol is not None else float("nan")
    r0 = g.interior
    rows = []
    for kr in kr_list:
        l2 = mri_branch(p, r0, k, kr)
        j = int(np.argmax(l2))
        rows.append((float(kr), float(r0[j]), float(l2[j]), float(global_rate)))
    return rows
