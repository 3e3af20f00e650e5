"""Sharp stability verdict and field-strength thresholds.

Writing N for the form int (d(omega^2)/dr / b^2)|phi|^2 dr,

    <L_1 phi, phi> = <L-hat phi, phi> + N(phi)/eps^2,

so every threshold is an extreme eigenvalue of a symmetric pencil built
from the same assembled matrices that classify() uses.

Substituting phi = b*psi shows <L-hat phi, phi> = int (b^2/r)(|psi'|^2 +
|psi|^2) dr, so L-hat is positive definite whenever b > 0.  The routines for
an indefinite or singular L-hat therefore reject every admissible profile;
the underlying algebra is exposed on forms (``*_from_forms``) so it can be
exercised on general Sturm-Liouville forms.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NumericFailure, WrongRegime
from .operators import (RadialGrid, TridiagonalForm, assemble_Lhat, assemble_Lk,
                        dense_pencil_top, inertia, metric, rotation_mass,
                        weighted_mass)
from .profiles import RadialProfile


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    n_neg_L1: int
    criterion: str = "sharp-L1"


@dataclass(frozen=True)
class Threshold:
    value: float
    maximizer: np.ndarray
    kind: str
    raw: float = 0.0

    @property
    def root(self) -> float:
        return float(np.sqrt(self.value))


def _full(g: RadialGrid, v):
    out = np.zeros(g.n + 1)
    out[1:-1] = v
    return out


def classify(p: RadialProfile, g: RadialGrid, zero_tol: float = 1e-10) -> StabilityVerdict:
    """Stable iff the discrete L_1 has no negative direction."""
    nn = inertia(assemble_Lk(p, g, 1), zero_tol).n_neg
    return StabilityVerdict(stable=nn == 0, n_neg_L1=nn)


def classify_form(f: TridiagonalForm, zero_tol: float = 1e-10) -> StabilityVerdict:
    nn = inertia(f, zero_tol).n_neg
    return StabilityVerdict(stable=nn == 0, n_neg_L1=nn)


def geometric_sweep(lo: float, hi: float, n: int = 200) -> np.ndarray:
    return np.geomspace(lo, hi, n)


def classify_sweep(p: RadialProfile, g: RadialGrid, eps_values, jobs: int = 1):
    """classify() at each eps; returns a boolean array of stable verdicts."""
    run = lambda e: classify(p.with_eps(e), g).stable
    eps_values = list(eps_values)
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return np.array(list(ex.map(run, eps_values)))
    return np.array([run(e) for e in eps_values])


def _is_uniform_field(p: RadialProfile, g: RadialGrid, tol=1e-12):
    x = g.nodes
    return (np.all(np.abs(p.b(x) - 1.0) <= tol) and np.all(np.abs(p.db(x)) <= tol)
            and np.all(np.abs(p.d2b(x)) <= tol))


# ---------------------------------------------------------------------------
# thresholds on assembled forms

def _top(A: TridiagonalForm, B: TridiagonalForm):
    w, v = dense_pencil_top(A.dense(), B.dense(), 1, largest=True)
    return float(w[0]), v[:, 0]


def eps_min_from_forms(lhat: TridiagonalForm, nmass: TridiagonalForm) -> Threshold:
    """eps_min^2 = max(sup -N(phi)/<L-hat phi, phi>, 0) for positive L-hat."""
    inn = inertia(lhat)
    if inn.n_neg or inn.n_zero:
        raise WrongRegime("L-hat is not positive definite (n_neg=%d, n_zero=%d); "
                          "use the eps_max threshold instead" % (inn.n_neg, inn.n_zero))
    mu, v = _top(nmass.scaled(-1.0), lhat)
    return Threshold(max(mu, 0.0), _full(lhat.grid, v), "eps_min^2", mu)


def eps_max_from_forms(lhat: TridiagonalForm, nmass: TridiagonalForm) -> Threshold:
    """eps_max^2 with 1/eps_max^2 = sup -<L-hat phi, phi>/N(phi), N positive."""
    if inertia(lhat).n_neg == 0:
        raise WrongRegime("L-hat has no negative direction; eps_max is not defined")
    if inertia(nmass).n_neg or np.any(nmass.diag <= 0):
        raise WrongRegime("eps_max needs d(omega^2)/dr > 0 everywhere")
    mu, v = _top(lhat.scaled(-1.0), nmass)
    if mu <= 0:
        raise NumericFailure("pencil top eigenvalue is not positive")
    return Threshold(1.0 / mu, _full(lhat.grid, v), "eps_max^2", mu)


def kernel_limit_from_forms(lhat: TridiagonalForm, nmass: TridiagonalForm,
                            met: TridiagonalForm, zero_tol: float = 1e-8):
    """Sign and limit value for a simple kernel direction of L-hat.

    Returns (sign, limit, phi_hat) where limit = N(phi_hat)/|phi_hat|^2_metric.
    """
    w, v = dense_pencil_top(lhat.dense(), met.dense(), 2, largest=False)
    if w[0] < -zero_tol:
        raise WrongRegime("L-hat has a negative direction (lowest eigenvalue %.3e)" % w[0])
    if abs(w[0]) > zero_tol:
        raise WrongRegime("no kernel of L-hat within tolerance (lowest eigenvalue %.3e)" % w[0])
    if w[1] <= zero_tol:
        raise WrongRegime("kernel of L-hat is not simple")
    phi = v[:, 0]
    val = nmass.quad(phi) / met.quad(phi)
    return (1 if val > 0 else -1), float(val), _full(lhat.grid, phi)


# ---------------------------------------------------------------------------
# profile-level API

def compute_B0(p: RadialProfile, g: RadialGrid) -> Threshold:
    """B0^2 = max(sup -int d(omega^2)/dr |phi|^2 dr / |phi|^2_metric, 0), b = 1."""
    if not _is_uniform_field(p, g):
        raise WrongRegime("B0 is defined for a uniform field b = 1")
    mu, v = _top(rotation_mass(p, g).scaled(-1.0), metric(g))
    return Threshold(max(mu, 0.0), _full(g, v), "B0^2", mu)


def compute_eps_min(p: RadialProfile, g: RadialGrid) -> Threshold:
    return eps_min_from_forms(assemble_Lhat(p, g), rotation_mass(p, g))


def compute_eps_max(p: RadialProfile, g: RadialGrid) -> Threshold:
    x, _ = g.gauss_points()
    lhat = assemble_Lhat(p, g)
    if inertia(lhat).n_neg == 0:
        raise WrongRegime("L-hat is positive definite for this profile; eps_max applies "
                          "only when L-hat has negative directions")
    if np.any(p.domega2(x) <= 0):
        raise WrongRegime("eps_max needs d(omega^2)/dr > 0 everywhere")
    return eps_max_from_forms(lhat, rotation_mass(p, g))


def kernel_perturbation_sign(p: RadialProfile, g: RadialGrid, zero_tol: float = 1e-8):
    s, val, _ = kernel_limit_from_forms(assemble_Lhat(p, g), rotation_mass(p, g),
                                        metric(g), zero_tol)
    return s, val


# ---------------------------------------------------------------------------
# tuned families

def lowest_lhat_eigenvalue(p: RadialProfile, g: RadialGrid) -> float:
    w, _ = dense_pencil_top(assemble_Lhat(p, g).dense(), metric(g).dense(), 1, largest=False)
    return float(w[0])


def well_form(g: RadialGrid, rm: float, w: float) -> TridiagonalForm:
    """int exp(-((r - rm)/w)^2)/r |phi|^2 dr, the shape of a potential well."""
    return weighted_mass(g, lambda r: np.exp(-((r - rm) / w)**2) / r)


def well_family(p: RadialProfile, g: RadialGrid, c: float, rm: float, w: float) -> TridiagonalForm:
    """L-hat minus c times a Gaussian well; a Sturm-Liouville form of the same type."""
    return assemble_Lhat(p, g) + well_form(g, rm, w).scaled(-c)


def tune_well(p: RadialProfile, g: RadialGrid, rm: float, w: float, c_hi: float = 1.0):
    """Depth c at which the lowest eigenvalue of the well family is exactly zero."""
    met = metric(g).dense()

    def low(c):
        return dense_pencil_top(well_family(p, g, c, rm, w).dense(), met, 1, largest=False)[0][0]

    while low(c_hi) > 0:
        c_hi *= 2.0
        if c_hi > 1e8:
            raise NumericFailure("could not bracket the zero crossing")
    return optimize.brentq(low, 0.0, c_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
