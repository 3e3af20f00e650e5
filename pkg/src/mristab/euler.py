"""Zero-field (Euler) comparison theory.

Axisymmetric Euler perturbations of the rotating flow obey, per axial mode k,
u_r'' = P(-Upsilon u_r), so the largest growth rate is

    lambda_k^2 = sup  int -Upsilon |u_r|^2 r dr / int (|u_r|^2 + |(r u_r)'|^2/(k^2 r^2)) r dr,

which increases with k towards a1 = max(0, -min Upsilon).  The discrete
quotient uses the same staggered weights as the MHD generator, so that the
MHD pencil at eps -> 0 reduces exactly to the Euler pencil.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import WrongRegime
from .linsim import EulerGenerator, MHDGenerator, Staggered, max_growth
from .operators import RadialGrid
from .profiles import RadialProfile, eval_rayleigh


@dataclass
class EulerReport:
    rayleigh_stable: bool
    a1: float
    lambda_k2: list
    comparisons: list = field(default_factory=list)
    slope: float = float("nan")


def rayleigh_classify(p: RadialProfile, g: RadialGrid) -> bool:
    """Stable iff Upsilon > 0 at every interior node."""
    return bool(np.all(eval_rayleigh(p, g.interior) > 0))


def euler_a1(p: RadialProfile, g: RadialGrid) -> float:
    return float(max(0.0, -np.min(eval_rayleigh(p, g.nodes))))


def euler_quotient(p: RadialProfile, g: RadialGrid, k: int):
    """(lambda_k^2 unclamped, maximizer on interior nodes, numerator, metric)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    st = Staggered(g, k)
    A = -st.Wr * eval_rayleigh(p, g.interior)
    M = st.metric_r()
    n = A.size
    w, v = linalg.eigh(np.diag(A), M, subset_by_index=[n - 1, n - 1])
    return float(w[0]), v[:, 0], np.diag(A), M


def euler_lambda_k(p: RadialProfile, g: RadialGrid, k: int) -> float:
    lam2, *_ = euler_quotient(p, g, k)
    return max(lam2, 0.0)


def assemble_euler_generator(p: RadialProfile, g: RadialGrid, k: int) -> EulerGenerator:
    return EulerGenerator(p, g, k)


def _slope(x, y):
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def compare_small_field(p: RadialProfile, g: RadialGrid, k: int, eps_list) -> EulerReport:
    """MHD growth Lambda_k^2(eps) against the Euler rate lambda_k^2 (b = 1).

    Rows are (eps, k, Lambda2, lambda2, gap).  The fitted slope is that of
    log Lambda2 against log eps^2 when the flow is Rayleigh stable and of
    log|gap| otherwise.
    """
    x = g.nodes
    if np.any(np.abs(p.b(x) - 1.0) > 1e-12) or np.any(np.abs(p.db(x)) > 1e-12):
        raise WrongRegime("the eps -> 0 comparison is set up for b = 1")
    lam2 = euler_lambda_k(p, g, k)
    rows = []
    for e in eps_list:
        L2 = max_growth(MHDGenerator(p.with_eps(e), g, k))
        rows.append((float(e), int(k), L2, lam2, L2 - lam2))
    stable = rayleigh_classify(p, g)
    eps = np.array([r[0] for r in rows])
    if stable:
        y = np.array([r[2] for r in rows])
    else:
        y = np.abs(np.array([r[4] for r in rows]))
    slope = _slope(eps**2, y) if np.all(y > 0) else float("nan")
    return EulerReport(stable, euler_a1(p, g), [lam2], rows, slope)


def euler_report(p: RadialProfile, g: RadialGrid, ks) -> EulerReport:
    return EulerReport(rayleigh_classify(p, g), euler_a1(p, g),
                       [euler_lambda_k(p, g, k) for k in ks])


compare_prop51 = compare_small_field
