"""Growing normal modes by shooting on the reduced radial ODE.

For constant b a mode proportional to e^{Lambda t} with cos/sin axial
dependence reduces to one equation for the flux function phi,

    (Lambda + k^2 eps^2 b^2/Lambda) r (phi'/r)'
        = k^2 [Lambda + k^2 eps^2 b^2/Lambda
               + (4 omega^2/Lambda)(1 - k^2 eps^2 b^2/(Lambda^2 + k^2 eps^2 b^2))
               + r d(omega^2)/dr / Lambda] phi,

with phi(r1) = phi(r2) = 0.  Multiplying through by Lambda and writing
D = Lambda^2 + k^2 eps^2 b^2 gives r (phi'/r)' = q(r) phi with
q = k^2 [D + 4 omega^2 Lambda^2 / D + r d(omega^2)/dr] / D.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .errors import NumericFailure, WrongRegime
from .operators import RadialGrid
from .profiles import RadialProfile, eval_rayleigh


@dataclass
class ModeSolution:
    k: int
    lam: float
    r: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    fields: dict
    roots: list = field(default_factory=list)

    @property
    def n_roots(self) -> int:
        return len(self.roots)

    def table(self):
        """Rows (r, phi, u_r, u_theta, u_z, B_theta)."""
        f = self.fields
        return np.column_stack([self.r, self.phi, f["u_r"], f["u_theta"], f["u_z"],
                                f["B_theta"]])


def _field_constant(p: RadialProfile, g: RadialGrid | None = None) -> float:
    x = g.nodes if g is not None else np.linspace(p.r1, p.r2, 201)
    b = np.asarray(p.b(x), float)
    if np.ptp(b) > 1e-12 * np.abs(b).max() or np.any(np.abs(p.db(x)) > 1e-12):
        raise WrongRegime("shooting needs a constant field shape b; "
                          "use the generator spectrum (linsim) for variable b")
    return float(b[0])


def spectral_coefficient(p: RadialProfile, k: int, lam, r, b0: float = 1.0):
    """q(r, Lambda) in r (phi'/r)' = q phi."""
    lam = np.asarray(lam, float)
    D = lam * lam + (k * p.eps * b0)**2
    return k * k * (D + 4.0 * p.omega2(r) * lam * lam / D + r * p.domega2(r)) / D


def _integrate(p: RadialProfile, k: int, lam, b0: float, r_eval=None, rtol=1e-10, atol=1e-14):
    """Integrate (phi, z = phi'/r) from r1 with phi = 0, phi' = 1 for a batch of Lambda."""
    lam = np.atleast_1d(np.asarray(lam, float))
    m = lam.size

    def rhs(r, y):
        phi, z = y[:m], y[m:]
        return np.concatenate([r * z, spectral_coefficient(p, k, lam, r, b0) * phi / r])

    y0 = np.concatenate([np.zeros(m), np.full(m, 1.0 / p.r1)])
    sol = solve_ivp(rhs, (p.r1, p.r2), y0, method="RK45", rtol=rtol, atol=atol,
                    t_eval=r_eval)
    if sol.status != 0:
        raise NumericFailure("shooting integration failed: %s" % sol.message)
    return sol, m


def shoot_residual(p: RadialProfile, g: RadialGrid, k: int, lam, rtol: float = 1e-10):
    """phi(r2)/max|phi| for the initial-value solution at growth rate(s) lam."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if np.any(np.asarray(lam) <= 0):
        raise ValueError("growth rate must be positive")
    b0 = _field_constant(p, g)
    sol, m = _integrate(p, k, lam, b0, r_eval=g.nodes, rtol=rtol)
    phi = sol.y[:m]
    res = phi[:, -1] / np.max(np.abs(phi), axis=1)
    return float(res[0]) if np.ndim(lam) == 0 else res


def default_lambda_hi(p: RadialProfile, g: RadialGrid, k: int) -> float:
    x = g.nodes
    ups = eval_rayleigh(p, x)
    return float(np.sqrt(max(0.0, np.max(-ups)) + 4.0 * np.max(p.omega2(x)))
                 + k * abs(p.eps) * np.max(np.abs(p.b(x))))


def reconstruct_fields(p: RadialProfile, k: int, lam: float, r, phi, dphi, b0: float = 1.0):
    """Velocity and azimuthal field amplitudes of the normal mode.

    u_r, u_theta, phi carry cos(kz); u_z, B_theta carry sin(kz).
    """
    eps = p.eps
    u_r = lam * phi / (eps * r * b0)
    u_z = -lam * (dphi / r) / (eps * b0 * k)
    # lam u_t - eps b k B = -(u_r/r)(r^2 omega)';  eps b k u_t + lam B = -k omega' phi
    s = -u_r * (2.0 * p.omega(r) + r * p.domega(r))
    t = -k * p.domega(r) * phi
    a = eps * b0 * k
    det = lam * lam + a * a
    u_t = (lam * s + a * t) / det
    B_t = (lam * t - a * s) / det
    return {"u_r": u_r, "u_theta": u_t, "u_z": u_z, "B_theta": B_t}


def mode_residuals(p: RadialProfile, mode: ModeSolution, b0: float = 1.0):
    """Relative residuals of the linearized momentum/induction rows.

    The pressure is taken from the axial momentum row; the radial momentum row
    is then an independent check of the reduction to the phi equation.
    """
    k, lam, eps, r = mode.k, mode.lam, p.eps, mode.r
    f = mode.fields
    phi, z = mode.phi, mode.dphi / r
    dz = spectral_coefficient(p, k, lam, r, b0) * phi / r
    a = eps * b0 * k
    # axial row: lam u_z = eps b k phi'/r + k W  ->  W
    W = (lam * f["u_z"] - a * z) / k
    dW = (lam * (-lam * dz / (eps * b0 * k)) - a * dz) / k
    radial = lam * f["u_r"] + a * k * phi / r - 2.0 * p.omega(r) * f["u_theta"] + dW
    scale_r = np.max(np.abs(np.column_stack([lam * f["u_r"], a * k * phi / r,
                                             2.0 * p.omega(r) * f["u_theta"], dW])))
    theta = (lam * f["u_theta"] - a * f["B_theta"]
             + f["u_r"] * (2.0 * p.omega(r) + r * p.domega(r)))
    induct = lam * f["B_theta"] + a * f["u_theta"] + k * p.domega(r) * phi
    flux = lam * phi - eps * r * b0 * f["u_r"]
    # divergence (1/r)(r u_r)' + k u_z with (r u_r)' = lam r z/(eps b)
    div = lam * z / (eps * b0) + k * f["u_z"]
    sc = max(np.abs(lam * f["u_r"]).max(), 1e-300)
    return {
        "radial": float(np.max(np.abs(radial)) / scale_r),
        "azimuthal": float(np.max(np.abs(theta)) / sc),
        "induction": float(np.max(np.abs(induct)) / sc),
        "flux": float(np.max(np.abs(flux)) / max(np.abs(lam * phi).max(), 1e-300)),
        "divergence": float(np.max(np.abs(div)) / sc),
        "pressure": W,
    }


def find_growth_rate(p: RadialProfile, g: RadialGrid, k: int, lambda_hi: float | None = None,
                     n_scan: int = 400, rtol: float = 1e-10):
    """Largest growth rate Lambda in (1e-6 lambda_hi, lambda_hi] for mode k, or None."""
    b0 = _field_constant(p, g)
    if lambda_hi is None:
        lambda_hi = default_lambda_hi(p, g, k)
    if not lambda_hi > 0:
        raise ValueError("lambda_hi must be positive")
    lams = np.geomspace(1e-6 * lambda_hi, lambda_hi, n_scan + 1)[1:]
    res = shoot_residual(p, g, k, lams, rtol=rtol)
    flips = np.flatnonzero(np.sign(res[:-1]) * np.sign(res[1:]) < 0)
    if flips.size == 0:
        return None
    roots = [float(np.sqrt(lams[i] * lams[i + 1])) for i in flips[::-1]]
    j = flips[-1]
    lo, hi = lams[j], lams[j + 1]
    f = lambda x: shoot_residual(p, g, k, x, rtol=rtol)
    lam = optimize.brentq(f, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=200)
    roots[0] = float(lam)
    if lam > 0.99 * lambda_hi:
        warnings.warn("growth rate within 1%% of lambda_hi=%g; enlarge the scan" % lambda_hi)
    sol, _ = _integrate(p, k, lam, b0, r_eval=g.nodes, rtol=rtol)
    phi, z = sol.y[0], sol.y[1]
    s = 1.0 / phi[np.argmax(np.abs(phi))]
    phi, dphi = phi * s, z * g.nodes * s
    phi[0] = 0.0
    fields = reconstruct_fields(p, k, lam, g.nodes, phi, dphi, b0)
    return ModeSolution(k=k, lam=float(lam), r=g.nodes.copy(), phi=phi, dphi=dphi,
                        fields=fields, roots=roots)


def max_growth_rate(p: RadialProfile, g: RadialGrid, k_range):
    """(k_star, mode) maximizing Lambda over k_range; (None, None) if all stable.

    Constant b uses shooting; variable b falls back to the generator spectrum,
    in which case the mode carries only the discrete phi eigenvector.
    """
    try:
        _field_constant(p, g)
        shooting = True
    except WrongRegime:
        shooting = False
    best = (None, None)
    for k in k_range:
        if shooting:
            m = find_growth_rate(p, g, k)
        else:
            m = _generator_mode(p, g, k)
        if m is not None and (best[1] is None or m.lam > best[1].lam):
            best = (k, m)
    return best


def _generator_mode(p: RadialProfile, g: RadialGrid, k: int):
    from .linsim import assemble_generator, generator_spectrum

    gen = assemble_generator(p, g, k)
    spec = generator_spectrum(gen)
    if not spec.unstable.size:
        return None
    lam = float(spec.unstable[0].real)
    x = spec.top_vector
    st = gen.unpack(x)
    phi = np.real(st.phi)
    s = 1.0 / phi[np.argmax(np.abs(phi))]
    nan = np.full_like(g.nodes, np.nan)
    fields = {"u_r": np.real(st.u_r) * s, "u_theta": np.real(st.u_theta) * s,
              "u_z": nan, "B_theta": nan}
    return ModeSolution(k=k, lam=lam, r=g.nodes.copy(), phi=phi * s, dphi=nan,
                        fields=fields, roots=[float(v.real) for v in spec.unstable])


def escape_time(lam: float, theta: float, delta: float) -> float:
    """T with theta = delta exp(lam T)."""
    if not (0 < delta < theta):
        raise ValueError("need 0 < delta < theta")
    if not lam > 0:
        raise ValueError("growth rate must be positive")
    return float(np.log(theta / delta) / lam)
