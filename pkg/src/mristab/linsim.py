"""Per-mode linearized MHD generator, its spectrum, and RK4 time stepping.

Real "twisted" coordinates are used internally: with fields proportional to
e^{ikz}, write u_z = -i uz', B_theta = -i Bt'.  Then the system for
(u_r, u_theta, uz', phi, Bt') has real coefficients (the cos/sin form) and
the divergence reads (1/r)(r u_r)' + k uz' = 0.

Staggering: u_r and phi on interior nodes, u_theta and B_theta on all nodes,
u_z on cell midpoints.  Node weights are r times trapezoid lengths, midpoint
weights r_mid*h.  Writing w = u_theta + (omega'/(eps b)) phi, the discrete
system is

    d/dt (w, phi)          = B P u2,
    d/dt (u_r, u_z, B_th)  = -P M2^{-1} B^T Lmat (w, phi),

with Lmat = diag(W, K_k), K_k the L_k form (nodal potential quadrature) and
P the M2-orthogonal (Leray) projection onto discretely divergence-free
(u_r, u_z).  This makes the generator exactly antisymmetric with respect to
the quadratic form diag(Lmat, M2), and the nonzero spectrum comes from the
symmetric pencil (-B^T Lmat B, M2) restricted to divergence-free fields.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import NumericFailure
from .operators import RadialGrid, assemble_Lk, stiffness, weighted_mass
from .profiles import RadialProfile, eval_rayleigh


# ---------------------------------------------------------------------------
# staggered grid pieces and Leray projection

class Staggered:
    """Weights, discrete divergence and pressure solver for one (grid, k)."""

    def __init__(self, g: RadialGrid, k: int):
        if k == 0:
            raise ValueError("projection needs k != 0")
        self.g, self.k = g, k
        x, h = g.nodes, g.h
        self.r = x
        self.W = x * g.dual_lengths()
        self.Wr = self.W[1:-1]
        self.Wz = g.mid * h
        # pressure matrix S = G Wr^{-1} G^T + k^2 Wz with G = Wz D
        n = g.n
        ri = x[1:-1]**2 / self.Wr
        diag = k * k * self.Wz
        diag[:-1] += ri
        diag[1:] += ri
        ab = np.zeros((2, n))
        ab[0, 1:] = -ri
        ab[1] = diag
        try:
            self._chol = linalg.cholesky_banded(ab)
        except linalg.LinAlgError as exc:
            raise NumericFailure("pressure matrix is singular: %s" % exc) from exc

    def G(self, a):
        """Wz * D a for interior values a (midpoint output)."""
        ra = self.r[1:-1, None] * a if a.ndim == 2 else self.r[1:-1] * a
        out = np.zeros((self.g.n,) + a.shape[1:], dtype=np.result_type(a, float))
        out[:-1] += ra
        out[1:] -= ra
        return out

    def GT(self, y):
        """Transpose of G: midpoint values to interior nodes."""
        r = self.r[1:-1, None] if y.ndim == 2 else self.r[1:-1]
        return r * (y[:-1] - y[1:])

    def div(self, a, y):
        """Discrete (1/r)(r a)' + k y on midpoints."""
        wz = self.Wz[:, None] if y.ndim == 2 else self.Wz
        return self.G(a) / wz + self.k * y

    def pressure(self, a, y):
        wz = self.Wz[:, None] if y.ndim == 2 else self.Wz
        rhs = -wz * self.div(a, y)
        return linalg.cho_solve_banded((self._chol, False), rhs)

    def project(self, a, y):
        """Leray projection: subtract the discrete gradient of the pressure."""
        p = self.pressure(a, y)
        wr = self.Wr[:, None] if a.ndim == 2 else self.Wr
        return a + self.GT(p) / wr, y + self.k * p

    def metric_r(self):
        """Dense Wr + D^T Wz D / k^2: kinetic metric of u_r with u_z slaved."""
        n = self.g.n
        Gm = np.zeros((n, n - 1))
        idx = np.arange(n - 1)
        Gm[idx, idx] = self.r[1:-1]
        Gm[idx + 1, idx] = -self.r[1:-1]
        return np.diag(self.Wr) + (Gm.T / self.Wz) @ Gm / self.k**2


def project_divfree(g: RadialGrid, k: int, u_r, u_z):
    """Leray projection of e^{ikz} amplitudes (u_r on nodes, u_z on midpoints).

    Solves (1/r)(r p')' - k^2 p = (1/r)(r u_r)' + i k u_z with Neumann-type
    ends implied by u_r = 0, and returns (u_r - p', u_z - i k p).
    """
    st = Staggered(g, k)
    u_r = np.asarray(u_r, complex)
    a, y = st.project(u_r[1:-1], 1j * np.asarray(u_z, complex))
    out = np.zeros_like(u_r)
    out[1:-1] = a
    return out, -1j * y


def divergence(g: RadialGrid, k: int, u_r, u_z):
    st = Staggered(g, k)
    u_r = np.asarray(u_r, complex)
    return st.div(u_r[1:-1], 1j * np.asarray(u_z, complex))


def discrete_gradient(g: RadialGrid, k: int, q):
    """(d/dr q, i k q) for midpoint samples q, consistent with project_divfree."""
    st = Staggered(g, k)
    q = np.asarray(q, complex)
    out = np.zeros(g.n + 1, complex)
    out[1:-1] = -st.GT(q) / st.Wr
    return out, 1j * k * q


# ---------------------------------------------------------------------------
# states

@dataclass
class LinearState:
    k: int
    u_r: np.ndarray
    u_theta: np.ndarray
    u_z: np.ndarray
    phi: np.ndarray
    B_theta: np.ndarray

    def scaled(self, c):
        return LinearState(self.k, c * self.u_r, c * self.u_theta, c * self.u_z,
                           c * self.phi, c * self.B_theta)


@dataclass
class Spectrum:
    eigenvalues: np.ndarray
    unstable: np.ndarray
    pencil_values: np.ndarray
    top_vector: np.ndarray | None = None


# ---------------------------------------------------------------------------
# generators

class Generator:
    """Discretized per-k generator acting on stacked real state vectors."""

    kind = "base"

    def __init__(self, p: RadialProfile, g: RadialGrid, k: int):
        self.profile, self.grid, self.k = p, g, k
        self.st = Staggered(g, k)
        self._matrix = None
        self._form = None

    # subclasses define: layout, rhs(x), pencil(), lift(u2red, lam), form_apply(x)
    @property
    def dim(self) -> int:
        return max(s.stop for s in self.layout.values())

    def apply(self, x):
        return self.rhs(np.asarray(x))

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = self.rhs(np.eye(self.dim))
        return self._matrix

    @property
    def stacked_matrix(self) -> np.ndarray:
        """Block form acting on (Re, Im) of a complex state vector."""
        return np.kron(np.eye(2), self.matrix)

    @property
    def form(self) -> np.ndarray:
        if self._form is None:
            self._form = self.form_apply(np.eye(self.dim))
        return self._form

    def quad(self, x) -> float:
        x = np.asarray(x)
        return float(np.real(np.vdot(x, self.form_apply(x))))

    def project_state(self, x):
        x = np.array(x)
        a, y = self.st.project(x[self.layout["u_r"]], x[self.layout["u_z"]])
        x[self.layout["u_r"]] = a
        x[self.layout["u_z"]] = y
        return x


class MHDGenerator(Generator):
    kind = "mhd"

    def __init__(self, p: RadialProfile, g: RadialGrid, k: int):
        if p.eps == 0:
            raise ZeroDivisionError("generator is undefined for field strength eps (ε) = 0")
        super().__init__(p, g, k)
        n, x, eps = g.n, g.nodes, p.eps
        self.layout = {"u_r": slice(0, n - 1), "u_theta": slice(n - 1, 2 * n),
                       "u_z": slice(2 * n, 3 * n), "phi": slice(3 * n, 4 * n - 1),
                       "B_theta": slice(4 * n - 1, 5 * n)}
        b = p.b(x)
        self.om = p.omega(x)
        self.shear = (2.0 * self.om + x * p.domega(x))[1:-1]   # (r^2 omega)'/r
        self.c = p.domega(x) / (eps * b)                      # omega'/(eps b)
        self.alf = eps * b * k                                # eps b k
        self.fac = (eps * x * b)[1:-1]                        # eps r b
        self.K = assemble_Lk(p, g, k, quadrature="nodal")
        self.Hmag = stiffness(g) + weighted_mass(g, lambda r: k * k / r, "nodal")

    def _col(self, v, x):
        return v[:, None] if x.ndim == 2 else v

    def _w(self, x):
        L = self.layout
        w = np.array(x[L["u_theta"]], dtype=np.result_type(x, float))
        w[1:-1] += self._col(self.c[1:-1], x) * x[L["phi"]]
        return w

    def rhs(self, x):
        L, cl = self.layout, lambda v: self._col(v, x)
        a, _ = self.st.project(x[L["u_r"]], x[L["u_z"]])
        w = self._w(x)
        phi, B = x[L["phi"]], x[L["B_theta"]]
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        du_t = cl(self.alf) * B
        du_t[1:-1] -= cl(self.shear) * a
        out[L["u_theta"]] = du_t
        out[L["phi"]] = cl(self.fac) * a
        out[L["B_theta"]] = -cl(self.alf) * w
        pre = cl(2.0 * self.om[1:-1]) * w[1:-1] - cl(self.fac / self.st.Wr) * self.K.matvec(phi)
        da, dy = self.st.project(pre, np.zeros_like(x[L["u_z"]]))
        out[L["u_r"]] = da
        out[L["u_z"]] = dy
        return out

    def form_apply(self, x):
        L, cl = self.layout, lambda v: self._col(v, x)
        st = self.st
        w = self._w(x)
        Ww = cl(st.W) * w
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        out[L["u_theta"]] = Ww
        out[L["phi"]] = self.K.matvec(x[L["phi"]]) + cl(self.c[1:-1]) * Ww[1:-1]
        out[L["u_r"]] = cl(st.Wr) * x[L["u_r"]]
        out[L["u_z"]] = cl(st.Wz) * x[L["u_z"]]
        out[L["B_theta"]] = cl(st.W) * x[L["B_theta"]]
        return out

    def norm2(self, x) -> float:
        """Weighted L^2 norm squared of (u, B); B_r, B_z come from phi."""
        L, st = self.layout, self.st
        s = (np.sum(st.Wr * np.abs(x[L["u_r"]])**2) + np.sum(st.W * np.abs(x[L["u_theta"]])**2)
             + np.sum(st.Wz * np.abs(x[L["u_z"]])**2) + np.sum(st.W * np.abs(x[L["B_theta"]])**2))
        return float(s + self.Hmag.quad(x[L["phi"]]))

    def pencil(self):
        """Symmetric pencil (A, M) on (u_r, B_theta) whose eigenvalues are Lambda^2."""
        n, st = self.grid.n, self.st
        Kd = self.K.dense()
        A = np.zeros((2 * n, 2 * n))
        om2 = 2.0 * self.om[1:-1]
        A[:n - 1, :n - 1] = -(np.diag(om2 * om2 * st.Wr) + self.fac[:, None] * Kd * self.fac[None, :])
        Wa = st.W * self.alf
        idx = np.arange(n - 1)
        A[idx, n - 1 + idx + 1] = om2 * Wa[1:-1]
        A[n - 1 + idx + 1, idx] = om2 * Wa[1:-1]
        A[n - 1:, n - 1:] = -np.diag(st.W * self.alf**2)
        M = np.zeros_like(A)
        M[:n - 1, :n - 1] = st.metric_r()
        M[n - 1:, n - 1:] = np.diag(st.W)
        return A, M

    def lift(self, v, lam):
        """Full state of the eigenvector with eigenvalue lam from pencil vector v."""
        n, L = self.grid.n, self.layout
        a, B = v[:n - 1], v[n - 1:]
        x = np.zeros(self.dim, dtype=np.result_type(v, lam))
        x[L["u_r"]] = a
        x[L["u_z"]] = -self.st.G(a) / self.st.Wz / self.k
        x[L["B_theta"]] = B
        w = self.alf * B
        w[1:-1] -= 2.0 * self.om[1:-1] * a
        w = w / lam
        phi = self.fac * a / lam
        x[L["phi"]] = phi
        ut = w.copy()
        ut[1:-1] -= self.c[1:-1] * phi
        x[L["u_theta"]] = ut
        return x

    def pack(self, s: LinearState):
        L = self.layout
        x = np.zeros(self.dim, complex)
        x[L["u_r"]] = s.u_r[1:-1]
        x[L["u_theta"]] = s.u_theta
        x[L["u_z"]] = 1j * np.asarray(s.u_z)
        x[L["phi"]] = s.phi[1:-1]
        x[L["B_theta"]] = 1j * np.asarray(s.B_theta)
        return x

    def unpack(self, x) -> LinearState:
        L, n = self.layout, self.grid.n
        x = np.asarray(x, complex)
        ur = np.zeros(n + 1, complex)
        ur[1:-1] = x[L["u_r"]]
        ph = np.zeros(n + 1, complex)
        ph[1:-1] = x[L["phi"]]
        return LinearState(self.k, ur, x[L["u_theta"]].copy(), -1j * x[L["u_z"]],
                           ph, -1j * x[L["B_theta"]])


class EulerGenerator(Generator):
    """Linearized Euler (b = 0) per mode k: state (u_theta, u_r, u_z)."""

    kind = "euler"

    def __init__(self, p: RadialProfile, g: RadialGrid, k: int):
        super().__init__(p, g, k)
        n, x = g.n, g.nodes
        self.layout = {"u_theta": slice(0, n - 1), "u_r": slice(n - 1, 2 * n - 2),
                       "u_z": slice(2 * n - 2, 3 * n - 2)}
        self.om2 = 2.0 * p.omega(x)[1:-1]
        self.shear = (2.0 * p.omega(x) + x * p.domega(x))[1:-1]
        self.ups = eval_rayleigh(p, x)[1:-1]

    def rhs(self, x):
        L = self.layout
        cl = (lambda v: v[:, None]) if x.ndim == 2 else (lambda v: v)
        a, _ = self.st.project(x[L["u_r"]], x[L["u_z"]])
        out = np.zeros_like(x, dtype=np.result_type(x, float))
        out[L["u_theta"]] = -cl(self.shear) * a
        da, dy = self.st.project(cl(self.om2) * x[L["u_theta"]], np.zeros_like(x[L["u_z"]]))
        out[L["u_r"]] = da
        out[L["u_z"]] = dy
        return out

    def form_apply(self, x):
        raise NotImplementedError("the Euler generator carries no conserved form here")

    def norm2(self, x) -> float:
        L, st = self.layout, self.st
        return float(np.sum(st.Wr * np.abs(x[L["u_r"]])**2)
                     + np.sum(st.Wr * np.abs(x[L["u_theta"]])**2)
                     + np.sum(st.Wz * np.abs(x[L["u_z"]])**2))

    def pencil(self):
        return -np.diag(self.st.Wr * self.ups), self.st.metric_r()

    def lift(self, a, lam):
        L = self.layout
        x = np.zeros(self.dim, dtype=np.result_type(a, lam))
        x[L["u_r"]] = a
        x[L["u_z"]] = -self.st.G(a) / self.st.Wz / self.k
        x[L["u_theta"]] = -self.shear * a / lam
        return x


def assemble_generator(p: RadialProfile, g: RadialGrid, k: int) -> MHDGenerator:
    return MHDGenerator(p, g, k)


def generator_spectrum(gen: Generator, method: str = "pencil", tol: float = 1e-10) -> Spectrum:
    """Eigenvalues of the generator, unstable ones sorted by decreasing real part.

    method='pencil' uses the exact block identity: nonzero eigenvalues are
    +-sqrt(mu) for mu in the spectrum of the symmetric pencil, the remaining
    ones are zero (the gradient directions removed by the projection).
    method='dense' runs a nonsymmetric eigensolve of the full matrix.
    """
    if method == "dense":
        ev = np.linalg.eigvals(gen.matrix)
        scale = max(np.abs(ev).max(), 1e-300)
        uns = np.sort_complex(ev[ev.real > tol * scale])[::-1]
        uns = uns[np.argsort(-uns.real, kind="stable")]
        return Spectrum(ev, uns, np.array([]))
    A, M = gen.pencil()
    try:
        mu, V = linalg.eigh(A, M)
    except linalg.LinAlgError as exc:
        raise NumericFailure("pencil eigensolve failed: %s" % exc) from exc
    root = np.sqrt(mu.astype(complex))
    nz = gen.dim - 2 * mu.size
    ev = np.concatenate([root, -root, np.zeros(nz, complex)])
    scale = max(np.abs(mu).max(), 1e-300)
    pos = mu > tol * scale
    uns = np.sort(np.sqrt(mu[pos]))[::-1].astype(complex)
    top = None
    if pos.any():
        j = int(np.argmax(mu))
        top = gen.lift(V[:, j], float(np.sqrt(mu[j])))
    return Spectrum(ev, uns, mu, top)


def max_growth(gen: Generator) -> float:
    """Largest Lambda^2 of the generator pencil (may be negative)."""
    A, M = gen.pencil()
    return float(linalg.eigh(A, M, eigvals_only=True, subset_by_index=[A.shape[0] - 1] * 2)[0])


def quadratic_form(gen: Generator, state) -> float:
    x = gen.pack(state) if isinstance(state, LinearState) else np.asarray(state)
    return gen.quad(x)


# ---------------------------------------------------------------------------
# time stepping

def step_rk4(gen, x, dt: float):
    """Classical RK4 step of dx/dt = G x, then re-projection of (u_r, u_z).

    gen may be a Generator or a plain square matrix.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    if isinstance(gen, np.ndarray):
        f = lambda v: gen @ v
        proj = lambda v: v
    else:
        f, proj = gen.apply, gen.project_state
    k1 = f(x)
    k2 = f(x + 0.5 * dt * k1)
    k3 = f(x + 0.5 * dt * k2)
    k4 = f(x + dt * k3)
    return proj(x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))


@dataclass
class SimReport:
    times: np.ndarray
    norms: np.ndarray
    form_values: np.ndarray
    fitted_rate: float
    fit_window: tuple
    stopped_early: bool = False
    final: np.ndarray | None = field(default=None, repr=False)

    @property
    def drift(self) -> float:
        """max |form(t) - form(0)| / max(|form(0)|, norm(0)^2)."""
        if self.form_values.size == 0 or np.all(np.isnan(self.form_values)):
            return float("nan")
        f0 = self.form_values[0]
        return float(np.max(np.abs(self.form_values - f0)) / max(abs(f0), self.norms[0]**2))

    def rows(self):
        return np.column_stack([self.times, self.norms, self.form_values, np.log(self.norms)])

    def summary(self) -> dict:
        return {"fitted_rate": float(self.fitted_rate),
                "fit_window": [float(self.fit_window[0]), float(self.fit_window[1])],
                "relative_form_drift": self.drift,
                "stopped_early": bool(self.stopped_early),
                "n_samples": int(self.times.size),
                "final_time": float(self.times[-1])}


def fit_rate(times, norms, fit_from: float | None = None):
    """Least-squares slope of log norm after the norm first grew 10x."""
    ln = np.log(norms)
    if fit_from is None:
        hit = np.flatnonzero(norms >= 10.0 * norms[0])
        i0 = int(hit[0]) if hit.size and hit[0] < times.size - 2 else 0
    else:
        i0 = int(np.searchsorted(times, fit_from))
    t, y = times[i0:], ln[i0:]
    slope = np.polyfit(t, y, 1)[0] if t.size >= 2 else 0.0
    return float(slope), (float(t[0]), float(t[-1]))


def run_simulation(gen: Generator, init, T: float, dt: float, record_every: int = 1,
                   fit_from: float | None = None, overflow: float = 1e150) -> SimReport:
    """Fixed-step RK4 evolution with norm and form monitoring."""
    x = gen.pack(init) if isinstance(init, LinearState) else np.array(init)
    x = gen.project_state(x)
    nsteps = int(round(T / dt))
    has_form = isinstance(gen, MHDGenerator)
    ts, ns, fs = [0.0], [np.sqrt(gen.norm2(x))], [gen.quad(x) if has_form else np.nan]
    early = False
    for i in range(1, nsteps + 1):
        x = step_rk4(gen, x, dt)
        if i % record_every == 0 or i == nsteps:
            nv = np.sqrt(gen.norm2(x))
            if not np.isfinite(nv) or nv > overflow:
                early = True
                break
            ts.append(i * dt)
            ns.append(nv)
            fs.append(gen.quad(x) if has_form else np.nan)
    ts, ns, fs = np.array(ts), np.array(ns), np.array(fs)
    rate, win = fit_rate(ts, ns, fit_from)
    return SimReport(ts, ns, fs, rate, win, early, x)


def random_state(gen: Generator, seed: int = 0, n_modes: int = 8, complex_: bool = True):
    """Smooth random state (sums of low sine modes), projected to be divergence-free."""
    rng = np.random.default_rng(seed)
    x = np.zeros(gen.dim, complex)
    r = gen.grid.nodes
    s = (r - r[0]) / (r[-1] - r[0])
    for name, sl in gen.layout.items():
        m = sl.stop - sl.start
        pts = {gen.grid.n - 1: s[1:-1], gen.grid.n + 1: s, gen.grid.n: 0.5 * (s[1:] + s[:-1])}[m]
        v = np.zeros(m, complex)
        for j in range(1, n_modes + 1):
            c = rng.standard_normal() + (1j * rng.standard_normal() if complex_ else 0.0)
            v += c / j * np.sin(j * np.pi * pts)
        x[sl] = v
    return gen.project_state(x)
