"""Linear finite elements for the radial forms L_k and L-hat.

Functions are expanded in hat functions on the interior nodes of a radial
grid (Dirichlet at both ends), so every form is a symmetric tridiagonal
matrix.  The derivative part int (1/r) phi' psi' dr is integrated exactly
per cell; potential terms use 2-point Gauss quadrature (or nodal quadrature
when a lumped potential is requested).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import IncompleteCount, InvalidProfile, NumericFailure
from .profiles import RadialProfile, curvature_term

_GAUSS = np.array([-1.0, 1.0]) / np.sqrt(3.0)


@dataclass(frozen=True)
class RadialGrid:
    nodes: np.ndarray
    spacing: str = "uniform"

    def __post_init__(self):
        x = np.asarray(self.nodes, float)
        if x.ndim != 1 or x.size < 17:
            raise InvalidProfile("grid needs at least 16 cells")
        if np.any(np.diff(x) <= 0):
            raise InvalidProfile("grid nodes must be strictly increasing")
        object.__setattr__(self, "nodes", x)

    @property
    def n(self) -> int:
        """Number of cells."""
        return self.nodes.size - 1

    @property
    def h(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.nodes[1:] + self.nodes[:-1])

    @property
    def r1(self) -> float:
        return float(self.nodes[0])

    @property
    def r2(self) -> float:
        return float(self.nodes[-1])

    def gauss_points(self):
        """Quadrature points (n, 2) and weights (n, 2) of 2-point Gauss per cell."""
        h = self.h[:, None]
        x = self.mid[:, None] + 0.5 * h * _GAUSS[None, :]
        return x, 0.5 * h * np.ones((1, 2))

    def dual_lengths(self) -> np.ndarray:
        """Trapezoid weights (h_{i-1} + h_i)/2 at every node."""
        h = self.h
        d = np.zeros(self.nodes.size)
        d[:-1] += 0.5 * h
        d[1:] += 0.5 * h
        return d


def make_grid(r1: float, r2: float, n: int = 400, spacing: str = "uniform") -> RadialGrid:
    if n < 16:
        raise InvalidProfile("grid needs n >= 16 cells, got %d" % n)
    if spacing == "uniform":
        x = np.linspace(r1, r2, n + 1)
    elif spacing == "geometric":
        x = np.geomspace(r1, r2, n + 1)
    else:
        raise InvalidProfile("unknown spacing %r" % spacing)
    x[0], x[-1] = r1, r2
    return RadialGrid(x, spacing)


def grid_for(p: RadialProfile, n: int = 400, spacing: str = "uniform") -> RadialGrid:
    return make_grid(p.r1, p.r2, n, spacing)


@dataclass(frozen=True)
class TridiagonalForm:
    diag: np.ndarray
    off: np.ndarray
    grid: RadialGrid
    k: int = 0
    label: str = ""

    @property
    def dim(self) -> int:
        return self.diag.size

    def dense(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def matvec(self, x):
        x = np.asarray(x)
        y = self.diag[:, None] * x if x.ndim == 2 else self.diag * x
        if x.ndim == 2:
            y[:-1] += self.off[:, None] * x[1:]
            y[1:] += self.off[:, None] * x[:-1]
        else:
            y[:-1] += self.off * x[1:]
            y[1:] += self.off * x[:-1]
        return y

    def quad(self, x) -> float:
        x = np.asarray(x)
        return float(np.real(np.vdot(x, self.matvec(x))))

    def __add__(self, other):
        return TridiagonalForm(self.diag + other.diag, self.off + other.off,
                               self.grid, max(self.k, other.k), self.label)

    def scaled(self, c):
        return TridiagonalForm(c * self.diag, c * self.off, self.grid, self.k, self.label)


@dataclass(frozen=True)
class Inertia:
    n_neg: int
    n_zero: int
    n_pos: int
    perturbed: bool = False

    @property
    def dim(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos


# ---------------------------------------------------------------------------
# assembly

def _from_cells(g: RadialGrid, cd, co, label, k=0) -> TridiagonalForm:
    """Assemble per-cell 2x2 blocks [[a, c], [c, d]] and drop the end nodes."""
    a, c, d = cd[0], co, cd[1]
    full = np.zeros(g.n + 1)
    full[:-1] += a
    full[1:] += d
    return TridiagonalForm(full[1:-1].copy(), c[1:-1].copy(), g, k, label)


def stiffness(g: RadialGrid) -> TridiagonalForm:
    """int (1/r) phi' psi' dr with the 1/r weight integrated exactly per cell."""
    x = g.nodes
    s = np.log(x[1:] / x[:-1]) / g.h**2
    return _from_cells(g, (s, s), -s, "stiffness")


def weighted_mass(g: RadialGrid, weight, quadrature: str = "gauss") -> TridiagonalForm:
    """int weight(r) phi psi dr for hat functions.

    quadrature='gauss' uses two Gauss points per cell; 'nodal' uses the
    trapezoid rule, which makes the matrix diagonal.
    """
    if quadrature == "nodal":
        w = np.asarray(weight(g.nodes), float) * g.dual_lengths()
        return TridiagonalForm(w[1:-1].copy(), np.zeros(g.n - 2), g, 0, "mass")
    x, wq = g.gauss_points()
    vals = np.asarray(weight(x), float) * wq
    h = g.h[:, None]
    left = (g.nodes[1:, None] - x) / h
    right = (x - g.nodes[:-1, None]) / h
    a = np.sum(vals * left * left, axis=1)
    d = np.sum(vals * right * right, axis=1)
    c = np.sum(vals * left * right, axis=1)
    return _from_cells(g, (a, d), c, "mass")


def metric(g: RadialGrid) -> TridiagonalForm:
    """Discrete H^r_mag inner product int (1/r)(|phi'|^2 + |phi|^2) dr."""
    f = stiffness(g) + weighted_mass(g, lambda r: 1.0 / r)
    return TridiagonalForm(f.diag, f.off, g, 0, "metric")


def _rotation_weight(p: RadialProfile):
    return lambda r: p.domega2(r) / p.b(r)**2


def assemble_Lk(p: RadialProfile, g: RadialGrid, k: int,
                quadrature: str = "gauss") -> TridiagonalForm:
    """<L_k phi, phi> = int (1/r)|phi'|^2 + (k^2/r)|phi|^2 + F r |phi|^2 dr."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if p.eps == 0:
        raise ZeroDivisionError("L_k is undefined for field strength eps (ε) = 0")
    e2 = p.eps**2
    pot = lambda r: (k * k / r + p.domega2(r) / (e2 * p.b(r)**2)
                     + curvature_term(p, r))
    f = stiffness(g) + weighted_mass(g, pot, quadrature)
    return TridiagonalForm(f.diag, f.off, g, k, "L%d" % k)


def assemble_Lhat(p: RadialProfile, g: RadialGrid, quadrature: str = "gauss") -> TridiagonalForm:
    """Form of -(1/r)(phi'/r)' + phi/r^2 + (b''/(r^2 b) - b'/(r^3 b)) phi."""
    pot = lambda r: 1.0 / r + curvature_term(p, r)
    f = stiffness(g) + weighted_mass(g, pot, quadrature)
    return TridiagonalForm(f.diag, f.off, g, 1, "Lhat")


def rotation_mass(p: RadialProfile, g: RadialGrid, quadrature: str = "gauss") -> TridiagonalForm:
    """int (d(omega^2)/dr / b^2) |phi|^2 dr."""
    return weighted_mass(g, _rotation_weight(p), quadrature)


# ---------------------------------------------------------------------------
# inertia

def _neg_pivots(d, e, shift, scale):
    """Negative pivots of LDL^T for tridiag(d, e) - shift*I."""
    n = d.size
    e2 = e * e
    cnt, zero, perturbed = 0, 0, False
    piv = d[0] - shift
    for i in range(n):
        if i > 0:
            piv = d[i] - shift - e2[i - 1] / piv
        if piv == 0.0:
            zero += 1
            perturbed = True
            piv = 1e-14 * scale
        if piv < 0:
            cnt += 1
    return cnt, zero, perturbed


def inertia(f: TridiagonalForm, zero_tol: float = 1e-10) -> Inertia:
    """Inertia of a symmetric tridiagonal form via LDL^T pivots.

    By Sylvester's law the number of negative pivots of A - s*I equals the
    number of eigenvalues below s.  Eigenvalues inside
    (-zero_tol, zero_tol)*scale, scale = max|diag|, are counted as zero.
    """
    if zero_tol < 0:
        raise ValueError("zero_tol must be nonnegative")
    d = np.asarray(f.diag, float)
    e = np.asarray(f.off, float)
    n = d.size
    scale = float(np.max(np.abs(d))) if n else 1.0
    scale = scale if scale > 0 else 1.0
    tol = zero_tol * scale
    if tol == 0:
        neg, zero, pert = _neg_pivots(d, e, 0.0, scale)
        return Inertia(neg, zero, n - neg - zero, pert)
    neg, _, p1 = _neg_pivots(d, e, -tol, scale)
    below, _, p2 = _neg_pivots(d, e, tol, scale)
    return Inertia(neg, below - neg, n - below, p1 or p2)


def positivity_certificate(p: RadialProfile, g: RadialGrid, k: int) -> bool:
    """Sufficient condition for the discrete L_k (Gauss quadrature) to be positive.

    int (1/r)|phi'|^2 >= (1/r2)(pi/L)^2 int |phi|^2 for piecewise linear phi,
    and the Gauss rule integrates |phi|^2 exactly, so a positive
    min(k^2/r + F r) + (pi/L)^2/r2 over quadrature points is a proof.
    """
    x, _ = g.gauss_points()
    pot = k * k / x + p.domega2(x) / (p.eps**2 * p.b(x)**2) + curvature_term(p, x)
    return bool(pot.min() + (np.pi / (g.r2 - g.r1))**2 / g.r2 > 0)


def unstable_mode_count(p: RadialProfile, g: RadialGrid, k_max_hint: int = 64):
    """Total unstable count 2*sum_k n^-(L_k) and the per-k list.

    The loop stops at the first k whose form has no negative direction and
    carries a positivity certificate, which then holds for all larger k.
    """
    per_k = []
    for k in range(1, k_max_hint + 1):
        cert = positivity_certificate(p, g, k)
        nn = 0 if cert else inertia(assemble_Lk(p, g, k)).n_neg
        per_k.append(nn)
        if cert:
            return 2 * sum(per_k), per_k
    raise IncompleteCount("no positivity certificate up to k=%d" % k_max_hint, per_k)


# ---------------------------------------------------------------------------
# generalized eigenproblems

def dense_pencil_top(A, B, m=1, largest=True):
    """Extreme eigenpairs of A x = mu B x, B positive definite."""
    n = A.shape[0]
    m = min(m, n)
    idx = [n - m, n - 1] if largest else [0, m - 1]
    try:
        w, v = linalg.eigh(A, B, subset_by_index=idx)
    except linalg.LinAlgError as exc:
        raise NumericFailure("generalized eigensolve failed: %s" % exc) from exc
    if largest:
        w, v = w[::-1], v[:, ::-1]
    return w, v


def _normalize_sign(v):
    v = np.array(v, float)
    for j in range(v.shape[1]):
        nz = np.flatnonzero(np.abs(v[:, j]) > 1e-14 * np.abs(v[:, j]).max())
        if nz.size and v[nz[0], j] < 0:
            v[:, j] *= -1
    return v


def eigen_extremes(f: TridiagonalForm, m: int = 1, metric_form: TridiagonalForm | None = None):
    """m smallest eigenpairs of K x = lam M x, M the H^r_mag metric.

    Eigenvectors are M-normalized with the first interior component positive.
    """
    if m > f.dim:
        warnings.warn("requested %d eigenpairs of a %d-dimensional form; clamped" % (m, f.dim))
        m = f.dim
    M = (metric_form or metric(f.grid)).dense()
    w, v = dense_pencil_top(f.dense(), M, m, largest=False)
    v = _normalize_sign(v)
    return [(float(w[j]), v[:, j]) for j in range(m)]
