"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line."""
import time

import numpy as np
import pytest
from scipy import linalg

from mristab.dispersion import DispersionInput, asymptotic_roots, dispersion_roots
from mristab.euler import (assemble_euler_generator, compare_small_field, euler_a1,
                           euler_lambda_k, rayleigh_classify)
from mristab.fixtures import (euler_well, gaussian_bump, increasing, keplerian,
                              rayleigh_sign_change, rigid)
from mristab.linsim import (MHDGenerator, generator_spectrum, max_growth, random_state,
                            run_simulation)
from mristab.modes import escape_time, find_growth_rate
from mristab.operators import (TridiagonalForm, assemble_Lhat, assemble_Lk, inertia,
                               make_grid, metric, positivity_certificate, rotation_mass,
                               unstable_mode_count)
from mristab.profiles import gaussian_field, make_keplerian, make_powerlaw, make_twoterm
from mristab.thresholds import (classify, classify_sweep, compute_B0, compute_eps_min,
                                geometric_sweep, kernel_limit_from_forms,
                                lowest_lhat_eigenvalue, tune_well, well_family)

RESULTS = {}


def record(n, ok, detail):
    line = "criterion %2d %s: %s" % (n, "PASS" if ok else "FAIL", detail)
    RESULTS["criterion %d" % n] = line
    print(line)
    return ok


def check(n, conds, detail):
    ok = all(bool(c) for c in conds)
    record(n, ok, detail)
    assert ok, detail


def test_criterion_01_headline_mri():
    t0 = time.perf_counter()
    g = make_grid(1.0, 2.0, 400)
    p = make_keplerian(1.0, 1.0, 2.0, 0.05)
    rs = rayleigh_classify(p, g)
    v = classify(p, g)
    dt = time.perf_counter() - t0
    check(1, [rs, not v.stable, dt < 1.0],
          "Rayleigh stable=%s, classify(eps=0.05) stable=%s (n_neg=%d), %.2fs"
          % (rs, v.stable, v.n_neg_L1, dt))


def test_criterion_02_sharp_threshold():
    t0 = time.perf_counter()
    g = make_grid(1.0, 2.0, 400)
    p = keplerian()
    eps = geometric_sweep(0.1, 1.0, 200)
    st = classify_sweep(p, g, eps)
    flips = np.flatnonzero(st[1:] != st[:-1])
    e2 = compute_eps_min(p, g).value
    b2 = compute_B0(p, g).value
    inside = flips.size == 1 and eps[flips[0]]**2 < e2 <= eps[flips[0] + 1]**2
    rel = abs(e2 / b2 - 1)
    dt = time.perf_counter() - t0
    check(2, [flips.size == 1, inside, rel <= 1e-10, dt < 30],
          "%d transition(s), eps_min^2=%.8f bracketed=%s, |eps_min^2/B0^2-1|=%.1e, %.1fs"
          % (flips.size, e2, inside, rel, dt))


def test_criterion_03_inertia_random_profiles():
    rng = np.random.default_rng(2024)
    mismatches, dims = 0, []
    for i in range(50):
        n = int(rng.integers(16, 62))
        eps = 10 ** rng.uniform(-2, 0.5)
        kind = i % 4
        if kind == 0:
            p = make_keplerian(rng.uniform(0.2, 5), 1, 2, eps)
        elif kind == 1:
            p = make_powerlaw(rng.uniform(0.5, 2), rng.uniform(-0.4, 1), rng.uniform(-4, 3),
                              1, 2, eps)
        elif kind == 2:
            p = make_twoterm(rng.uniform(-0.3, 1), rng.uniform(0.5, 3), 1, 2, eps)
        else:
            p = make_keplerian(1.0, 1, 2, eps, field=gaussian_field(
                rng.uniform(-0.8, 2), rng.uniform(1.2, 1.8), rng.uniform(0.05, 0.4)))
        f = assemble_Lk(p, make_grid(1, 2, n), int(rng.integers(0, 6)))
        dims.append(f.dim)
        ref = int(np.sum(np.linalg.eigvalsh(f.dense()) < 0))
        mismatches += inertia(f, zero_tol=0.0).n_neg != ref
    check(3, [mismatches == 0, max(dims) <= 60],
          "50 random profiles (dim %d..%d): %d mismatches vs dense eigvalsh"
          % (min(dims), max(dims), mismatches))


def test_criterion_04_mode_count_structure():
    g = make_grid(1.0, 2.0, 400)
    ok, parts = [], []
    # the Rayleigh-unstable fixture keeps negative directions up to k ~ 250
    for name, p, kmax in [("keplerian", keplerian(0.05), 64),
                          ("gaussian_bump", gaussian_bump(0.05), 64),
                          ("sign_change", rayleigh_sign_change(0.05), 400)]:
        total, per_k = unstable_mode_count(p, g, k_max_hint=kmax)
        K = len(per_k)
        ok += [all(a >= b for a, b in zip(per_k, per_k[1:])), per_k[-1] == 0,
               positivity_certificate(p, g, K), total % 2 == 0, total > 0]
        parts.append("%s total=%d K=%d" % (name, total, K))
    check(4, ok, "; ".join(parts))


def test_criterion_05_three_way_growth_rate():
    t0 = time.perf_counter()
    g = make_grid(1.0, 2.0, 800)
    p = keplerian(0.05)
    lam_s = find_growth_rate(p, g, 1).lam
    gen = MHDGenerator(p, g, 1)
    lam_g = generator_spectrum(gen).unstable[0].real
    rep = run_simulation(gen, random_state(gen, seed=0), 25 / lam_g, 0.01 / lam_g,
                         record_every=20)
    lam_t = rep.fitted_rate
    vals = [lam_s, lam_g, lam_t]
    worst = max(abs(a / b - 1) for a in vals for b in vals)
    dt = time.perf_counter() - t0
    check(5, [worst < 0.01, dt < 120],
          "shooting %.8f, generator %.8f, simulation %.8f; max pairwise rel %.1e; %.1fs"
          % (lam_s, lam_g, lam_t, worst, dt))


@pytest.fixture(scope="module")
def drift_setup():
    g = make_grid(1.0, 2.0, 100)
    gen = MHDGenerator(keplerian(0.05), g, 1)
    lam = float(np.sqrt(max_growth(gen)))
    x0 = random_state(gen, seed=0)
    T = 10 / lam

    def drift(c):
        return run_simulation(gen, x0, T, c / lam, record_every=max(1, int(0.1 / c))).drift

    return drift


def test_criterion_06_form_conservation(drift_setup):
    d_fine = drift_setup(1e-3)
    coarse = [drift_setup(c) for c in (0.16, 0.08, 0.04)]
    ratios = [coarse[0] / coarse[1], coarse[1] / coarse[2]]
    check(6, [d_fine <= 1e-6, min(ratios) >= 16],
          "drift %.1e at dt=1e-3/Lambda over T=10/Lambda; halving ratios %.1f, %.1f "
          "at dt=0.16->0.08->0.04/Lambda" % (d_fine, *ratios))


@pytest.mark.xfail(strict=True, reason="form drift at dt=1e-3/Lambda is at the roundoff "
                   "floor, so halving dt there cannot reduce it")
def test_criterion_06_halving_ratio_at_fine_step(drift_setup):
    a, b = drift_setup(1e-3), drift_setup(5e-4)
    ratio = a / b
    ok = 8 <= ratio <= 32
    line = ("criterion  6 %s (literal halving clause): drift %.1e -> %.1e at "
            "dt=1e-3 -> 5e-4 /Lambda, ratio %.2f (roundoff floor)"
            % ("PASS" if ok else "FAIL", a, b, ratio))
    print(line)
    RESULTS["criterion 6 literal"] = line
    assert ok


def test_criterion_07_real_paired_unstable_eigenvalues():
    g = make_grid(1.0, 2.0, 100)
    gens = []
    for p in (keplerian(0.05), rayleigh_sign_change(0.05), euler_well(0.05),
              gaussian_bump(0.05)):
        gens += [MHDGenerator(p, g, k) for k in (1, 3)]
    gens.append(assemble_euler_generator(euler_well(), g, 2))
    ok, n_uns = [], 0
    for gen in gens:
        S = gen.stacked_matrix
        nrm = np.linalg.norm(S, 2)
        ev = np.linalg.eigvals(S)
        tol = 1e-8 * nrm
        pos = ev[ev.real > tol]
        n_uns += pos.size
        ok.append(pos.size > 0)
        ok.append(np.all(np.abs(pos.imag) <= tol))
        ok.append(all(np.min(np.abs(ev + lam)) <= tol for lam in pos))
    check(7, ok, "%d generators, %d unstable eigenvalues (stacked real form), all real "
          "within 1e-8*|G| and mirrored" % (len(gens), n_uns))


def test_criterion_08_dispersion():
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        inp = DispersionInput(rng.uniform(1, 2), rng.uniform(-5, 5), rng.uniform(0, 3),
                              10 ** rng.uniform(-4, 1), rng.uniform(0.1, 50),
                              rng.uniform(0.1, 50))
        d = dispersion_roots(inp)
        a, b, c = d.coeffs
        res = np.abs((a * d.X + b) * d.X + c)
        worst = max(worst, float(np.max(res / (np.max(np.abs([a, b, c]))
                                               * np.maximum(1.0, d.X**2)))))
    p = keplerian()
    eps = np.geomspace(1e-3, 1e-2, 8)
    err = {"epicyclic": [], "mri": []}
    for e in eps:
        inp = DispersionInput.at(p.with_eps(e), 1.4, 2.0, 3.0)
        d = dispersion_roots(inp)
        epi, mri, _ = asymptotic_roots(inp)
        err["epicyclic"].append(abs(d.epicyclic - epi))
        err["mri"].append(abs(d.mri - mri))
    slopes = {k: np.polyfit(np.log(eps), np.log(v), 1)[0] for k, v in err.items()}
    check(8, [worst <= 1e-12] + [abs(s - 4) <= 0.3 for s in slopes.values()],
          "max scaled residual %.1e over 1000 inputs; asymptotic error slopes "
          "epicyclic %.3f, mri %.3f" % (worst, slopes["epicyclic"], slopes["mri"]))


def test_criterion_09_small_field_comparison():
    g = make_grid(1.0, 2.0, 400)
    eps = np.geomspace(1e-3, 1e-2, 5)
    kep = compare_small_field(keplerian(), g, 1, eps)
    well = compare_small_field(euler_well(), g, 1, eps)
    L2, l2 = well.comparisons[0][2], well.comparisons[0][3]
    rel = abs(L2 / l2 - 1)
    check(9, [kep.rayleigh_stable, abs(kep.slope - 1) <= 0.15,
              not well.rayleigh_stable, abs(well.slope - 1) <= 0.15, rel <= 0.02],
          "Rayleigh stable: slope of Lambda_k^2 vs eps^2 = %.4f; Rayleigh unstable: gap slope "
          "%.4f, |Lambda^2/lambda^2 - 1| = %.1e at eps=1e-3" % (kep.slope, well.slope, rel))


def test_criterion_10_euler_high_frequency_limit():
    g = make_grid(1.0, 2.0, 400)
    p = euler_well()
    a1 = euler_a1(p, g)
    ks = [1, 2, 4, 8, 16, 32, 64]
    lam = np.array([euler_lambda_k(p, g, k) for k in ks])
    check(10, [np.all(np.diff(lam) >= 0), np.all(lam <= a1), lam[-1] >= 0.95 * a1],
          "a1=%.6f, lambda_k^2/a1 = %s" % (a1, ", ".join("%.4f" % v for v in lam / a1)))


def test_criterion_11_polynomial_bound_for_stable_fixtures():
    g = make_grid(1.0, 2.0, 100)
    cases = [("increasing eps=0.5", MHDGenerator(increasing(0.5), g, 1)),
             ("rigid eps=0.05", MHDGenerator(rigid(0.05), g, 1)),
             ("keplerian eps=0.5", MHDGenerator(keplerian(0.5), g, 1)),
             ("keplerian euler", assemble_euler_generator(keplerian(), g, 1))]
    ok, parts = [], []
    for name, gen in cases:
        assert gen.kind == "euler" or classify(gen.profile, g).stable
        rep = run_simulation(gen, random_state(gen, seed=1), 200.0, 0.05, record_every=10)
        M = float(np.max(rep.norms / (rep.norms[0] * (1 + rep.times**2))))
        ok += [np.isfinite(M), M <= 100, rep.fitted_rate <= 1e-3]
        parts.append("%s M=%.2f rate=%.1e" % (name, M, rep.fitted_rate))
    check(11, ok, "; ".join(parts))


def richardson_limit(lhat, nmass, met, eps=(10.0, 20.0, 40.0)):
    """eps^2 (lambda_eps - 1) extrapolated to eps -> infinity."""
    M = met.dense()
    C = lhat.dense() - M
    N = nmass.dense()
    ys = []
    for e in eps:
        mu = linalg.eigh(-(N / e**2 + C), M, eigvals_only=True)
        lam = 1.0 / mu[np.argmin(np.abs(mu - 1.0))]
        ys.append(e**2 * (lam - 1.0))
    V = np.array([[1.0, e**-2, e**-4] for e in eps])
    return float(np.linalg.solve(V, ys)[0])


def test_criterion_12_kernel_perturbation_limit():
    g = make_grid(1.0, 2.0, 200)
    # field-shape families never create a kernel of L-hat
    lows = [lowest_lhat_eigenvalue(make_keplerian(1, 1, 2, 1.0, gaussian_field(c, 1.5, 0.1)), g)
            for c in (-0.99, -0.9, -0.5, 1.0, 10.0, 100.0)]
    ok = [min(lows) > 0]
    parts = ["min lowest L-hat eigenvalue over b_c family %.2e" % min(lows)]
    for name, p in [("increasing", increasing(1.0)), ("keplerian", keplerian(1.0))]:
        c0 = tune_well(p, g, 1.5, 0.1)
        lhat = well_family(p, g, c0, 1.5, 0.1)
        s, limit, _ = kernel_limit_from_forms(lhat, rotation_mass(p, g), metric(g))
        ext = richardson_limit(lhat, rotation_mass(p, g), metric(g))
        rel = abs(ext / limit - 1)
        ok.append(rel <= 0.10)
        parts.append("%s: closed form %.6f, extrapolated %.6f, rel %.1e" % (name, limit, ext, rel))
    check(12, ok, "; ".join(parts))


def test_criterion_13_escape_time():
    errs = []
    for lam in (0.05, 1.0, 3.0):
        for theta, delta in ((1.0, 1e-3), (0.5, 1e-6)):
            T = escape_time(lam, theta, delta)
            errs.append(abs(delta * np.exp(lam * T) / theta - 1))
            errs.append(abs(escape_time(lam, theta, delta / 2) - T - np.log(2) / lam) * lam)
    errs.append(abs(escape_time(1.0, np.e, 1.0) - 1))
    errs.append(abs(escape_time(2.0, np.exp(4.0), 1.0) - 2))
    check(13, [max(errs) <= 1e-14], "max identity error %.1e" % max(errs))
