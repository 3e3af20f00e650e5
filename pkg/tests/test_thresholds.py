import numpy as np
import pytest
from scipy import linalg

from mristab.errors import WrongRegime
from mristab.fixtures import gaussian_bump, increasing, keplerian, rigid
from mristab.operators import inertia, make_grid, metric, rotation_mass
from mristab.profiles import make_keplerian
from mristab.thresholds import (classify, classify_form, classify_sweep, compute_B0,
                                compute_eps_max, compute_eps_min, eps_max_from_forms,
                                eps_min_from_forms, kernel_limit_from_forms,
                                kernel_perturbation_sign, tune_well, well_family)


def sine_galerkin_B0(domega2, nb=40, nq=400):
    """Independent oracle: B0^2 from a sine-series Galerkin method on [1, 2]."""
    x, w = np.polynomial.legendre.leggauss(nq)
    r, w = 1.5 + 0.5 * x, 0.5 * w
    j = np.arange(1, nb + 1)[:, None]
    s, c = np.sin(j * np.pi * (r - 1)), j * np.pi * np.cos(j * np.pi * (r - 1))
    M = (c * w / r) @ c.T + (s * w / r) @ s.T
    N = (s * w * domega2(r)) @ s.T
    return linalg.eigh(-N, M, eigvals_only=True)[-1]


@pytest.mark.parametrize("eps", [0.01, 0.3, 10.0])
def test_rigid_always_stable(eps, grid200):
    assert classify(rigid(eps), grid200).stable


def test_keplerian_verdicts(grid400):
    v = classify(keplerian(0.05), grid400)
    assert not v.stable and v.n_neg_L1 >= 1 and v.criterion == "sharp-L1"
    assert classify(keplerian(10.0), grid400).stable


def test_B0_against_galerkin_oracle(grid400):
    b0 = compute_B0(keplerian(), grid400)
    ref = sine_galerkin_B0(lambda r: -3.0 / r**4)
    assert abs(b0.value / ref - 1) < 1e-4
    assert b0.maximizer[0] == 0 and b0.maximizer[-1] == 0


def test_B0_defines_transition(grid400):
    p = keplerian()
    b2 = compute_B0(p, grid400).value
    assert classify(p.with_eps(np.sqrt(1.01 * b2)), grid400).stable
    assert not classify(p.with_eps(np.sqrt(0.99 * b2)), grid400).stable


def test_B0_homogeneity(grid200):
    a = compute_B0(make_keplerian(1.0, 1, 2, 0.1), grid200).value
    b = compute_B0(make_keplerian(9.0, 1, 2, 0.1), grid200).value
    assert abs(b / (9 * a) - 1) < 1e-12


def test_B0_zero_for_increasing_rotation(grid200):
    assert compute_B0(increasing(), grid200).value == 0.0
    assert compute_eps_min(increasing(), grid200).value == 0.0


def test_B0_needs_uniform_field(grid200):
    with pytest.raises(WrongRegime):
        compute_B0(gaussian_bump(), grid200)


def test_eps_min_equals_B0_for_uniform_field(grid400):
    p = keplerian()
    assert abs(compute_eps_min(p, grid400).value / compute_B0(p, grid400).value - 1) < 1e-10


def test_eps_min_with_field_shape(grid400):
    p = gaussian_bump(c=0.5)
    e2 = compute_eps_min(p, grid400).value
    assert e2 > 0
    assert classify(p.with_eps(np.sqrt(1.01 * e2)), grid400).stable
    assert not classify(p.with_eps(np.sqrt(0.99 * e2)), grid400).stable


def test_eps_max_rejected_for_admissible_profiles(grid200):
    for p in (keplerian(), increasing(), gaussian_bump(), gaussian_bump(c=-0.9)):
        with pytest.raises(WrongRegime):
            compute_eps_max(p, grid200)


def test_kernel_sign_rejected_without_kernel(grid200):
    with pytest.raises(WrongRegime):
        kernel_perturbation_sign(increasing(), grid200)


@pytest.fixture(scope="module")
def well():
    g = make_grid(1, 2, 200)
    p = increasing(1.0)
    c0 = tune_well(p, g, 1.5, 0.1)
    return p, g, c0


def test_eps_max_on_deepened_well(well):
    p, g, c0 = well
    lhat = well_family(p, g, 1.3 * c0, 1.5, 0.1)
    assert inertia(lhat).n_neg >= 1
    N = rotation_mass(p, g)
    t = eps_max_from_forms(lhat, N)
    stable = lambda e2: classify_form(lhat + N.scaled(1.0 / e2)).stable
    assert stable(0.99 * t.value) and not stable(1.01 * t.value)
    t2 = eps_max_from_forms(lhat, N.scaled(2.0))
    assert abs(t2.value / t.value - 2) < 1e-10
    with pytest.raises(WrongRegime):
        eps_min_from_forms(lhat, N)
    with pytest.raises(WrongRegime):
        eps_max_from_forms(lhat, rotation_mass(keplerian(), g))


def test_kernel_limit_signs(well):
    p, g, c0 = well
    lhat = well_family(p, g, c0, 1.5, 0.1)
    s, val, phi = kernel_limit_from_forms(lhat, rotation_mass(p, g), metric(g))
    assert s == 1 and val > 0
    s2, val2, _ = kernel_limit_from_forms(lhat, rotation_mass(keplerian(), g), metric(g))
    assert s2 == -1 and val2 < 0
    with pytest.raises(WrongRegime):
        kernel_limit_from_forms(well_family(p, g, 0.5 * c0, 1.5, 0.1),
                                rotation_mass(p, g), metric(g))


def test_sweep_parallel_matches_serial(grid200):
    eps = np.geomspace(0.1, 1.0, 20)
    a = classify_sweep(keplerian(), grid200, eps, jobs=1)
    b = classify_sweep(keplerian(), grid200, eps, jobs=4)
    assert np.array_equal(a, b) and not a[0] and a[-1]
