"""Checks for the coefficient table, bump sum, and exact lattice geometry."""

import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from solenoidlab.circle_map import (
    BUMP_KINDS,
    LatticeReport,
    PerturbationSpec,
    PeriodicityError,
    bump_chi,
    circle_dist,
    coefficient_table,
    f_eval,
    g_eval,
    linear_spec,
    lyapunov_periodic,
    lyapunov_target,
    periodic_theta,
    verify_lattice,
)

# alpha_2 evaluated once at 60 digits and frozen; it doubles as the
# regression constant for the coefficient table.
ALPHA_2 = -0.00024141033058467038
E_BETA_2 = 0.6930868243345718


@pytest.fixture(scope="module")
def spec():
    return coefficient_table(5)


def test_table_n_max_1_is_empty():
    spec = coefficient_table(1)
    assert spec.betas == ()
    assert spec.alphas == ()
    assert spec.is_linear


def test_beta_2_exact_value(spec):
    assert spec.betas[0] == Fraction(-3666, 10**4)


def test_beta_floor_is_toward_minus_infinity():
    # 10^4 lnln2 = -3665.129..., so floor must give -3666, not -3665
    with mpmath.workdps(30):
        assert int(mpmath.floor(mpmath.log(mpmath.log(2)) * 10**4)) == -3666


def test_alpha_2_regression_value(spec):
    assert spec.alphas[0] == pytest.approx(ALPHA_2, rel=1e-12)
    assert abs(spec.alphas[0]) < 2e-3


def test_alpha_magnitude_bound(spec):
    for i, alpha in enumerate(spec.alphas):
        n = i + 2
        assert abs(alpha) <= n * 10.0 ** (-n * n + 1)


def test_betas_in_window(spec):
    for beta in spec.betas:
        assert Fraction(-37, 100) < beta < Fraction(-36, 100)


def test_betas_pairwise_distinct_exactly(spec):
    assert len(set(spec.betas)) == len(spec.betas)


def test_lyapunov_targets_distinct_at_high_precision(spec):
    # gaps shrink like 10^(-N^2) but must exceed 10^(-n_max^2 - 2)
    with mpmath.workdps(80):
        vals = [
            mpmath.exp(mpmath.mpf(b.numerator) / b.denominator) for b in spec.betas
        ]
        gaps = [abs(vals[i] - vals[j]) for i in range(len(vals)) for j in range(i)]
    floor_gap = mpmath.mpf(10) ** (-spec.n_max**2 - 2)
    assert all(gap > floor_gap for gap in gaps)


def test_json_round_trip(spec):
    again = PerturbationSpec.from_json(spec.to_json())
    assert again == spec


# ---------------------------------------------------------------------------
# g and f
# ---------------------------------------------------------------------------

def test_g_vanishes_off_support(spec):
    for x in (0.0, 0.5, 2.0 / 3.0, 0.9):
        g, gp = g_eval(spec, x)
        assert g == 0.0
        assert gp == 0.0


def test_g_at_lattice_centers(spec):
    for n in range(2, spec.n_max + 1):
        c = 1.0 / (2.0**n - 1.0)
        g, gp = g_eval(spec, c)
        assert abs(g) < 1e-18
        assert gp == pytest.approx(spec.alphas[n - 2], abs=1e-18)


def test_f_linear_case():
    fx, fp = f_eval(linear_spec(), 0.3)
    assert fx == pytest.approx(0.6, abs=1e-15)
    assert fp == 2.0


def test_f_at_one_third(spec):
    fx, fp = f_eval(spec, 1.0 / 3.0)
    assert circle_dist(fx, 2.0 / 3.0) < 1e-15
    assert fp == pytest.approx(2.0 + spec.alphas[0], abs=1e-15)


def test_f_at_half(spec):
    fx, fp = f_eval(spec, 0.5)
    assert fx == 0.0
    assert fp == 2.0


def test_f_derivative_in_range_on_dense_grid(spec):
    x = np.linspace(0.0, 1.0, 200_001, endpoint=False)
    _, fp = f_eval(spec, x)
    assert fp.min() > 1.0
    assert fp.max() < 3.0
    _, gp = g_eval(spec, x)
    assert np.abs(gp).max() < 1.0


def test_f_monotone_on_lift(spec):
    x = np.linspace(0.0, 1.0, 100_001)
    g, _ = g_eval(spec, x % 1.0)
    lift = 2.0 * x + g
    assert np.all(np.diff(lift) > 0)


def test_g_matches_finite_differences(spec):
    rng = np.random.default_rng(7)
    x = rng.random(10_000)
    h = 1e-7
    g, gp = g_eval(spec, x)
    gp_fd = (g_eval(spec, x + h)[0] - g_eval(spec, x - h)[0]) / (2 * h)
    scale = np.maximum(np.abs(gp), 1e-4)
    assert np.max(np.abs(gp - gp_fd) / scale) < 1e-6


@pytest.mark.parametrize("kind", BUMP_KINDS)
def test_bump_profile_contract(kind):
    chi0, dchi0 = bump_chi(0.0, kind)
    assert chi0 == 0.0
    assert dchi0 == 1.0
    u = np.linspace(-0.75, 0.75, 30_001)
    chi, _ = bump_chi(u, kind)
    assert np.all(chi[np.abs(u) >= 0.5] == 0.0)
    # theta == 1 on the plateau, so chi == u there
    plateau = np.abs(u) <= 0.25
    assert np.allclose(chi[plateau], u[plateau], atol=1e-15)


def test_smoothstep_spec_builds():
    spec = coefficient_table(5, bump_kind="smoothstep")
    g, gp = g_eval(spec, 1.0 / 3.0)
    assert g == pytest.approx(0.0, abs=1e-18)
    assert gp == pytest.approx(spec.alphas[0], abs=1e-18)


# ---------------------------------------------------------------------------
# periodic points and exponents
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 3, 5])
def test_periodic_theta(spec, N):
    theta, residual = periodic_theta(spec, N)
    assert theta == 1.0 / (2.0**N - 1.0)
    assert residual < 1e-12


def test_lyapunov_linear_map():
    lam = lyapunov_periodic(linear_spec(), 1.0 / 3.0, 2)
    assert lam == pytest.approx(math.log(2.0), abs=1e-15)


@pytest.mark.parametrize("N", [2, 3, 4, 5])
def test_lyapunov_matches_closed_form_and_target(spec, N):
    theta, _ = periodic_theta(spec, N)
    lam = lyapunov_periodic(spec, theta, N)
    alpha = spec.alphas[N - 2]
    closed = math.log(2.0) + math.log1p(alpha / 2.0) / N
    assert abs(lam - closed) < 1e-12
    assert abs(lam - lyapunov_target(spec, N)) < 1e-12


def test_lyapunov_target_regression(spec):
    assert lyapunov_target(spec, 2) == pytest.approx(E_BETA_2, abs=1e-15)


def test_lyapunov_rejects_non_periodic(spec):
    with pytest.raises(PeriodicityError):
        lyapunov_periodic(spec, 0.123456, 3)


# ---------------------------------------------------------------------------
# lattice geometry
# ---------------------------------------------------------------------------

def test_lattice_order_2_passes():
    report = verify_lattice(2)
    assert isinstance(report, LatticeReport)
    assert report.ok
    assert report.intervals_checked == 1


def test_lattice_order_20_passes():
    report = verify_lattice(20)
    assert report.ok
    assert report.exclusions_checked == sum(n - 1 for n in range(2, 21))
    assert report.first_violation is None


def test_mutated_radius_fails_disjointness():
    report = verify_lattice(20, radius_base=2)
    assert not report.disjoint_ok
    assert not report.ok
    assert report.first_violation is not None


def test_lattice_argument_validation():
    with pytest.raises(ValueError):
        verify_lattice(1)
    with pytest.raises(ValueError):
        verify_lattice(5, radius_base=1)
