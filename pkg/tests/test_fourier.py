"""Fourier transforms of the equilibrium measures and power-law fitting."""

import math

import numpy as np
import pytest

from solenoidlab.circle_map import coefficient_table, linear_spec
from solenoidlab.fourier import decay_exponent, dyadic_frequencies, mu_hat, nu_hat
from solenoidlab.thermo import GridFunction, mme_potential, solve_equilibrium


@pytest.fixture(scope="module")
def lin_eq():
    return solve_equilibrium(linear_spec(), mme_potential(1 << 14))


@pytest.fixture(scope="module")
def pert_eq():
    return solve_equilibrium(coefficient_table(5), mme_potential(1 << 14))


def test_nu_hat_at_zero(pert_eq):
    assert nu_hat(pert_eq, 0.0) == pytest.approx(1.0, abs=1e-12)


def test_nu_hat_lebesgue_integer_frequencies(lin_eq):
    for k in (1, 2, 7, 100):
        val = nu_hat(lin_eq, 2.0 * math.pi * k)
        assert abs(val) < 1e-10


def test_nu_hat_modulus_bound(pert_eq):
    for t in (3.0, 50.0, 1234.5):
        assert abs(nu_hat(pert_eq, t)) <= 1.0 + 1e-10


def test_nu_hat_lebesgue_envelope(lin_eq):
    # |int e^{i t x} dx| = 2 |sin(t/2)| / t
    for t in (10.0, 100.0, 1000.0):
        want = 2.0 * abs(math.sin(t / 2.0)) / t
        assert abs(nu_hat(lin_eq, t)) == pytest.approx(want, abs=1e-8)


def test_nu_hat_grid_agreement(pert_eq):
    spec = pert_eq.spec
    mid = solve_equilibrium(spec, mme_potential(1 << 15))
    fine = solve_equilibrium(spec, mme_potential(1 << 16))
    for t in (100.0, 1000.0, 10000.0):
        assert abs(nu_hat(mid, t) - nu_hat(fine, t)) < 1e-8


def test_nu_hat_custom_phase(pert_eq):
    phase = GridFunction(np.full(pert_eq.m, 0.25))
    val = nu_hat(pert_eq, 8.0, phase)
    assert val == pytest.approx(np.exp(2.0j), abs=1e-10)


def test_nu_hat_localized_amplitude(pert_eq):
    m = pert_eq.m
    x = np.arange(m) / m
    window = GridFunction(np.where(np.abs(x - 0.5) < 0.1, 1.0, 0.0))
    total = nu_hat(pert_eq, 0.0, amplitude=window)
    assert 0.15 < abs(total) < 0.25  # roughly the nu-mass of the window
    val = nu_hat(pert_eq, 300.0, amplitude=window)
    assert abs(val) <= abs(total) + 1e-12


def test_mu_hat_at_zero(pert_eq):
    val, err = mu_hat(pert_eq.spec, pert_eq, (0.0, 0.0, 0.0), samples=2_000, seed=1)
    assert val == 1.0 + 0.0j
    assert err == 0.0


def test_mu_hat_matches_nu_hat_on_first_axis(pert_eq):
    spec = pert_eq.spec
    for t in (10.0, 100.0):
        val, err = mu_hat(spec, pert_eq, (t, 0.0, 0.0), samples=200_000, seed=5)
        ref = nu_hat(pert_eq, t)
        assert abs(val - ref) < 3.0 * err


def test_mu_hat_conjugate_symmetry(pert_eq):
    spec = pert_eq.spec
    xi = (50.0, 3.0, -2.0)
    a, _ = mu_hat(spec, pert_eq, xi, samples=5_000, seed=9)
    b, _ = mu_hat(spec, pert_eq, tuple(-x for x in xi), samples=5_000, seed=9)
    assert a == pytest.approx(b.conjugate(), abs=1e-14)


def test_mu_hat_repeatability(pert_eq):
    spec = pert_eq.spec
    a = mu_hat(spec, pert_eq, (100.0, 1.0, 1.0), samples=5_000, seed=33)
    b = mu_hat(spec, pert_eq, (100.0, 1.0, 1.0), samples=5_000, seed=33)
    assert a == b


def test_mu_hat_decays_in_tilted_unstable_direction(pert_eq):
    spec = pert_eq.spec
    v = np.array([1.0, 0.7, 0.0])
    v /= np.linalg.norm(v)  # ~35 degrees off the angular axis
    low, err_low = mu_hat(spec, pert_eq, tuple(10.0 * v), samples=200_000, seed=11)
    high, err_high = mu_hat(spec, pert_eq, tuple(100.0 * v), samples=200_000, seed=11)
    assert abs(low) > 0.1
    assert abs(high) < 0.01
    assert abs(low) - abs(high) > 5.0 * (err_low + err_high)


def test_mu_hat_rejects_shallow_depth(pert_eq):
    with pytest.raises(ValueError):
        mu_hat(pert_eq.spec, pert_eq, (1.0, 0.0, 0.0), samples=2_000, depth=10)


def test_decay_exponent_pure_power_law():
    freqs = dyadic_frequencies()
    series = [(f, 1.0 / f) for f in freqs]
    fit = decay_exponent(series)
    assert fit.exponent == pytest.approx(-1.0, abs=1e-12)
    assert fit.stderr < 1e-12
    assert fit.n_used == len(freqs)


def test_decay_exponent_constant():
    freqs = dyadic_frequencies()
    fit = decay_exponent([(f, 0.5) for f in freqs])
    assert fit.exponent == pytest.approx(0.0, abs=1e-12)


def test_decay_exponent_noise_floor_censoring():
    freqs = dyadic_frequencies()
    mods = [1.0 / f for f in freqs]
    errs = [0.0] * len(freqs)
    mods[-1] = 1e-9
    errs[-1] = 1e-6  # below 3 sigma, must be dropped
    fit = decay_exponent(list(zip(freqs, mods)), errs)
    assert fit.n_used == len(freqs) - 1
    assert fit.exponent == pytest.approx(-1.0, abs=1e-12)


def test_decay_exponent_validation():
    freqs = dyadic_frequencies(count=6)
    with pytest.raises(ValueError):
        decay_exponent([(f, 1.0) for f in freqs])  # too few points
    with pytest.raises(ValueError):
        decay_exponent([(f, 1.0) for f in np.linspace(10, 90, 9)])  # < 2 decades
    freqs = dyadic_frequencies()
    errs = [1.0] * len(freqs)
    with pytest.raises(ValueError):
        decay_exponent([(f, 1.0 / f) for f in freqs], errs)  # all censored


def test_perturbed_mme_decay_experiment(pert_eq):
    spec = pert_eq.spec
    eq = solve_equilibrium(spec, mme_potential(1 << 17))
    freqs = dyadic_frequencies(100.0, 11)  # up to 102400 < 2 pi m / 8
    series = [(t, abs(nu_hat(eq, t))) for t in freqs]
    fit = decay_exponent(series)
    assert fit.exponent < -0.05
    assert fit.stderr < 0.5 * abs(fit.exponent)
