import numpy as np
import pytest
from scipy.integrate import quad

from trapsync.constants import C, KB, TWO_PI
from trapsync.trap import (
    BlueDetuningError,
    TruncationWarning,
    effective_detuning,
    sample_thermal_energies,
    trap_depth,
    trap_frequencies,
)

WL_TRAP = 810.1e-9
OMEGA_TRAP = TWO_PI * C / WL_TRAP
I_CENTRAL = 2 * 0.72e-3 / (np.pi * (3.7e-6) ** 2)


def test_trap_depth_central(species):
    depth = trap_depth(species, OMEGA_TRAP, I_CENTRAL)
    assert depth == pytest.approx(KB * 40e-6, rel=0.25)


def test_trap_depth_zero_intensity(species):
    assert trap_depth(species, OMEGA_TRAP, 0.0) == 0.0


def test_trap_depth_linear(species):
    base = trap_depth(species, OMEGA_TRAP, 1.0)
    assert trap_depth(species, OMEGA_TRAP, 5.0) == pytest.approx(5 * base, rel=1e-12)


@pytest.mark.parametrize("wl", [770e-9, 785e-9])
def test_blue_or_in_between_light_rejected(species, wl):
    with pytest.raises(BlueDetuningError):
        trap_depth(species, TWO_PI * C / wl, I_CENTRAL)


def test_trap_frequencies_paper_values(species):
    depth = KB * 40e-6
    omega_r, omega_z = trap_frequencies(depth, 3.7e-6, WL_TRAP, species.mass)
    assert omega_r == pytest.approx(TWO_PI * 5.5e3, rel=0.15)
    assert omega_z == pytest.approx(TWO_PI * 270.0, rel=0.15)


def test_trap_frequency_scalings(species):
    depth = KB * 40e-6
    omega_r, omega_z = trap_frequencies(depth, 3.7e-6, WL_TRAP, species.mass)
    omega_r4, omega_z4 = trap_frequencies(4 * depth, 3.7e-6, WL_TRAP, species.mass)
    assert omega_r4 == pytest.approx(2 * omega_r, rel=1e-12)
    assert omega_z4 == pytest.approx(2 * omega_z, rel=1e-12)
    omega_r2w, _ = trap_frequencies(depth, 2 * 3.7e-6, WL_TRAP, species.mass)
    assert omega_r2w == pytest.approx(omega_r / 2, rel=1e-12)


def test_trap_frequency_ratio_identity(species):
    depth = KB * 40e-6
    for waist in (2e-6, 3.7e-6, 6e-6):
        omega_r, omega_z = trap_frequencies(depth, waist, WL_TRAP, species.mass)
        z_r = np.pi * waist**2 / WL_TRAP
        assert omega_r / omega_z == pytest.approx(np.sqrt(2.0) * z_r / waist, rel=1e-12)


# --- thermal sampling ---------------------------------------------------------

U = KB * 40e-6


def truncated_mean_oracle(kt, depth):
    """Mean energy of E^2 exp(-E/kT) on [0, U] by direct quadrature."""
    num, _ = quad(lambda e: e**3 * np.exp(-e / kt), 0.0, depth, epsrel=1e-12)
    den, _ = quad(lambda e: e**2 * np.exp(-e / kt), 0.0, depth, epsrel=1e-12)
    return num / den


def test_sampling_deterministic():
    a = sample_thermal_energies(5e-6, U, 1000, seed=7)
    b = sample_thermal_energies(5e-6, U, 1000, seed=7)
    assert np.array_equal(a, b)
    c = sample_thermal_energies(5e-6, U, 1000, seed=8)
    assert not np.array_equal(a, c)


def test_sampling_mean_matches_quadrature_oracle():
    kt = U / 8.0
    samples = sample_thermal_energies(kt / KB, U, 100_000, seed=11)
    assert samples.mean() == pytest.approx(truncated_mean_oracle(kt, U), rel=0.02)
    # and the oracle itself sits at 3 kT times the truncation correction
    assert truncated_mean_oracle(kt, U) < 3 * kt


def test_sampling_ks_statistic():
    kt = U / 8.0
    samples = np.sort(sample_thermal_energies(kt / KB, U, 100_000, seed=13))
    norm, _ = quad(lambda e: e**2 * np.exp(-e / kt), 0.0, U, epsrel=1e-12)
    cdf = np.array([
        quad(lambda e: e**2 * np.exp(-e / kt), 0.0, x, epsrel=1e-10)[0] / norm
        for x in samples[:: len(samples) // 400]
    ])
    empirical = np.arange(0, len(samples), len(samples) // 400) / len(samples)
    assert np.max(np.abs(cdf - empirical)) < 0.02


def test_sampling_cold_limit():
    samples = sample_thermal_energies(40e-6 / 1e6, U, 10_000, seed=3)
    assert np.all(samples < 1e-4 * U)


def test_sampling_bounds_and_warning():
    samples = sample_thermal_energies(10e-6, U, 10_000, seed=5)
    assert np.all((samples >= 0.0) & (samples < U))
    with pytest.warns(TruncationWarning):
        sample_thermal_energies(30e-6, U, 100, seed=5)


def test_sampling_validation():
    with pytest.raises(ValueError):
        sample_thermal_energies(-1e-6, U, 10, seed=1)
    with pytest.raises(ValueError):
        sample_thermal_energies(1e-6, U, 0, seed=1)


# --- energy-to-detuning map -----------------------------------------------------

def test_effective_detuning_endpoints():
    delta_peak = -TWO_PI * 300.0
    assert effective_detuning(0.0, U, delta_peak) == delta_peak
    assert effective_detuning(U, U, delta_peak) == pytest.approx(delta_peak / 2, rel=1e-12)


def test_effective_detuning_monotone():
    energies = np.linspace(0.0, U, 50)
    deltas = effective_detuning(energies, U, -TWO_PI * 300.0)
    assert np.all(np.diff(deltas) > 0)  # shifts shrink in magnitude with energy


def test_effective_detuning_domain():
    with pytest.raises(ValueError):
        effective_detuning(-0.1 * U, U, 1.0)
    with pytest.raises(ValueError):
        effective_detuning(1.1 * U, U, 1.0)


def test_contrast_closed_form_against_integral_oracle():
    """(1 + (t/tau)^2)^(-3/2) with tau = 2U/(kT delta) is the exact untruncated
    phase average; check it against direct quadrature, then against Monte Carlo."""
    kt = U / 8.0
    delta_peak = -TWO_PI * 300.0
    tau = 2 * U / (kt * abs(delta_peak))
    rng = np.random.default_rng(17)
    # untruncated 3D Boltzmann: Gamma(shape 3, scale kT)
    energies = rng.gamma(3.0, kt, 1_000_000)
    for t in np.linspace(0.0, 4 * tau, 9):
        closed = (1 + (t / tau) ** 2) ** -1.5

        # dimensionless form: <exp(i a E/kT)> over x^2 e^-x / 2, a = t/tau
        a = kt * abs(delta_peak) * t / (2 * U)
        re, _ = quad(lambda x: 0.5 * x**2 * np.exp(-x), 0.0, 80.0,
                     weight="cos", wvar=a, limit=400)
        im, _ = quad(lambda x: 0.5 * x**2 * np.exp(-x), 0.0, 80.0,
                     weight="sin", wvar=a, limit=400)
        assert np.hypot(re, im) == pytest.approx(closed, abs=1e-9)

        phases = delta_peak * (1 - energies / (2 * U)) * t
        mc = np.hypot(np.cos(phases).mean(), np.sin(phases).mean())
        assert mc == pytest.approx(closed, abs=0.01)
