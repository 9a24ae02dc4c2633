"""Trap depth, oscillation frequencies, and thermal-ensemble energy sampling.

A trapped thermal ensemble carries energies distributed like a 3D Boltzmann
density p(E) ~ E^2 exp(-E/kT), truncated at the trap depth U. An atom of
energy E spends time away from the focus and sees a reduced time-averaged
intensity; for a harmonic trap the virial theorem puts half its energy into
potential, so the averaged relative intensity is 1 - E/(2U) and the
effective differential detuning is delta(E) = delta_peak (1 - E/(2U)).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .constants import HBAR, KB
from .species import STATE_LOWER, STATE_UPPER, AtomSpecies
from .stark import shift_breakdown


class BlueDetuningError(ValueError):
    """The light does not form a trap (not red-detuned from every line)."""


class TruncationWarning(UserWarning):
    """kT above half the trap depth: the truncated distribution is strongly distorted."""


@dataclass(frozen=True)
class TrapSite:
    """Per-trap derived quantities for one occupied site."""

    row: int
    col: int
    label: str
    power: float              # W collected by the lens
    peak_intensity: float     # W/m^2 at the focus
    depth: float              # J, positive
    omega_radial: float       # rad/s
    omega_axial: float        # rad/s
    delta_uncompensated: float  # rad/s, trap-light differential shift at the focus
    delta_residual: float       # rad/s, differential shift including compensation


@dataclass(frozen=True)
class ThermalEnsemble:
    """Sampled atom energies for one site at temperature T."""

    site: TrapSite
    temperature: float        # K
    energies: np.ndarray      # J, shape (N,)
    seed: int
    truncation_flag: bool     # True when kT > U/2

    @property
    def n_atoms(self) -> int:
        return self.energies.size

    @classmethod
    def sample(cls, site: TrapSite, temperature: float, n_atoms: int, seed: int) -> "ThermalEnsemble":
        energies = sample_thermal_energies(temperature, site.depth, n_atoms, seed)
        return cls(
            site=site,
            temperature=temperature,
            energies=energies,
            seed=seed,
            truncation_flag=KB * temperature > 0.5 * site.depth,
        )


def trap_depth(species: AtomSpecies, omega_laser: float, peak_intensity: float) -> float:
    """Trap depth U in Joules: magnitude of the clock-manifold mean light shift.

    Requires red detuning from every line for both states, otherwise the
    intensity maximum is not a potential minimum.
    """
    for state in (STATE_LOWER, STATE_UPPER):
        if np.any(species.detunings(state, omega_laser) >= 0.0):
            raise BlueDetuningError(
                "laser not red-detuned from every transition: no dipole trap forms"
            )
    shifts = shift_breakdown(species, omega_laser, peak_intensity)
    mean_shift = 0.5 * (shifts.shift_lower + shifts.shift_upper) * HBAR
    return -mean_shift


def trap_frequencies(depth: float, focal_waist: float, wavelength: float, mass: float):
    """Harmonic (radial, axial) trap frequencies in rad/s.

    omega_r = sqrt(4U/(m w^2)), omega_z = sqrt(2U/(m z_R^2)), z_R = pi w^2 / lambda.
    """
    if not depth > 0.0:
        raise ValueError(f"trap depth must be > 0, got {depth!r}")
    z_r = np.pi * focal_waist**2 / wavelength
    omega_r = float(np.sqrt(4.0 * depth / (mass * focal_waist**2)))
    omega_z = float(np.sqrt(2.0 * depth / (mass * z_r**2)))
    return omega_r, omega_z


def site_stream_seed(seed: int, row: int, col: int, stream: int = 0) -> int:
    """Independent per-site, per-purpose key for the counter-based RNG streams."""
    return (int(seed) * 4096 + row * 64 + col) * 8 + stream


_CDF_POINTS = 10_000


def _truncated_boltzmann_cdf(temperature: float, depth: float):
    """Tabulated CDF of p(E) ~ E^2 exp(-E/kT) on [0, U].

    The table spans [0, min(U, 60 kT)]: beyond 60 kT the remaining mass is
    below double precision, and capping the span keeps the 10^4-point grid
    resolving the distribution at low temperatures.
    """
    upper = min(depth, 60.0 * KB * temperature)
    grid = np.linspace(0.0, upper, _CDF_POINTS + 1)
    density = grid**2 * np.exp(-grid / (KB * temperature))
    cdf = np.concatenate(([0.0], np.cumsum((density[1:] + density[:-1]) * 0.5 * np.diff(grid))))
    return grid, cdf / cdf[-1]


def sample_thermal_energies(temperature: float, depth: float, n_atoms: int, seed) -> np.ndarray:
    """Draw energies from the truncated 3D Boltzmann density by inverse CDF.

    Deterministic for a fixed seed; seeds may be a single integer or a
    sequence of up to two integers forming an independent counter-based
    (Philox) stream per site.
    """
    if not temperature > 0.0:
        raise ValueError(f"temperature must be > 0, got {temperature!r}")
    if not depth > 0.0:
        raise ValueError(f"trap depth must be > 0, got {depth!r}")
    if n_atoms < 1:
        raise ValueError(f"need at least one atom, got {n_atoms!r}")
    if KB * temperature > 0.5 * depth:
        warnings.warn(
            "kT exceeds half the trap depth; the truncated energy distribution "
            "is strongly distorted",
            TruncationWarning,
            stacklevel=2,
        )
    grid, cdf = _truncated_boltzmann_cdf(temperature, depth)
    rng = np.random.Generator(np.random.Philox(key=seed))
    return np.interp(rng.random(n_atoms), cdf, grid)


def effective_detuning(energy, depth: float, peak_detuning: float):
    """Time-averaged differential detuning delta(E) = delta_peak (1 - E/(2U))."""
    energy = np.asarray(energy, dtype=float)
    if np.any(energy < 0.0) or np.any(energy > depth):
        raise ValueError("atom energy outside [0, U]")
    return peak_detuning * (1.0 - energy / (2.0 * depth))
