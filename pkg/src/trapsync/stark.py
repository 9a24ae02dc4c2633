"""AC-Stark shifts of the clock states, differential and compensation shifts,
the compensation intensity ratio, and spontaneous scattering rates.

All shifts use the rotating-wave approximation, summed over the species'
D lines with their line-strength coefficients:

    dE_i = sum_j (3 pi c^2 Gamma_j / (2 omega_ij^3)) (c_ij / Delta_ij) I

with Delta_ij = omega_laser - omega_ij the per-state, per-line detuning.
Far red-detuned light shifts both clock states down, the upper one a bit
more (its detuning is smaller in magnitude by the hyperfine splitting), so
the transition frequency drops: the differential shift
delta = (dE_1 - dE_0)/hbar is negative. Light tuned in between the two
ground hyperfine levels of one D line pushes the states apart instead,
giving the positive differential shift used for compensation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import C, HBAR
from .species import STATE_LOWER, STATE_UPPER, AtomSpecies, TransitionLine


class ResonanceError(ValueError):
    """Laser frequency too close to a transition for the far-detuned formula."""


class CompensationWindowError(ValueError):
    """Compensation frequency not strictly between the two hyperfine transitions."""


class NoSolutionError(ValueError):
    """Trap and compensation shifts have the same sign; no intensity ratio cancels."""


@dataclass(frozen=True)
class LineContribution:
    label: str
    shift_lower: float   # rad/s per the applied intensity
    shift_upper: float

    @property
    def differential(self) -> float:
        return self.shift_upper - self.shift_lower


@dataclass(frozen=True)
class ShiftBreakdown:
    """Shifts of both clock states (rad/s) with per-line contributions."""

    shift_lower: float
    shift_upper: float
    per_line: tuple[LineContribution, ...]

    @property
    def differential(self) -> float:
        return self.shift_upper - self.shift_lower


def _check_detunings(species: AtomSpecies, state: int, omega_laser: float) -> np.ndarray:
    deltas = species.detunings(state, omega_laser)
    for line, delta in zip(species.lines, deltas):
        if abs(delta) <= line.gamma:
            raise ResonanceError(
                f"laser within one linewidth of the {line.label} line "
                f"(detuning {delta:.3e} rad/s); far-detuned formula invalid"
            )
    return deltas


def _shift_rates(species: AtomSpecies, state: int, omega_laser: float) -> np.ndarray:
    """Per-line energy shift per unit intensity, J/(W/m^2)."""
    deltas = _check_detunings(species, state, omega_laser)
    omega_ij = species.transition_frequencies(state)
    gammas = np.array([ln.gamma for ln in species.lines])
    couplings = species.couplings(state)
    return 3.0 * np.pi * C**2 * gammas / (2.0 * omega_ij**3) * couplings / deltas


def ac_stark_shift(species: AtomSpecies, state: int, omega_laser: float, intensity: float) -> float:
    """RWA light shift of one clock state in Joules; negative for red detuning."""
    if intensity < 0.0:
        raise ValueError(f"intensity must be >= 0, got {intensity!r}")
    return float(np.sum(_shift_rates(species, state, omega_laser)) * intensity)


def shift_breakdown(species: AtomSpecies, omega_laser: float, intensity: float) -> ShiftBreakdown:
    """Both clock-state shifts in rad/s, resolved per line."""
    if intensity < 0.0:
        raise ValueError(f"intensity must be >= 0, got {intensity!r}")
    lo = _shift_rates(species, STATE_LOWER, omega_laser) * intensity / HBAR
    up = _shift_rates(species, STATE_UPPER, omega_laser) * intensity / HBAR
    per_line = tuple(
        LineContribution(label=ln.label, shift_lower=float(l), shift_upper=float(u))
        for ln, l, u in zip(species.lines, lo, up)
    )
    return ShiftBreakdown(
        shift_lower=float(np.sum(lo)), shift_upper=float(np.sum(up)), per_line=per_line
    )


def differential_shift(species: AtomSpecies, omega_laser: float, intensity: float) -> float:
    """Differential clock shift (dE_1 - dE_0)/hbar in rad/s; linear in intensity."""
    return shift_breakdown(species, omega_laser, intensity).differential


def _compensation_line(species: AtomSpecies, omega_comp: float) -> TransitionLine:
    """The line whose hyperfine window contains omega_comp, or raise."""
    for line, d_lo, d_up in zip(
        species.lines,
        species.detunings(STATE_LOWER, omega_comp),
        species.detunings(STATE_UPPER, omega_comp),
    ):
        if d_lo < 0.0 < d_up:
            return line
    raise CompensationWindowError(
        "compensation frequency must lie strictly between the two ground-state "
        "transition frequencies of one D line (the positive-shift guarantee "
        "breaks outside that window)"
    )


def compensation_shift(species: AtomSpecies, omega_comp: float, intensity: float) -> float:
    """Differential shift of the compensation field in rad/s; positive by construction."""
    _compensation_line(species, omega_comp)
    return differential_shift(species, omega_comp, intensity)


@dataclass(frozen=True)
class IntensityRatio:
    """Exact and closed-form compensation-to-trap peak-intensity ratio."""

    exact: float
    approximate: float
    effective_detuning: float   # rad/s, coupling-weighted harmonic mean at the trap
    compensation_line: str


def required_intensity_ratio(
    species: AtomSpecies, omega_trap: float, omega_comp: float
) -> IntensityRatio:
    """Solve delta_diff(I) + delta_c(eta I) = 0 for eta.

    Both shifts are linear in intensity, so eta = -delta_diff / delta_c at
    unit intensity, independent of I. The closed-form estimate is
    (omega_hfs / (2 Delta_eff))^2 / c_comp with Delta_eff the
    coupling-weighted harmonic mean of the trap detunings; the 1/c_comp
    factor accounts for the compensation light driving a single D line.
    """
    diff_rate = differential_shift(species, omega_trap, 1.0)
    comp_line = _compensation_line(species, omega_comp)
    comp_rate = compensation_shift(species, omega_comp, 1.0)
    if diff_rate * comp_rate >= 0.0:
        raise NoSolutionError(
            "trap and compensation differential shifts have the same sign; "
            "no intensity ratio cancels the shift"
        )
    exact = -diff_rate / comp_rate

    # centroid detunings: mean of the two clock states' detunings per line
    d_mean = 0.5 * (
        species.detunings(STATE_LOWER, omega_trap) + species.detunings(STATE_UPPER, omega_trap)
    )
    couplings = 0.5 * (species.couplings(STATE_LOWER) + species.couplings(STATE_UPPER))
    delta_eff = float(np.sum(couplings) / np.sum(couplings / d_mean))
    c_comp = 0.5 * (comp_line.coupling_lower + comp_line.coupling_upper)
    approximate = (species.omega_hfs / (2.0 * delta_eff)) ** 2 / c_comp

    return IntensityRatio(
        exact=float(exact),
        approximate=float(approximate),
        effective_detuning=delta_eff,
        compensation_line=comp_line.label,
    )


def scattering_rate(species: AtomSpecies, state: int, omega_laser: float, intensity: float) -> float:
    """Spontaneous photon scattering rate in 1/s for one clock state.

    Gamma_sc = sum_j (3 pi c^2 / (2 hbar omega_ij^3)) (Gamma_j / Delta_ij)^2 c_ij I
    """
    if intensity < 0.0:
        raise ValueError(f"intensity must be >= 0, got {intensity!r}")
    deltas = _check_detunings(species, state, omega_laser)
    omega_ij = species.transition_frequencies(state)
    gammas = np.array([ln.gamma for ln in species.lines])
    couplings = species.couplings(state)
    rates = 3.0 * np.pi * C**2 / (2.0 * HBAR * omega_ij**3) * (gammas / deltas) ** 2 * couplings
    return float(np.sum(rates) * intensity)


def mean_scattering_rate(species: AtomSpecies, omega_laser: float, intensity: float) -> float:
    """Clock-manifold average of the two states' scattering rates (1/s)."""
    return 0.5 * (
        scattering_rate(species, STATE_LOWER, omega_laser, intensity)
        + scattering_rate(species, STATE_UPPER, omega_laser, intensity)
    )


def scattering_ratio(
    species: AtomSpecies, omega_trap: float, omega_comp: float, eta: float
) -> float:
    """Ratio of compensation to trap scattering rates at intensity ratio eta."""
    if eta < 0.0:
        raise ValueError(f"eta must be >= 0, got {eta!r}")
    if eta == 0.0:
        return 0.0
    return eta * mean_scattering_rate(species, omega_comp, 1.0) / mean_scattering_rate(
        species, omega_trap, 1.0
    )
