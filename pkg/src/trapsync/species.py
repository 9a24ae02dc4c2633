"""Atomic species data: transition lines, hyperfine splitting, Zeeman coefficient.

Internally every frequency is angular (rad/s); the YAML species files use
plain Hz and are converted on load. The two clock states are addressed as
state 0 (lower hyperfine level) and state 1 (upper level); their energies
relative to the ground-state centroid are stored so that the detuning
identity Delta_1j = Delta_0j + omega_hfs holds exactly for every line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .constants import H, MU_B, TWO_PI

STATE_LOWER = 0
STATE_UPPER = 1


class SpeciesError(ValueError):
    """Raised for invalid or incomplete species definitions."""


@dataclass(frozen=True)
class TransitionLine:
    """One fine-structure D line coupling both clock states to an excited level.

    omega is the centroid transition frequency (ground centroid to excited
    level, rad/s); excited_offset shifts the effective excited level to
    model excited-state hyperfine structure (default 0: one level per line).
    """

    label: str
    omega: float            # rad/s
    gamma: float            # rad/s, natural linewidth
    coupling_lower: float   # c_0j, dimensionless
    coupling_upper: float   # c_1j
    excited_offset: float = 0.0  # rad/s

    def coupling(self, state: int) -> float:
        return self.coupling_lower if state == STATE_LOWER else self.coupling_upper


@dataclass(frozen=True)
class AtomSpecies:
    name: str
    mass: float                     # kg
    omega_hfs: float                # rad/s, ground-state hyperfine splitting
    zeeman_coefficient: float       # Hz/T^2 for the mF=0 clock pair
    state_offset_lower: float       # rad/s, clock-state energy vs ground centroid
    state_offset_upper: float
    lines: tuple[TransitionLine, ...] = field(default_factory=tuple)

    def state_offset(self, state: int) -> float:
        return self.state_offset_lower if state == STATE_LOWER else self.state_offset_upper

    def transition_frequencies(self, state: int) -> np.ndarray:
        """Transition frequencies omega_ij from clock state i to each line (rad/s)."""
        off = self.state_offset(state)
        return np.array([ln.omega + ln.excited_offset - off for ln in self.lines])

    def detunings(self, state: int, omega_laser: float) -> np.ndarray:
        """Per-line detunings Delta_ij = omega_laser - omega_ij (rad/s).

        The two states' detunings differ by exactly omega_hfs line by line.
        """
        delta = omega_laser - self.transition_frequencies(state)
        if state == STATE_UPPER:
            # enforce the identity bit-for-bit instead of relying on rounding
            delta = self.detunings(STATE_LOWER, omega_laser) + self.omega_hfs
        return delta

    def couplings(self, state: int) -> np.ndarray:
        return np.array([ln.coupling(state) for ln in self.lines])


def _require(record: dict, key: str, kind=float):
    if key not in record:
        raise SpeciesError(f"species record is missing required field '{key}'")
    try:
        return kind(record[key])
    except (TypeError, ValueError) as exc:
        raise SpeciesError(f"field '{key}' is not a valid {kind.__name__}") from exc


def _require_positive(record: dict, key: str) -> float:
    value = _require(record, key)
    if not value > 0.0 or not math.isfinite(value):
        raise SpeciesError(f"field '{key}' must be positive and finite, got {value!r}")
    return value


def load_species(source) -> AtomSpecies:
    """Build a validated AtomSpecies from a YAML file path or a mapping."""
    if isinstance(source, (str, Path)):
        with open(source, "r") as fh:
            record = yaml.safe_load(fh)
    else:
        record = dict(source)
    if not isinstance(record, dict):
        raise SpeciesError("species definition must be a mapping")

    name = str(_require(record, "name", str))
    mass = _require_positive(record, "mass_kg")
    f_hfs = _require_positive(record, "hyperfine_splitting_hz")
    k_b = _require_positive(record, "second_order_zeeman_hz_per_t2")

    offsets = record.get("clock_state_offset_hz")
    if not isinstance(offsets, dict) or "lower" not in offsets or "upper" not in offsets:
        raise SpeciesError("species record is missing 'clock_state_offset_hz' lower/upper")
    off_lo = float(offsets["lower"])
    off_up = float(offsets["upper"])
    if not math.isclose(off_up - off_lo, f_hfs, rel_tol=1e-12):
        raise SpeciesError(
            "clock-state offsets inconsistent with the hyperfine splitting: "
            f"{off_up - off_lo!r} != {f_hfs!r}"
        )

    raw_lines = record.get("lines")
    if not raw_lines:
        raise SpeciesError("species record has no transition lines")
    lines = []
    for entry in raw_lines:
        label = str(_require(entry, "label", str))
        freq = _require_positive(entry, "frequency_hz")
        width = _require_positive(entry, "linewidth_hz")
        c_lo = _require_positive(entry, "coupling_lower")
        c_up = _require_positive(entry, "coupling_upper")
        if c_lo > 1.0 or c_up > 1.0:
            raise SpeciesError(f"line '{label}': coupling coefficients must lie in (0, 1]")
        lines.append(
            TransitionLine(
                label=label,
                omega=TWO_PI * freq,
                gamma=TWO_PI * width,
                coupling_lower=c_lo,
                coupling_upper=c_up,
                excited_offset=TWO_PI * float(entry.get("excited_offset_hz", 0.0)),
            )
        )
    labels = [ln.label for ln in lines]
    if len(set(labels)) != len(labels):
        raise SpeciesError(f"duplicate line labels in species record: {labels}")
    lines.sort(key=lambda ln: ln.omega)

    return AtomSpecies(
        name=name,
        mass=mass,
        omega_hfs=TWO_PI * f_hfs,
        zeeman_coefficient=k_b,
        state_offset_lower=TWO_PI * off_lo,
        state_offset_upper=TWO_PI * off_up,
        lines=tuple(lines),
    )


def species_to_record(species: AtomSpecies) -> dict:
    """Invert load_species: a plain-Hz mapping that reloads bit-for-bit."""
    return {
        "name": species.name,
        "mass_kg": species.mass,
        "hyperfine_splitting_hz": species.omega_hfs / TWO_PI,
        "second_order_zeeman_hz_per_t2": species.zeeman_coefficient,
        "clock_state_offset_hz": {
            "lower": species.state_offset_lower / TWO_PI,
            "upper": species.state_offset_upper / TWO_PI,
        },
        "lines": [
            {
                "label": ln.label,
                "frequency_hz": ln.omega / TWO_PI,
                "linewidth_hz": ln.gamma / TWO_PI,
                "coupling_lower": ln.coupling_lower,
                "coupling_upper": ln.coupling_upper,
                "excited_offset_hz": ln.excited_offset / TWO_PI,
            }
            for ln in species.lines
        ],
    }


def save_species(species: AtomSpecies, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(species_to_record(species), fh, sort_keys=False)


def second_order_zeeman_shift(species: AtomSpecies, field_t: float) -> float:
    """Quadratic clock-transition shift K_B * B^2 in Hz for a bias field in Tesla."""
    if field_t < 0.0:
        raise ValueError(f"magnetic field must be >= 0, got {field_t!r}")
    return species.zeeman_coefficient * field_t * field_t


def zeeman_coefficient_from_g_factors(
    f_hfs: float, g_j: float = 2.00233113, g_i: float = 0.00029364
) -> float:
    """Breit-Rabi quadratic coefficient (gJ - gI)^2 muB^2 / (2 h^2 nu_hfs), Hz/T^2.

    Cross-check only; the value stored in the species file is authoritative.
    Defaults are the Rb-85 5S1/2 g-factors.
    """
    return ((g_j - g_i) * MU_B / H) ** 2 / (2.0 * f_hfs)
