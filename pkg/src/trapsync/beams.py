"""Illumination-beam and microlens-array geometry.

The lens plane carries one Gaussian illumination beam per light field
(trap and compensation). Each microlens integrates the local intensity
over its circular aperture; the collected power reappears in a reimaged
focal spot of fixed waist. Site (row i, col j) sits at
(x, y) = (j * pitch, i * pitch); labels follow the row-letter/column-number
scheme (row 0 = "a", column 0 = "1", so "e5" is row 4, column 4).
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .constants import C, TWO_PI
from .species import AtomSpecies, load_species


class BeamGeometryError(ValueError):
    """Raised for invalid beams, arrays, or out-of-grid sites."""


@dataclass(frozen=True)
class GaussianBeam:
    """Collimated Gaussian illumination beam in the lens plane."""

    power: float                 # W, total
    waist: float                 # m, 1/e^2 intensity radius
    center: tuple[float, float] = (0.0, 0.0)  # m

    def __post_init__(self):
        if self.power < 0.0:
            raise BeamGeometryError(f"beam power must be >= 0, got {self.power!r}")
        if not self.waist > 0.0:
            raise BeamGeometryError(f"beam waist must be > 0, got {self.waist!r}")


@dataclass(frozen=True)
class MicrolensArray:
    pitch: float             # m, lens spacing in the lens plane
    aperture_radius: float   # m
    rows: int
    cols: int
    demagnification: float   # reimaged pitch = pitch * demagnification
    focal_waist: float       # m, 1/e^2 radius of each reimaged trap spot

    def __post_init__(self):
        if not self.aperture_radius > 0.0:
            raise BeamGeometryError("aperture radius must be > 0")
        if not self.focal_waist > 0.0:
            raise BeamGeometryError("focal waist must be > 0")
        if not self.demagnification > 0.0:
            raise BeamGeometryError("demagnification must be > 0")
        if self.rows < 1 or self.cols < 1:
            raise BeamGeometryError("grid extent must be at least 1x1")

    @property
    def reimaged_pitch(self) -> float:
        return self.pitch * self.demagnification

    def site_position(self, row: int, col: int) -> tuple[float, float]:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise BeamGeometryError(
                f"site ({row}, {col}) outside the {self.rows}x{self.cols} grid"
            )
        return (col * self.pitch, row * self.pitch)


def site_label(row: int, col: int) -> str:
    if row >= 26:
        raise BeamGeometryError("row labels only cover a..z")
    return f"{string.ascii_lowercase[row]}{col + 1}"


def parse_site_label(label: str) -> tuple[int, int]:
    label = label.strip().lower()
    if len(label) < 2 or label[0] not in string.ascii_lowercase or not label[1:].isdigit():
        raise BeamGeometryError(f"malformed site label {label!r} (expected e.g. 'e5')")
    return (string.ascii_lowercase.index(label[0]), int(label[1:]) - 1)


@dataclass(frozen=True)
class TrapArrayScene:
    """Full geometric configuration: species, both beams, lens grid, occupancy."""

    species: AtomSpecies
    trap_beam: GaussianBeam
    trap_wavelength: float          # m
    comp_beam: GaussianBeam
    comp_wavelength: float          # m
    comp_displacement: tuple[float, float]  # m, lateral offset of the comp beam
    array: MicrolensArray
    occupied: tuple[tuple[int, int], ...]
    transmission: float = 1.0       # global optical loss factor to the focal plane

    def __post_init__(self):
        if not self.occupied:
            raise BeamGeometryError("scene has no occupied sites")
        for row, col in self.occupied:
            self.array.site_position(row, col)  # raises if outside grid
        if not 0.0 < self.transmission <= 1.0:
            raise BeamGeometryError("transmission must lie in (0, 1]")

    @property
    def omega_trap(self) -> float:
        return TWO_PI * C / self.trap_wavelength

    @property
    def omega_comp(self) -> float:
        return TWO_PI * C / self.comp_wavelength

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(site_label(r, c) for r, c in self.occupied)

    def site_index(self, label: str) -> tuple[int, int]:
        site = parse_site_label(label)
        if site not in self.occupied:
            raise BeamGeometryError(f"site {label!r} is not occupied in this scene")
        return site

    def displaced_comp_beam(self, power: float | None = None) -> GaussianBeam:
        dx, dy = self.comp_displacement
        cx, cy = self.comp_beam.center
        beam = replace(self.comp_beam, center=(cx + dx, cy + dy))
        if power is not None:
            beam = replace(beam, power=power)
        return beam


def beam_intensity(beam: GaussianBeam, x, y):
    """Intensity I(r) = (2P / pi w^2) exp(-2 |r - r0|^2 / w^2) in W/m^2."""
    dx = np.asarray(x, dtype=float) - beam.center[0]
    dy = np.asarray(y, dtype=float) - beam.center[1]
    peak = 2.0 * beam.power / (np.pi * beam.waist**2)
    return peak * np.exp(-2.0 * (dx * dx + dy * dy) / beam.waist**2)


# Fixed aperture quadrature: 64-point Gauss-Legendre radially, 64 equally
# spaced angles (spectrally accurate for the periodic direction).
_QUAD_N_RADIAL = 64
_QUAD_N_ANGULAR = 64
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(_QUAD_N_RADIAL)


def _aperture_quadrature(radius: float):
    """Quadrature points (x, y) and weights for a disk of given radius at origin."""
    rho = 0.5 * radius * (_GL_NODES + 1.0)
    w_rho = 0.5 * radius * _GL_WEIGHTS
    theta = (np.arange(_QUAD_N_ANGULAR) + 0.5) * (TWO_PI / _QUAD_N_ANGULAR)
    xs = rho[:, None] * np.cos(theta)[None, :]
    ys = rho[:, None] * np.sin(theta)[None, :]
    weights = (w_rho * rho)[:, None] * (TWO_PI / _QUAD_N_ANGULAR)
    return xs.ravel(), ys.ravel(), np.broadcast_to(weights, xs.shape).ravel()


def site_powers(beam: GaussianBeam, array: MicrolensArray, sites) -> np.ndarray:
    """Optical power collected by each listed lens aperture (W)."""
    sites = list(sites)
    centers = np.array([array.site_position(r, c) for r, c in sites])
    qx, qy, qw = _aperture_quadrature(array.aperture_radius)
    x = centers[:, 0][:, None] + qx[None, :]
    y = centers[:, 1][:, None] + qy[None, :]
    return beam_intensity(beam, x, y) @ qw


def site_power(beam: GaussianBeam, array: MicrolensArray, site: tuple[int, int]) -> float:
    """Power through one lens aperture, by fixed 64x64 polar quadrature."""
    return float(site_powers(beam, array, [site])[0])


def site_peak_intensity(power: float, array: MicrolensArray, transmission: float = 1.0) -> float:
    """Peak intensity 2P/(pi w_trap^2) of the reimaged focal spot (W/m^2)."""
    if power < 0.0:
        raise BeamGeometryError(f"site power must be >= 0, got {power!r}")
    return 2.0 * power * transmission / (np.pi * array.focal_waist**2)


def compensation_intensity_ratio_map(scene: TrapArrayScene) -> np.ndarray:
    """Per-site ratio of compensation to trap focal-spot intensity.

    Both beams reimage through the same lenses, so the focal intensity
    ratio equals the aperture-power ratio. For zero displacement and equal
    waists the ratio is P_c / P at every site.
    """
    p_trap = site_powers(scene.trap_beam, scene.array, scene.occupied)
    p_comp = site_powers(scene.displaced_comp_beam(), scene.array, scene.occupied)
    return p_comp / p_trap


def _beam_from_record(rec: dict) -> tuple[GaussianBeam, float]:
    beam = GaussianBeam(
        power=float(rec["power_w"]),
        waist=float(rec["waist_m"]),
        center=tuple(float(v) for v in rec.get("center_m", (0.0, 0.0))),
    )
    return beam, float(rec["wavelength_nm"]) * 1e-9


def load_scene(path, species: AtomSpecies | None = None) -> TrapArrayScene:
    """Load a scene YAML file; resolves species_file relative to the scene file."""
    path = Path(path)
    with open(path, "r") as fh:
        rec = yaml.safe_load(fh)
    if not isinstance(rec, dict):
        raise BeamGeometryError("scene definition must be a mapping")
    try:
        if species is None:
            species = load_species(path.parent / rec["species_file"])
        trap_beam, trap_wl = _beam_from_record(rec["trap_beam"])
        comp_rec = rec["compensation_beam"]
        comp_beam, comp_wl = _beam_from_record(comp_rec)
        displacement = tuple(float(v) for v in comp_rec.get("displacement_m", (0.0, 0.0)))
        arr_rec = rec["array"]
        array = MicrolensArray(
            pitch=float(arr_rec["pitch_m"]),
            aperture_radius=float(arr_rec["aperture_radius_m"]),
            rows=int(arr_rec["rows"]),
            cols=int(arr_rec["cols"]),
            demagnification=float(arr_rec["demagnification"]),
            focal_waist=float(arr_rec["focal_waist_m"]),
        )
        occupied_rec = rec.get("occupied", "all")
        if occupied_rec == "all":
            occupied = tuple((r, c) for r in range(array.rows) for c in range(array.cols))
        else:
            occupied = tuple(parse_site_label(lbl) for lbl in occupied_rec)
        return TrapArrayScene(
            species=species,
            trap_beam=trap_beam,
            trap_wavelength=trap_wl,
            comp_beam=comp_beam,
            comp_wavelength=comp_wl,
            comp_displacement=displacement,
            array=array,
            occupied=occupied,
            transmission=float(rec.get("transmission", 1.0)),
        )
    except KeyError as exc:
        raise BeamGeometryError(f"scene file is missing required field {exc}") from exc
