"""Array-level composition: per-site shift maps, spread statistics,
compensation-power optimization, and misalignment fitting.

Every per-site shift is affine in the compensation power,
delta_s(P_c) = A_s + P_c B_s, with A_s the trap-light differential shift and
B_s the compensation shift per Watt of compensation-beam power; the
geometry enters only through the two aperture-power vectors. The
peak-to-peak spread is therefore convex in P_c and a golden-section search
finds the optimum.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize

from .beams import TrapArrayScene, site_label, site_peak_intensity, site_powers
from .constants import TWO_PI
from .stark import differential_shift, required_intensity_ratio
from .trap import TrapSite, trap_depth, trap_frequencies


class MapError(ValueError):
    """Invalid or mismatched shift maps."""


class OptimizationError(RuntimeError):
    """Optimizer bracket failure; carries the sampled objective curve."""

    def __init__(self, message, samples=None):
        super().__init__(message)
        self.samples = samples


@dataclass(frozen=True)
class ShiftMap:
    """Per-site differential shifts in Hz, bound to a scene configuration."""

    rows: np.ndarray       # int
    cols: np.ndarray       # int
    labels: tuple[str, ...]
    shifts_hz: np.ndarray
    metadata: dict

    def __post_init__(self):
        if len(self.labels) == 0:
            raise MapError("shift map has no entries")

    @property
    def n_sites(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class SpreadStats:
    peak_to_peak_hz: float
    mean_hz: float
    std_hz: float


@dataclass(frozen=True)
class CompensationOptimum:
    power: float           # W
    spread_hz: float       # peak-to-peak at the optimum
    eta_exact: float
    eta_approximate: float


@dataclass(frozen=True)
class MisalignmentFit:
    displacement: tuple[float, float]   # m
    power: float                        # W, re-optimized at the fitted displacement
    residual_rms_hz: float
    spread_hz: float                    # modeled spread at the fitted displacement
    centered_spread_hz: float           # prediction with the displacement zeroed


def scene_hash(scene: TrapArrayScene) -> str:
    blob = json.dumps(
        {
            "species": scene.species.name,
            "trap": [scene.trap_beam.power, scene.trap_beam.waist, scene.trap_beam.center,
                     scene.trap_wavelength],
            "comp": [scene.comp_beam.power, scene.comp_beam.waist, scene.comp_beam.center,
                     scene.comp_wavelength, scene.comp_displacement],
            "array": [scene.array.pitch, scene.array.aperture_radius, scene.array.rows,
                      scene.array.cols, scene.array.demagnification, scene.array.focal_waist],
            "occupied": list(scene.occupied),
            "transmission": scene.transmission,
        },
        sort_keys=True,
    )
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _shift_coefficients(scene: TrapArrayScene, displacement=None):
    """(A_s, B_s): uncompensated shift (rad/s) and comp shift per Watt (rad/s/W)."""
    arr = scene.array
    p_trap = site_powers(scene.trap_beam, arr, scene.occupied)
    i_trap = 2.0 * p_trap * scene.transmission / (np.pi * arr.focal_waist**2)
    a = differential_shift(scene.species, scene.omega_trap, 1.0) * i_trap

    comp = scene.displaced_comp_beam(power=1.0)
    if displacement is not None:
        cx, cy = scene.comp_beam.center
        comp = replace(comp, center=(cx + displacement[0], cy + displacement[1]))
    p_comp = site_powers(comp, arr, scene.occupied)
    i_comp = 2.0 * p_comp * scene.transmission / (np.pi * arr.focal_waist**2)
    b = differential_shift(scene.species, scene.omega_comp, 1.0) * i_comp
    return a, b


def array_shift_map(scene: TrapArrayScene, comp_power: float) -> ShiftMap:
    """Differential shift at each occupied site with comp power P_c (Hz).

    comp_power = 0 reproduces the uncompensated trap-light map.
    """
    if comp_power < 0.0:
        raise ValueError(f"compensation power must be >= 0, got {comp_power!r}")
    a, b = _shift_coefficients(scene)
    shifts = (a + comp_power * b) / TWO_PI
    rows = np.array([r for r, _ in scene.occupied])
    cols = np.array([c for _, c in scene.occupied])
    return ShiftMap(
        rows=rows,
        cols=cols,
        labels=scene.labels,
        shifts_hz=shifts,
        metadata={
            "scene_hash": scene_hash(scene),
            "compensation_power_w": comp_power,
            "displacement_m": list(scene.comp_displacement),
        },
    )


def spread_metric(shift_map: ShiftMap) -> SpreadStats:
    """Peak-to-peak, mean, and population standard deviation over the map."""
    values = shift_map.shifts_hz
    if values.size == 0:
        raise MapError("cannot compute spread of an empty map")
    return SpreadStats(
        peak_to_peak_hz=float(np.ptp(values)),
        mean_hz=float(np.mean(values)),
        std_hz=float(np.std(values)),
    )


def _golden_section(f, lo: float, hi: float, rel_width: float = 1e-5):
    """Golden-section minimizer; width converges to rel_width x initial bracket."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    span = hi - lo
    c = hi - invphi * span
    d = lo + invphi * span
    fc, fd = f(c), f(d)
    while (hi - lo) > rel_width * span:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = f(d)
    x = 0.5 * (lo + hi)
    return x, f(x)


def _check_unimodal(f, lo: float, hi: float, n: int = 33):
    xs = np.linspace(lo, hi, n)
    ys = np.array([f(x) for x in xs])
    k = int(np.argmin(ys))
    descending = np.all(np.diff(ys[: k + 1]) <= 1e-12 * np.abs(ys[0]) + 1e-30) if k > 0 else True
    ascending = np.all(np.diff(ys[k:]) >= -(1e-12 * np.abs(ys[0]) + 1e-30)) if k < n - 1 else True
    if not (descending and ascending):
        raise OptimizationError(
            "compensation-power objective is not unimodal on the bracket",
            samples=(xs, ys),
        )


def optimize_compensation_power(scene: TrapArrayScene) -> CompensationOptimum:
    """Golden-section minimization of the peak-to-peak spread over P_c.

    Bracket [0, 10 eta P] from the analytic intensity ratio; for zero
    displacement the result matches eta P to the convergence width.
    """
    ratio = required_intensity_ratio(scene.species, scene.omega_trap, scene.omega_comp)
    a, b = _shift_coefficients(scene)

    def objective(p_c):
        return float(np.ptp(a + p_c * b))

    hi = 10.0 * ratio.exact * scene.trap_beam.power
    _check_unimodal(objective, 0.0, hi)
    power, spread = _golden_section(objective, 0.0, hi)
    return CompensationOptimum(
        power=power,
        spread_hz=spread / TWO_PI,
        eta_exact=ratio.exact,
        eta_approximate=ratio.approximate,
    )


def build_trap_site(scene: TrapArrayScene, site: tuple[int, int], comp_power: float) -> TrapSite:
    """All derived per-trap quantities for one occupied site."""
    arr = scene.array
    p_trap = site_powers(scene.trap_beam, arr, [site])[0]
    intensity = site_peak_intensity(p_trap, arr, scene.transmission)
    depth = trap_depth(scene.species, scene.omega_trap, intensity)
    omega_r, omega_z = trap_frequencies(depth, arr.focal_waist, scene.trap_wavelength,
                                        scene.species.mass)
    delta_unc = differential_shift(scene.species, scene.omega_trap, intensity)
    p_comp = site_powers(scene.displaced_comp_beam(power=comp_power), arr, [site])[0]
    i_comp = site_peak_intensity(p_comp, arr, scene.transmission)
    delta_res = delta_unc + differential_shift(scene.species, scene.omega_comp, i_comp)
    return TrapSite(
        row=site[0],
        col=site[1],
        label=site_label(*site),
        power=float(p_trap),
        peak_intensity=float(intensity),
        depth=float(depth),
        omega_radial=omega_r,
        omega_axial=omega_z,
        delta_uncompensated=float(delta_unc),
        delta_residual=float(delta_res),
    )


def fit_misalignment(measured: ShiftMap, scene: TrapArrayScene, search_radius: float = 20e-6):
    """Fit the compensation-beam displacement that reproduces a measured map.

    Coarse grid then Nelder-Mead polish over d = (dx, dy); the compensation
    power is re-optimized (minimum peak-to-peak spread) at every candidate
    displacement, mirroring the experimental procedure, and the RMS
    difference between the modeled and measured maps is minimized.
    """
    if tuple(measured.labels) != scene.labels:
        raise MapError("measured map and scene do not share the same site set")
    target = measured.shifts_hz * TWO_PI
    if np.ptp(target) < TWO_PI * 1e-9:
        raise MapError("degenerate flat measured map; displacement is unconstrained")

    a, _ = _shift_coefficients(scene)
    hi = 10.0 * required_intensity_ratio(
        scene.species, scene.omega_trap, scene.omega_comp
    ).exact * scene.trap_beam.power

    def model_at(displacement):
        # displacement is the total beam offset (it overrides, not augments,
        # the displacement stored in the scene)
        _, b = _shift_coefficients(scene, displacement=displacement)
        p_c, _ = _golden_section(lambda p: float(np.ptp(a + p * b)), 0.0, hi)
        return a + p_c * b, p_c

    def objective(displacement):
        model, _ = model_at(displacement)
        return float(np.sqrt(np.mean((model - target) ** 2)))

    grid = np.linspace(-search_radius, search_radius, 9)
    best = None
    for dx in grid:
        for dy in grid:
            value = objective((dx, dy))
            if best is None or value < best[0]:
                best = (value, (dx, dy))
    x0 = np.array(best[1])
    step = search_radius / 8.0
    simplex = np.array([x0, x0 + [step, 0.0], x0 + [0.0, step]])
    result = minimize(
        objective,
        x0,
        method="Nelder-Mead",
        options={"initial_simplex": simplex, "xatol": 1e-8, "fatol": 1e-6, "maxiter": 400},
    )
    d_fit = (float(result.x[0]), float(result.x[1]))
    model, p_c = model_at(d_fit)
    # centered-beam prediction: displacement zeroed but the fitted power kept
    _, b_centered = _shift_coefficients(scene, displacement=(0.0, 0.0))
    centered_model = a + p_c * b_centered
    return MisalignmentFit(
        displacement=d_fit,
        power=p_c,
        residual_rms_hz=float(np.sqrt(np.mean((model - target) ** 2))) / TWO_PI,
        spread_hz=float(np.ptp(model)) / TWO_PI,
        centered_spread_hz=float(np.ptp(centered_model)) / TWO_PI,
    )


# ---------------------------------------------------------------------------
# map file I/O: CSV plus JSON metadata sidecar

def write_shift_map(path, shift_map: ShiftMap, extra_metadata: dict | None = None) -> None:
    path = str(path)
    meta = dict(shift_map.metadata)
    if extra_metadata:
        meta.update(extra_metadata)
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}: {meta[key]}\n")
        fh.write("row,col,label,shift_hz\n")
        for r, c, lbl, s in zip(shift_map.rows, shift_map.cols, shift_map.labels,
                                shift_map.shifts_hz):
            fh.write(f"{int(r)},{int(c)},{lbl},{float(s)!r}\n")
    with open(path + ".meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def read_shift_map(path) -> ShiftMap:
    rows, cols, labels, shifts = [], [], [], []
    meta = {}
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
                continue
            if not line or line.startswith("row,"):
                continue
            try:
                r, c, lbl, s = line.split(",")
                rows.append(int(r))
                cols.append(int(c))
                labels.append(lbl)
                shifts.append(float(s))
            except ValueError as exc:
                raise MapError(f"malformed shift-map line {line!r}") from exc
    return ShiftMap(
        rows=np.array(rows),
        cols=np.array(cols),
        labels=tuple(labels),
        shifts_hz=np.array(shifts),
        metadata=meta,
    )
