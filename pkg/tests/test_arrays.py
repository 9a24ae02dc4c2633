import numpy as np
import pytest

from trapsync.arrays import (
    MapError,
    ShiftMap,
    array_shift_map,
    build_trap_site,
    fit_misalignment,
    optimize_compensation_power,
    read_shift_map,
    scene_hash,
    spread_metric,
    write_shift_map,
)
from trapsync.beams import GaussianBeam, MicrolensArray, TrapArrayScene
from trapsync.constants import KB, TWO_PI


def centered_scene(species, displacement=(0.0, 0.0), rows=9, cols=9):
    array = MicrolensArray(pitch=125e-6, aperture_radius=50e-6, rows=rows, cols=cols,
                           demagnification=0.4688, focal_waist=3.7e-6)
    center = ((cols - 1) / 2 * 125e-6, (rows - 1) / 2 * 125e-6)
    return TrapArrayScene(
        species=species,
        trap_beam=GaussianBeam(41e-3, 500e-6, center),
        trap_wavelength=810.1e-9,
        comp_beam=GaussianBeam(3e-9, 500e-6, center),
        comp_wavelength=794.9785e-9,
        comp_displacement=displacement,
        array=array,
        occupied=tuple((r, c) for r in range(rows) for c in range(cols)),
    )


def toy_map(shifts, labels=None):
    n = len(shifts)
    return ShiftMap(
        rows=np.zeros(n, dtype=int),
        cols=np.arange(n),
        labels=tuple(labels or [f"a{i + 1}" for i in range(n)]),
        shifts_hz=np.asarray(shifts, dtype=float),
        metadata={},
    )


# --- spread metric ----------------------------------------------------------

def test_spread_constant_map():
    stats = spread_metric(toy_map([5.0, 5.0, 5.0]))
    assert stats.peak_to_peak_hz == 0.0
    assert stats.mean_hz == 5.0
    assert stats.std_hz == 0.0


def test_spread_two_sites():
    stats = spread_metric(toy_map([10.0, -10.0]))
    assert stats.peak_to_peak_hz == 20.0
    assert stats.mean_hz == 0.0
    assert stats.std_hz == 10.0


def test_empty_map_rejected():
    with pytest.raises(MapError):
        ShiftMap(rows=np.array([]), cols=np.array([]), labels=(),
                 shifts_hz=np.array([]), metadata={})


# --- shift maps ----------------------------------------------------------------

def test_uncompensated_default_scene_spread(default_scene):
    stats = spread_metric(array_shift_map(default_scene, 0.0))
    assert stats.peak_to_peak_hz == pytest.approx(286.3, rel=0.25)
    assert stats.mean_hz < 0.0  # red detuning


def test_map_linear_in_power(default_scene):
    base = array_shift_map(default_scene, 0.0).shifts_hz
    one = array_shift_map(default_scene, 1e-9).shifts_hz
    three = array_shift_map(default_scene, 3e-9).shifts_hz
    np.testing.assert_allclose(three - base, 3 * (one - base), rtol=1e-9)


def test_negative_power_rejected(default_scene):
    with pytest.raises(ValueError):
        array_shift_map(default_scene, -1e-9)


def test_exact_cancellation_for_aligned_beams(species):
    from trapsync.stark import required_intensity_ratio

    scene = centered_scene(species, displacement=(0.0, 0.0))
    eta = required_intensity_ratio(species, scene.omega_trap, scene.omega_comp).exact
    stats = spread_metric(array_shift_map(scene, eta * scene.trap_beam.power))
    assert stats.peak_to_peak_hz < 1e-6
    assert abs(stats.mean_hz) < 1e-6


def test_mirror_symmetric_displacements(species):
    plus = array_shift_map(centered_scene(species, (8e-6, 0.0)), 3e-9)
    minus = array_shift_map(centered_scene(species, (-8e-6, 0.0)), 3e-9)
    grid_plus = plus.shifts_hz.reshape(9, 9)
    grid_minus = minus.shifts_hz.reshape(9, 9)
    np.testing.assert_allclose(grid_plus, grid_minus[:, ::-1], rtol=1e-9)


# --- power optimization -----------------------------------------------------------

def test_optimum_matches_analytic_ratio_for_aligned_beams(species):
    scene = centered_scene(species)
    opt = optimize_compensation_power(scene)
    assert opt.power / scene.trap_beam.power == pytest.approx(opt.eta_exact, rel=1e-3)
    assert opt.spread_hz < 0.05  # residual from the finite search width


def test_optimum_near_measured_power(default_scene):
    opt = optimize_compensation_power(default_scene)
    assert 4.3e-9 / 2 <= opt.power <= 4.3e-9 * 2
    stats = spread_metric(array_shift_map(default_scene, opt.power))
    assert stats.peak_to_peak_hz == pytest.approx(15.7, rel=0.5)


def test_optimum_is_minimal_and_idempotent(default_scene):
    opt = optimize_compensation_power(default_scene)

    def spread_at(p):
        return spread_metric(array_shift_map(default_scene, p)).peak_to_peak_hz

    assert opt.spread_hz <= spread_at(0.0)
    assert opt.spread_hz <= spread_at(2 * opt.power)
    again = optimize_compensation_power(default_scene)
    assert again.power == pytest.approx(opt.power, rel=1e-6)


def test_build_trap_site_values(default_scene):
    opt = optimize_compensation_power(default_scene)
    site = build_trap_site(default_scene, (4, 4), opt.power)
    assert site.label == "e5"
    assert site.depth == pytest.approx(KB * 40e-6, rel=0.25)
    assert site.omega_radial > site.omega_axial
    assert site.delta_uncompensated < 0.0
    assert abs(site.delta_residual) < abs(site.delta_uncompensated)


def test_residual_below_bare_shift_around_optimum(default_scene):
    # anywhere within (0, 2x) of the optimal power the residual stays smaller
    # than the uncompensated shift
    opt = optimize_compensation_power(default_scene)
    for factor in (0.25, 0.5, 1.0, 1.5, 1.95):
        site = build_trap_site(default_scene, (4, 4), factor * opt.power)
        assert abs(site.delta_residual) <= abs(site.delta_uncompensated)


# --- misalignment fit ---------------------------------------------------------------

def test_misalignment_fit_recovers_displacement(default_scene):
    opt = optimize_compensation_power(default_scene)
    measured = array_shift_map(default_scene, opt.power)
    fit = fit_misalignment(measured, default_scene)
    dx, dy = fit.displacement
    assert np.hypot(dx - (-8e-6), dy) < 1e-6
    assert fit.residual_rms_hz < 0.1


def test_misalignment_fit_null_case(species):
    scene = centered_scene(species, displacement=(0.0, 0.0))
    opt = optimize_compensation_power(scene)
    measured = array_shift_map(scene, opt.power)
    # a perfectly flat map pins no displacement; perturb one entry slightly
    shifts = measured.shifts_hz.copy()
    shifts[0] += 1e-4
    measured = ShiftMap(measured.rows, measured.cols, measured.labels, shifts,
                        measured.metadata)
    fit = fit_misalignment(measured, scene)
    assert np.hypot(*fit.displacement) < 0.5e-6


def test_misalignment_centered_prediction(default_scene):
    opt = optimize_compensation_power(default_scene)
    measured = array_shift_map(default_scene, opt.power)
    fit = fit_misalignment(measured, default_scene)
    assert fit.centered_spread_hz == pytest.approx(1.7, rel=0.5)


def test_misalignment_rejects_flat_or_mismatched_maps(default_scene):
    flat = ShiftMap(np.array([r for r, _ in default_scene.occupied]),
                    np.array([c for _, c in default_scene.occupied]),
                    default_scene.labels, np.zeros(54), {})
    with pytest.raises(MapError, match="flat"):
        fit_misalignment(flat, default_scene)
    with pytest.raises(MapError, match="site set"):
        fit_misalignment(toy_map([1.0, 2.0]), default_scene)


# --- file round trip -----------------------------------------------------------------

def test_shift_map_round_trip(tmp_path, default_scene):
    original = array_shift_map(default_scene, 2e-9)
    path = tmp_path / "map.csv"
    write_shift_map(path, original, {"seed": 1})
    again = read_shift_map(path)
    np.testing.assert_array_equal(again.shifts_hz, original.shifts_hz)
    assert again.labels == original.labels
    assert (path.parent / "map.csv.meta.json").exists()
    assert again.metadata["scene_hash"] == scene_hash(default_scene)


def test_scene_hash_sensitivity(default_scene, species):
    other = centered_scene(species)
    assert scene_hash(default_scene) != scene_hash(other)
    assert scene_hash(default_scene) == scene_hash(default_scene)
