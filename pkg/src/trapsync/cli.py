"""Command-line front end.

Subcommands: map | ramsey | echo | optimize | fit-misalignment | validate.
Configuration comes from a YAML file (--config, else $TRAPSYNC_CONFIG_DIR/
config.yaml, else the packaged default); species and scene files resolve
relative to the config file with the packaged data directory as fallback.
Every output file carries the tool version, a hash of the resolved
configuration, and the seed, and identical (config, seed) pairs produce
byte-identical outputs.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .beams import BeamGeometryError, TrapArrayScene, load_scene
from .species import SpeciesError, load_species, second_order_zeeman_shift
from .stark import (
    CompensationWindowError,
    NoSolutionError,
    ResonanceError,
    mean_scattering_rate,
    required_intensity_ratio,
    scattering_ratio,
)
from .arrays import (
    MapError,
    OptimizationError,
    array_shift_map,
    build_trap_site,
    fit_misalignment,
    optimize_compensation_power,
    read_shift_map,
    spread_metric,
    write_shift_map,
)
from .trap import BlueDetuningError, ThermalEnsemble, site_stream_seed
from .spectroscopy import (
    FitError,
    HeatingModel,
    PulseSequence,
    RAMSEY,
    SPIN_ECHO,
    SpectroscopyResult,
    extract_site_shift,
    fit_contrast_envelope,
    fit_decaying_oscillation,
    ramsey_trace,
    spin_echo_trace,
    write_fit_report,
    write_trace,
)
from .constants import TWO_PI

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_ERRORS = (SpeciesError, BeamGeometryError, MapError, KeyError, TypeError, OSError)
_NUMERICAL_ERRORS = (
    FitError,
    OptimizationError,
    ResonanceError,
    CompensationWindowError,
    NoSolutionError,
    BlueDetuningError,
)


class ConfigError(ValueError):
    pass


def _packaged_data() -> Path:
    return Path(resources.files("trapsync") / "data")


def load_config(path: str | None):
    """Resolved configuration dict plus the directory used for relative paths."""
    if path is not None:
        cfg_path = Path(path)
    elif os.environ.get("TRAPSYNC_CONFIG_DIR"):
        cfg_path = Path(os.environ["TRAPSYNC_CONFIG_DIR"]) / "config.yaml"
    else:
        cfg_path = _packaged_data() / "config.yaml"
    if not cfg_path.is_file():
        raise ConfigError(f"configuration file {cfg_path} does not exist")
    with open(cfg_path, "r") as fh:
        cfg = yaml.safe_load(fh)
    if not isinstance(cfg, dict):
        raise ConfigError(f"configuration {cfg_path} is not a mapping")
    cfg["_base_dir"] = str(cfg_path.parent)
    return cfg


def _resolve(cfg: dict, key: str) -> Path:
    name = cfg.get(key)
    if name is None:
        raise ConfigError(f"configuration is missing '{key}'")
    for base in (Path(cfg["_base_dir"]), _packaged_data()):
        candidate = base / name
        if candidate.is_file():
            return candidate
    raise ConfigError(f"{key} '{name}' not found next to the config or in packaged data")


def config_hash(cfg: dict) -> str:
    view = {k: v for k, v in cfg.items() if not k.startswith("_")}
    return hashlib.sha256(json.dumps(view, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _load_context(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = int(args.seed)
    species = load_species(_resolve(cfg, "species_file"))
    scene = load_scene(_resolve(cfg, "scene_file"), species=species)
    if scene.trap_beam.power <= 0.0:
        raise ConfigError("trap beam power is zero: the scene contains no traps")
    return cfg, species, scene


def _out_dir(cfg, args) -> Path:
    out = Path(args.out) if args.out else Path(cfg.get("output_dir", "trapsync-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _metadata(cfg) -> dict:
    return {
        "tool_version": __version__,
        "config_hash": config_hash(cfg),
        "seed": cfg.get("seed", 0),
    }


def _comp_power(scene: TrapArrayScene, mode: str) -> float:
    """--compensation on|off|power=<W> -> compensation beam power in W."""
    if mode == "off":
        return 0.0
    if mode == "on":
        return optimize_compensation_power(scene).power
    if mode.startswith("power="):
        value = float(mode.split("=", 1)[1])
        if value < 0:
            raise ConfigError("compensation power must be >= 0")
        return value
    raise ConfigError(f"bad --compensation value {mode!r} (use on, off, or power=<W>)")


def _heating(cfg) -> HeatingModel:
    rec = cfg.get("heating", {}) or {}
    return HeatingModel(
        energy_rate=float(rec.get("energy_rate", 0.0)),
        jump_rate=float(rec.get("jump_rate_hz", 0.0)),
        jump_energy=float(rec.get("jump_energy_j", 0.0)),
    )


def _delta_b(cfg, species) -> float:
    return TWO_PI * second_order_zeeman_shift(species, float(cfg.get("bias_field_t", 0.0)))


def _select_sites(scene: TrapArrayScene, spec: str):
    if spec == "all":
        return list(scene.occupied)
    labels = [s.strip() for s in spec.split(",") if s.strip()]
    if not labels:
        raise ConfigError("empty site list")
    return [scene.site_index(lbl) for lbl in labels]


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    cfg, species, scene = _load_context(args)
    print(f"config hash {config_hash(cfg)}")
    print(f"species {species.name}: {len(species.lines)} lines, "
          f"hyperfine splitting {species.omega_hfs / TWO_PI / 1e9:.6f} GHz")
    print(f"scene: {scene.array.rows}x{scene.array.cols} grid, "
          f"{len(scene.occupied)} occupied sites, "
          f"trap {scene.trap_beam.power * 1e3:.1f} mW at {scene.trap_wavelength * 1e9:.1f} nm")
    print("configuration OK")
    return EXIT_OK


def cmd_map(args) -> int:
    cfg, species, scene = _load_context(args)
    uncomp = array_shift_map(scene, 0.0)
    ratio = required_intensity_ratio(species, scene.omega_trap, scene.omega_comp)
    power = _comp_power(scene, args.compensation)
    comp = array_shift_map(scene, power)
    s_unc, s_comp = spread_metric(uncomp), spread_metric(comp)

    out = _out_dir(cfg, args)
    meta = _metadata(cfg)
    write_shift_map(out / "uncompensated_map.csv", uncomp, meta)
    write_shift_map(out / "compensated_map.csv", comp, meta)
    summary = {
        "metadata": meta,
        "compensation_power_w": power,
        "eta_exact": ratio.exact,
        "eta_approximate": ratio.approximate,
        "uncompensated": vars(s_unc),
        "compensated": vars(s_comp),
        "reduction_factor": (s_unc.peak_to_peak_hz / s_comp.peak_to_peak_hz
                             if s_comp.peak_to_peak_hz > 0 else float("inf")),
    }
    with open(out / "map_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"uncompensated spread {s_unc.peak_to_peak_hz:.1f} Hz -> "
          f"compensated {s_comp.peak_to_peak_hz:.2f} Hz "
          f"(P_c = {power * 1e9:.2f} nW), files in {out}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    cfg, species, scene = _load_context(args)
    opt = optimize_compensation_power(scene)
    # scattering budget at the deepest occupied trap
    uncomp = array_shift_map(scene, 0.0)
    deepest = scene.occupied[int(np.argmin(uncomp.shifts_hz))]
    site = build_trap_site(scene, deepest, opt.power)
    rate_trap = mean_scattering_rate(species, scene.omega_trap, site.peak_intensity)
    rate_comp = mean_scattering_rate(
        species, scene.omega_comp, opt.eta_exact * site.peak_intensity
    )
    report = {
        "metadata": _metadata(cfg),
        "compensation_power_w": opt.power,
        "achieved_spread_hz": opt.spread_hz,
        "eta_exact": opt.eta_exact,
        "eta_approximate": opt.eta_approximate,
        "scattering": {
            "site": site.label,
            "trap_rate_per_s": rate_trap,
            "compensation_rate_per_s": rate_comp,
            "ratio": scattering_ratio(species, scene.omega_trap, scene.omega_comp,
                                      opt.eta_exact),
        },
    }
    out = _out_dir(cfg, args)
    with open(out / "optimize_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"P_c* = {opt.power * 1e9:.3f} nW, spread {opt.spread_hz:.2f} Hz, "
          f"eta = {opt.eta_exact:.3e} (approx {opt.eta_approximate:.3e})")
    return EXIT_OK


def _spectroscopy_run(args, kind: str) -> int:
    cfg, species, scene = _load_context(args)
    sites = _select_sites(scene, args.sites)
    power = _comp_power(scene, args.compensation)
    compensated = power > 0.0
    heating = _heating(cfg)
    delta_b = _delta_b(cfg, species)
    seed = int(cfg.get("seed", 0))
    n_atoms = int(cfg.get("atoms_per_site", 5000))
    temperature = float(cfg.get("temperature_k", 10e-6))

    if kind == RAMSEY:
        section = cfg["ramsey_compensated" if compensated else "ramsey_uncompensated"]
        times = np.arange(0.0, float(section["time_max_s"]), float(section["time_step_s"]))
        stream = 0
    else:
        section = cfg["echo"]
        times = np.linspace(float(section["time_min_s"]), float(section["time_max_s"]),
                            int(section["points"]))
        stream = 1
    delta_rl = TWO_PI * float(section["delta_rl_hz"])
    envelope = section.get("envelope", "inhomogeneous")
    seq = PulseSequence(kind, delta_rl, times, delta_b=delta_b, compensated=compensated)

    out = _out_dir(cfg, args)
    meta = _metadata(cfg)
    mode = "comp" if compensated else "unc"
    prefix = "ramsey" if kind == RAMSEY else "echo"
    records = {}
    populations = []
    stderr_sq = []
    contrasts = []
    for site_idx in sites:
        site = build_trap_site(scene, site_idx, power)
        ens = ThermalEnsemble.sample(site, temperature, n_atoms,
                                     site_stream_seed(seed, site.row, site.col, stream))
        if kind == RAMSEY:
            result = ramsey_trace(ens, seq, heating)
            fit = fit_decaying_oscillation(result.times, result.population, envelope,
                                           stderr=result.population_stderr)
            shift = extract_site_shift(fit, delta_b, delta_rl)
            record = fit.to_record()
            record["t2_star_s"] = fit.t_1e
            record["extracted_shift_hz"] = shift / TWO_PI
        else:
            result = spin_echo_trace(ens, seq, heating)
            fit = fit_contrast_envelope(result.times, result.contrast, envelope)
            record = fit.to_record()
            record["t2_prime_s"] = fit.t_1e
        records[site.label] = record
        populations.append(result.population)
        stderr_sq.append(result.population_stderr ** 2)
        contrasts.append(result.contrast)
        write_trace(out / f"{prefix}_{site.label}_{mode}.csv", result, meta)

    if args.sites == "all":
        # unweighted mean of the per-site population traces
        mean_pop = np.mean(populations, axis=0)
        mean_err = np.sqrt(np.sum(stderr_sq, axis=0)) / len(populations)
        ensemble = SpectroscopyResult(
            kind=kind, times=times, population=mean_pop, population_stderr=mean_err,
            contrast=np.mean(contrasts, axis=0),
            metadata={"site": "ensemble_average", "kind": kind},
        )
        write_trace(out / f"{prefix}_ensemble_{mode}.csv", ensemble, meta)
        if kind == RAMSEY:
            fit = fit_decaying_oscillation(times, mean_pop, envelope)
            rec = fit.to_record()
            rec["t2_star_s"] = fit.t_1e
        else:
            fit = fit_contrast_envelope(times, ensemble.contrast, envelope)
            rec = fit.to_record()
            rec["t2_prime_s"] = fit.t_1e
        records["ensemble_average"] = rec

    report = {"metadata": meta, "mode": mode, "sites": records}
    write_fit_report(out / f"{prefix}_fits_{mode}.json", report)
    print(f"{prefix}: {len(sites)} site(s), mode {mode}, results in {out}")
    return EXIT_OK


def cmd_ramsey(args) -> int:
    return _spectroscopy_run(args, RAMSEY)


def cmd_echo(args) -> int:
    return _spectroscopy_run(args, SPIN_ECHO)


def cmd_fit_misalignment(args) -> int:
    cfg, species, scene = _load_context(args)
    measured = read_shift_map(args.measured)
    fit = fit_misalignment(measured, scene)
    report = {
        "metadata": _metadata(cfg),
        "displacement_m": list(fit.displacement),
        "displacement_um": [d * 1e6 for d in fit.displacement],
        "compensation_power_w": fit.power,
        "residual_rms_hz": fit.residual_rms_hz,
        "spread_hz": fit.spread_hz,
        "centered_prediction_hz": fit.centered_spread_hz,
    }
    out = _out_dir(cfg, args)
    with open(out / "misalignment_report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"fitted displacement ({fit.displacement[0] * 1e6:.2f}, "
          f"{fit.displacement[1] * 1e6:.2f}) um, residual {fit.residual_rms_hz:.2f} Hz, "
          f"centered-beam prediction {fit.centered_spread_hz:.2f} Hz")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trapsync",
        description="Differential light-shift compensation for dipole-trap arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, sites=False, compensation=False):
        p.add_argument("--config", help="path to a YAML run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="RNG seed (overrides the config)")
        if sites:
            p.add_argument("--sites", default="all", help="comma-separated labels or 'all'")
        if compensation:
            p.add_argument("--compensation", default="on",
                           help="on | off | power=<W> (default on: optimized power)")

    common(sub.add_parser("validate", help="check config, species, and scene files"))
    common(sub.add_parser("map", help="write shift maps and spread summary"),
           compensation=True)
    common(sub.add_parser("optimize", help="optimal compensation power and scattering budget"))
    common(sub.add_parser("ramsey", help="Ramsey traces and fits"), sites=True,
           compensation=True)
    common(sub.add_parser("echo", help="spin-echo traces and fits"), sites=True,
           compensation=True)
    p_fit = sub.add_parser("fit-misalignment", help="fit beam displacement to a measured map")
    p_fit.add_argument("measured", help="measured shift-map CSV")
    common(p_fit)
    return parser


_HANDLERS = {
    "validate": cmd_validate,
    "map": cmd_map,
    "optimize": cmd_optimize,
    "ramsey": cmd_ramsey,
    "echo": cmd_echo,
    "fit-misalignment": cmd_fit_misalignment,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, *_CONFIG_ERRORS) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (*_NUMERICAL_ERRORS,) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
