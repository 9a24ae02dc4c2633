"""Ramsey and spin-echo sequences on thermal ensembles, and trace fitting.

Pulses are ideal instantaneous rotations; only the free evolution between
them is simulated. Each atom k accumulates phase at the rate

    rate_k = delta_RL + delta_B + extra + delta(E_k)

where delta(E_k) is the site's thermally averaged differential shift. The
lower-state population convention is P0(t) = (1 - <cos phi>)/2, so P0(0) = 0
and the fringe appears at the ensemble-mean rate. delta_RL is the intentional
detuning of the coupling field; choose it large enough that the total rate
stays positive, then the fitted fringe frequency minus delta_RL and delta_B
recovers the (signed) light shift.

A spin echo inserts a state-inverting pulse at half the free-evolution time,
refocusing every static rate exactly; only energy changes during the
sequence (the heating model: deterministic drift plus Poisson jumps of
exponentially distributed size) survive, so with zero heating the echo
contrast is identically 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import hilbert

from . import _kernels
from .trap import ThermalEnsemble, effective_detuning

RAMSEY = "ramsey"
SPIN_ECHO = "spin_echo"

ENVELOPE_FAMILIES = ("exponential", "inhomogeneous", "stretched")

# 1/e time of (1 + (t/tau)^2)^(-3/2) in units of tau
INHOMOGENEOUS_1E = float(np.sqrt(np.exp(2.0 / 3.0) - 1.0))


class FitError(RuntimeError):
    """Fit did not converge or the trace is degenerate."""


class SequenceError(ValueError):
    """Inconsistent pulse sequence / ensemble combination."""


@dataclass(frozen=True)
class PulseSequence:
    kind: str                    # "ramsey" | "spin_echo"
    delta_rl: float              # rad/s, intentional drive detuning
    times: np.ndarray            # s, strictly increasing free-evolution times
    delta_b: float = 0.0         # rad/s, second-order Zeeman offset
    extra_offset: float = 0.0    # rad/s, any additional static detuning
    compensated: bool = False    # use the site's residual shift instead of the bare one
    site_label: Optional[str] = None

    def __post_init__(self):
        if self.kind not in (RAMSEY, SPIN_ECHO):
            raise SequenceError(f"unknown sequence kind {self.kind!r}")
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size < 2:
            raise SequenceError("time grid must be a 1D array with at least two points")
        if t[0] < 0.0 or np.any(np.diff(t) <= 0.0):
            raise SequenceError("time grid must start at or above 0 and increase strictly")
        object.__setattr__(self, "times", t)


@dataclass(frozen=True)
class HeatingModel:
    """Irreversible energy gain: linear drift plus Poisson jumps.

    A pure drift is common to all atoms and refocuses into a deterministic
    phase, so the jumps are what actually decay the echo contrast.
    """

    energy_rate: float = 0.0   # J/s
    jump_rate: float = 0.0     # 1/s
    jump_energy: float = 0.0   # J, mean of the exponential jump size

    def __post_init__(self):
        if self.energy_rate < 0.0 or self.jump_rate < 0.0 or self.jump_energy < 0.0:
            raise ValueError("heating parameters must be non-negative")

    @property
    def is_zero(self) -> bool:
        return self.energy_rate == 0.0 and (self.jump_rate == 0.0 or self.jump_energy == 0.0)


@dataclass(frozen=True)
class FitResult:
    envelope: str
    frequency: float          # rad/s
    amplitude: float
    offset: float
    phase: float
    tau: float                # s, envelope scale parameter
    t_1e: float               # s, 1/e time of the envelope
    beta: Optional[float]     # stretched exponent, None otherwise
    residual_rms: float
    covariance: np.ndarray

    def to_record(self) -> dict:
        errs = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        rec = {
            "envelope": self.envelope,
            "frequency_hz": self.frequency / (2.0 * np.pi),
            "frequency_err_hz": float(errs[1]) / (2.0 * np.pi),
            "amplitude": self.amplitude,
            "offset": self.offset,
            "phase_rad": self.phase,
            "tau_s": self.tau,
            "tau_err_s": float(errs[2]),
            "t_1e_s": self.t_1e,
            "residual_rms": self.residual_rms,
        }
        if self.beta is not None:
            rec["beta"] = self.beta
        return rec


@dataclass
class SpectroscopyResult:
    kind: str
    times: np.ndarray
    population: np.ndarray
    population_stderr: np.ndarray
    contrast: np.ndarray
    fit: Optional[FitResult] = None
    metadata: dict = field(default_factory=dict)


def _static_rates(ensemble: ThermalEnsemble, seq: PulseSequence) -> np.ndarray:
    site = ensemble.site
    delta_peak = site.delta_residual if seq.compensated else site.delta_uncompensated
    thermal = effective_detuning(ensemble.energies, site.depth, delta_peak)
    return seq.delta_rl + seq.delta_b + seq.extra_offset + thermal


def _check_site(ensemble: ThermalEnsemble, seq: PulseSequence) -> None:
    if seq.site_label is not None and seq.site_label != ensemble.site.label:
        raise SequenceError(
            f"sequence targets site {seq.site_label!r} but the ensemble belongs "
            f"to {ensemble.site.label!r}"
        )


def _sample_jumps(heating: HeatingModel, t_max: float, n_atoms: int, seed: int):
    """Per-atom Poisson jump times (sorted) and sizes over [0, t_max]."""
    rng = np.random.Generator(np.random.Philox(key=[seed & (2**64 - 1), 0x4845415421]))
    counts = rng.poisson(heating.jump_rate * t_max, n_atoms)
    offsets = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    total = int(offsets[-1])
    times = rng.random(total) * t_max
    sizes = rng.exponential(heating.jump_energy, total) if heating.jump_energy > 0 else np.zeros(total)
    order = np.lexsort((times, np.repeat(np.arange(n_atoms), counts)))
    return times[order], sizes[order], offsets


def _result_from_moments(kind, times, moments, n_atoms, metadata) -> SpectroscopyResult:
    mean_cos, mean_sin, mean_cos_sq = moments
    population = 0.5 * (1.0 - mean_cos)
    var_cos = np.clip(mean_cos_sq - mean_cos**2, 0.0, None)
    stderr = 0.5 * np.sqrt(var_cos / n_atoms)
    contrast = np.hypot(mean_cos, mean_sin)
    return SpectroscopyResult(
        kind=kind,
        times=np.asarray(times, dtype=float),
        population=population,
        population_stderr=stderr,
        contrast=contrast,
        metadata=metadata,
    )


def ramsey_trace(
    ensemble: ThermalEnsemble, seq: PulseSequence, heating: Optional[HeatingModel] = None
) -> SpectroscopyResult:
    """Free-evolution Ramsey trace P0(t) for one thermal ensemble."""
    _check_site(ensemble, seq)
    if seq.kind != RAMSEY:
        raise SequenceError(f"ramsey_trace called with a {seq.kind!r} sequence")
    rates = _static_rates(ensemble, seq)
    site = ensemble.site
    if heating is None or heating.is_zero:
        moments = _kernels.ramsey_phase_average(rates, seq.times)
    else:
        delta_peak = site.delta_residual if seq.compensated else site.delta_uncompensated
        sens = np.full(ensemble.n_atoms, -delta_peak / (2.0 * site.depth))
        jt, js, offs = _sample_jumps(heating, float(seq.times[-1]), ensemble.n_atoms, ensemble.seed)
        moments = _kernels.ramsey_heated_phase_average(
            rates, sens, heating.energy_rate, jt, js, offs, seq.times
        )
    meta = {"site": site.label, "kind": RAMSEY, "n_atoms": ensemble.n_atoms, "seed": ensemble.seed}
    return _result_from_moments(RAMSEY, seq.times, moments, ensemble.n_atoms, meta)


def spin_echo_trace(
    ensemble: ThermalEnsemble, seq: PulseSequence, heating: HeatingModel
) -> SpectroscopyResult:
    """Spin-echo trace: the pi pulse sits at half of each total free time.

    Static detunings refocus exactly; with zero heating the contrast is 1 at
    every time. With heating the contrast decays monotonically in expectation.
    """
    _check_site(ensemble, seq)
    if seq.kind != SPIN_ECHO:
        raise SequenceError(f"spin_echo_trace called with a {seq.kind!r} sequence")
    site = ensemble.site
    delta_peak = site.delta_residual if seq.compensated else site.delta_uncompensated
    sens = np.full(ensemble.n_atoms, -delta_peak / (2.0 * site.depth))
    if heating is None or heating.is_zero:
        jt = np.zeros(0)
        js = np.zeros(0)
        offs = np.zeros(ensemble.n_atoms + 1, dtype=np.int64)
        edot = 0.0
    else:
        jt, js, offs = _sample_jumps(heating, float(seq.times[-1]), ensemble.n_atoms, ensemble.seed)
        edot = heating.energy_rate
    moments = _kernels.echo_phase_average(sens, edot, jt, js, offs, seq.times)
    meta = {"site": site.label, "kind": SPIN_ECHO, "n_atoms": ensemble.n_atoms, "seed": ensemble.seed}
    return _result_from_moments(SPIN_ECHO, seq.times, moments, ensemble.n_atoms, meta)


# ---------------------------------------------------------------------------
# fitting

def _envelope(name: str):
    if name == "exponential":
        return lambda t, tau: np.exp(-t / tau)
    if name == "inhomogeneous":
        return lambda t, tau: (1.0 + (t / tau) ** 2) ** -1.5
    if name == "stretched":
        return lambda t, tau, beta: np.exp(-((t / tau) ** beta))
    raise ValueError(f"unknown envelope family {name!r}; choose from {ENVELOPE_FAMILIES}")


def _envelope_1e_time(name: str, tau: float, beta: Optional[float]) -> float:
    if name == "inhomogeneous":
        return tau * INHOMOGENEOUS_1E
    return tau


def _initial_guess(times, values):
    """FFT peak for the frequency, log-envelope slope for the decay time."""
    values = np.asarray(values, dtype=float)
    offset = float(np.mean(values))
    amp = 0.5 * float(np.ptp(values))
    detrended = values - offset
    dt = float(np.median(np.diff(times)))
    spectrum = np.abs(np.fft.rfft(detrended))
    freqs = np.fft.rfftfreq(values.size, dt)
    k = int(np.argmax(spectrum[1:]) + 1) if spectrum.size > 1 else 0
    omega0 = 2.0 * np.pi * freqs[k]
    envelope = np.abs(hilbert(detrended))
    # late-time envelope slope; guard against zeros and noise
    good = envelope > max(1e-3 * amp, 1e-30)
    tau0 = times[-1] / 3.0
    if np.count_nonzero(good) > 4:
        slope = np.polyfit(times[good], np.log(envelope[good]), 1)[0]
        if slope < 0:
            tau0 = min(max(-1.0 / slope, dt), 100.0 * times[-1])
    phase0 = float(np.angle(np.sum(detrended * np.exp(-1j * omega0 * times))))
    return amp, omega0, tau0, phase0, offset


def fit_decaying_oscillation(
    times, values, envelope: str = "inhomogeneous", stderr=None, max_evals: int = 20000
) -> FitResult:
    """Least-squares fit of A C(t) cos(w t + phi) + B with the chosen envelope.

    The envelope family is always explicit; nothing is auto-selected.
    Raises FitError on a flat trace or when the optimizer does not converge.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size != values.size or times.size < 8:
        raise FitError("need at least 8 samples to fit a decaying oscillation")
    if np.ptp(values) < 1e-12:
        raise FitError("degenerate flat trace: nothing to fit")
    env = _envelope(envelope)
    stretched = envelope == "stretched"

    if stretched:
        def model(t, amp, omega, tau, phase, offset, beta):
            return amp * env(t, tau, beta) * np.cos(omega * t + phase) + offset
    else:
        def model(t, amp, omega, tau, phase, offset):
            return amp * env(t, tau) * np.cos(omega * t + phase) + offset

    amp0, omega0, tau0, phase0, offset0 = _initial_guess(times, values)
    dt = float(np.median(np.diff(times)))
    p0 = [amp0, omega0, tau0, phase0, offset0]
    lower = [0.0, 0.0, dt * 1e-2, -2.0 * np.pi, np.min(values) - 1.0]
    upper = [4.0 * max(amp0, 1e-12), np.pi / dt, 1e4 * times[-1], 2.0 * np.pi, np.max(values) + 1.0]
    if stretched:
        p0.append(1.0)
        lower.append(0.2)
        upper.append(4.0)

    try:
        popt, pcov = curve_fit(
            model,
            times,
            values,
            p0=p0,
            sigma=stderr if stderr is not None and np.all(np.asarray(stderr) > 0) else None,
            bounds=(lower, upper),
            maxfev=max_evals,
        )
    except RuntimeError as exc:
        raise FitError(
            f"decaying-oscillation fit did not converge (start {p0}, envelope "
            f"{envelope!r}): {exc}"
        ) from exc

    beta = float(popt[5]) if stretched else None
    residual = model(times, *popt) - values
    return FitResult(
        envelope=envelope,
        amplitude=float(popt[0]),
        frequency=float(popt[1]),
        tau=float(popt[2]),
        phase=float(popt[3]),
        offset=float(popt[4]),
        beta=beta,
        t_1e=_envelope_1e_time(envelope, float(popt[2]), beta),
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        covariance=pcov,
    )


def fit_contrast_envelope(times, contrast, envelope: str = "exponential") -> FitResult:
    """Fit A C(t) to a carrier-free contrast trace (spin-echo decay)."""
    times = np.asarray(times, dtype=float)
    contrast = np.asarray(contrast, dtype=float)
    if times.size != contrast.size or times.size < 4:
        raise FitError("need at least 4 samples to fit an envelope")
    if np.ptp(contrast) < 1e-12:
        raise FitError("degenerate flat contrast: nothing to fit")
    env = _envelope(envelope)
    stretched = envelope == "stretched"
    if stretched:
        def model(t, amp, tau, beta):
            return amp * env(t, tau, beta)
        p0 = [float(contrast[0]), times[-1] / 2.0, 1.0]
        bounds = ([0.0, times[1] * 1e-2, 0.2], [2.0, 1e4 * times[-1], 4.0])
    else:
        def model(t, amp, tau):
            return amp * env(t, tau)
        p0 = [float(contrast[0]), times[-1] / 2.0]
        bounds = ([0.0, times[1] * 1e-2], [2.0, 1e4 * times[-1]])
    try:
        popt, pcov = curve_fit(model, times, contrast, p0=p0, bounds=bounds, maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"envelope fit did not converge: {exc}") from exc
    beta = float(popt[2]) if stretched else None
    residual = model(times, *popt) - contrast
    cov = np.zeros((6, 6))
    cov[0, 0] = pcov[0, 0]
    cov[2, 2] = pcov[1, 1]
    return FitResult(
        envelope=envelope,
        amplitude=float(popt[0]),
        frequency=0.0,
        tau=float(popt[1]),
        phase=0.0,
        offset=0.0,
        beta=beta,
        t_1e=_envelope_1e_time(envelope, float(popt[1]), beta),
        residual_rms=float(np.sqrt(np.mean(residual**2))),
        covariance=cov,
    )


def extract_site_shift(fit, delta_b: float, delta_rl: float) -> float:
    """Light-shift estimate: fitted fringe frequency minus delta_RL and delta_B."""
    omega = fit.frequency if isinstance(fit, FitResult) else float(fit)
    return omega - delta_rl - delta_b


# ---------------------------------------------------------------------------
# trace file I/O

def write_trace(path, result: SpectroscopyResult, metadata: Optional[dict] = None) -> None:
    """CSV trace with commented metadata header (time_s, population, population_stderr)."""
    meta = dict(result.metadata)
    if metadata:
        meta.update(metadata)
    with open(path, "w", newline="") as fh:
        for key in sorted(meta):
            fh.write(f"# {key}: {meta[key]}\n")
        fh.write("time_s,population,population_stderr\n")
        for t, p, s in zip(result.times, result.population, result.population_stderr):
            fh.write(f"{float(t)!r},{float(p)!r},{float(s)!r}\n")


def read_trace(path):
    """Invert write_trace: returns (times, population, stderr, metadata)."""
    meta = {}
    rows = []
    with open(path, "r") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            elif line and not line.startswith("time_s"):
                rows.append([float(x) for x in line.split(",")])
    data = np.asarray(rows)
    return data[:, 0], data[:, 1], data[:, 2], meta


def write_fit_report(path, records) -> None:
    with open(path, "w") as fh:
        json.dump(records, fh, indent=2, sort_keys=True)
        fh.write("\n")
