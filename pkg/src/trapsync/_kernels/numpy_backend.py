"""Pure-numpy phase-average kernels (fallback backend).

Each function returns the first and second trigonometric moments of the
per-atom phase over the ensemble: (mean cos, mean sin, mean cos^2), one
value per requested time.

The heating contribution of a jump of size e at time u is piecewise linear
in the readout time t (Ramsey: e (t - u) for t > u; echo: e clip(t - u, 0, u)),
so the per-atom heat integral is accumulated exactly with searchsorted and
cumulative sums instead of looping over jumps.
"""

from __future__ import annotations

import numpy as np

_CHUNK_ELEMENTS = 4_000_000


def _moments(phases, axis=0):
    c = np.cos(phases)
    return c.mean(axis=axis), np.sin(phases).mean(axis=axis), (c * c).mean(axis=axis)


def ramsey_phase_average(rates, times):
    """Moments of phi_k(t) = rate_k * t over atoms."""
    rates = np.ascontiguousarray(rates, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    n = rates.size
    sums = [np.zeros(times.size) for _ in range(3)]
    step = max(1, _CHUNK_ELEMENTS // max(times.size, 1))
    for lo in range(0, n, step):
        phases = rates[lo : lo + step, None] * times[None, :]
        c = np.cos(phases)
        sums[0] += c.sum(axis=0)
        sums[1] += np.sin(phases).sum(axis=0)
        sums[2] += (c * c).sum(axis=0)
    return tuple(s / n for s in sums)


def _piecewise_heat(n_atoms, times, jump_times, jump_sizes, offsets, echo):
    """Per-atom, per-time heating integral Sum_j e_j w(u_j, t), exactly."""
    nt = times.size
    slope = np.zeros((n_atoms, nt + 1))
    intercept = np.zeros((n_atoms, nt + 1))
    atom = np.repeat(np.arange(n_atoms), np.diff(offsets))
    start = np.searchsorted(times, jump_times, side="left")
    np.add.at(slope, (atom, start), jump_sizes)
    np.add.at(intercept, (atom, start), -jump_sizes * jump_times)
    if echo:
        # the echo weight min(u, t - u) saturates at u once t >= 2u
        stop = np.searchsorted(times, 2.0 * jump_times, side="left")
        np.add.at(slope, (atom, stop), -jump_sizes)
        np.add.at(intercept, (atom, stop), 2.0 * jump_sizes * jump_times)
    np.cumsum(slope, axis=1, out=slope)
    np.cumsum(intercept, axis=1, out=intercept)
    return slope[:, :nt] * times[None, :] + intercept[:, :nt]


def ramsey_heated_phase_average(rates, sens, edot, jump_times, jump_sizes, offsets, times):
    """Moments of phi_k(t) = rate_k t + s_k (edot t^2/2 + sum_j e_j (t - u_j)_+)."""
    rates = np.ascontiguousarray(rates, dtype=float)
    sens = np.ascontiguousarray(sens, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    heat = _piecewise_heat(rates.size, times, np.asarray(jump_times, dtype=float),
                           np.asarray(jump_sizes, dtype=float),
                           np.asarray(offsets, dtype=np.int64), echo=False)
    phases = rates[:, None] * times[None, :] + sens[:, None] * (
        0.5 * edot * times[None, :] ** 2 + heat
    )
    return _moments(phases)


def echo_phase_average(sens, edot, jump_times, jump_sizes, offsets, times):
    """Moments of the spin-echo phase; static rates refocus and drop out.

    phi_k(t) = s_k (edot t^2/4 + sum_j e_j min(u_j, t - u_j)_+)
    """
    sens = np.ascontiguousarray(sens, dtype=float)
    times = np.ascontiguousarray(times, dtype=float)
    heat = _piecewise_heat(sens.size, times, np.asarray(jump_times, dtype=float),
                           np.asarray(jump_sizes, dtype=float),
                           np.asarray(offsets, dtype=np.int64), echo=True)
    phases = sens[:, None] * (0.25 * edot * times[None, :] ** 2 + heat)
    return _moments(phases)
