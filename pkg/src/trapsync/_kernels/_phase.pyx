# Compiled phase-average kernels: trigonometric moments of per-atom phases
# over an ensemble, evaluated on a time grid. Signatures mirror
# numpy_backend; see there for the phase conventions.

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def ramsey_phase_average(double[::1] rates, double[::1] times):
    cdef Py_ssize_t n = rates.shape[0]
    cdef Py_ssize_t nt = times.shape[0]
    cdef cnp.ndarray[double, ndim=1] mc = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] ms = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] mc2 = np.zeros(nt)
    cdef double[::1] vc = mc, vs = ms, vc2 = mc2
    cdef Py_ssize_t k, i
    cdef double ph, c
    for k in range(n):
        for i in range(nt):
            ph = rates[k] * times[i]
            c = cos(ph)
            vc[i] += c
            vs[i] += sin(ph)
            vc2[i] += c * c
    return mc / n, ms / n, mc2 / n


def ramsey_heated_phase_average(double[::1] rates, double[::1] sens, double edot,
                                double[::1] jump_times, double[::1] jump_sizes,
                                long long[::1] offsets, double[::1] times):
    cdef Py_ssize_t n = sens.shape[0]
    cdef Py_ssize_t nt = times.shape[0]
    cdef cnp.ndarray[double, ndim=1] mc = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] ms = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] mc2 = np.zeros(nt)
    cdef double[::1] vc = mc, vs = ms, vc2 = mc2
    cdef Py_ssize_t k, i
    cdef long long j
    cdef double t, ph, c, heat, u
    for k in range(n):
        for i in range(nt):
            t = times[i]
            heat = 0.5 * edot * t * t
            for j in range(offsets[k], offsets[k + 1]):
                u = jump_times[j]
                if u >= t:
                    break  # jumps sorted ascending
                heat += jump_sizes[j] * (t - u)
            ph = rates[k] * t + sens[k] * heat
            c = cos(ph)
            vc[i] += c
            vs[i] += sin(ph)
            vc2[i] += c * c
    return mc / n, ms / n, mc2 / n


def echo_phase_average(double[::1] sens, double edot,
                       double[::1] jump_times, double[::1] jump_sizes,
                       long long[::1] offsets, double[::1] times):
    cdef Py_ssize_t n = sens.shape[0]
    cdef Py_ssize_t nt = times.shape[0]
    cdef cnp.ndarray[double, ndim=1] mc = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] ms = np.zeros(nt)
    cdef cnp.ndarray[double, ndim=1] mc2 = np.zeros(nt)
    cdef double[::1] vc = mc, vs = ms, vc2 = mc2
    cdef Py_ssize_t k, i
    cdef long long j
    cdef double t, ph, c, heat, u, w
    for k in range(n):
        for i in range(nt):
            t = times[i]
            heat = 0.25 * edot * t * t
            for j in range(offsets[k], offsets[k + 1]):
                u = jump_times[j]
                if u >= t:
                    break
                w = t - u
                if u < w:
                    w = u
                heat += jump_sizes[j] * w
            ph = sens[k] * heat
            c = cos(ph)
            vc[i] += c
            vs[i] += sin(ph)
            vc2[i] += c * c
    return mc / n, ms / n, mc2 / n
