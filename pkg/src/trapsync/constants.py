"""Physical constants (SI), taken from scipy.constants / CODATA 2018."""

import scipy.constants as _const

C = _const.c                    # m/s, speed of light
HBAR = _const.hbar              # J s
H = _const.h                    # J s
KB = _const.k                   # J/K, Boltzmann constant
AMU = _const.physical_constants["atomic mass constant"][0]  # kg
MU_B = _const.physical_constants["Bohr magneton"][0]        # J/T

TWO_PI = 2.0 * _const.pi
