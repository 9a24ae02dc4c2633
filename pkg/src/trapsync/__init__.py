"""trapsync: differential light-shift compensation for dipole-trap arrays.

Computes per-site AC-Stark and differential clock shifts in a
microlens-generated trap array, finds the compensation-field power that
synchronizes the transition frequencies across the array, and simulates
Ramsey / spin-echo dephasing of the trapped thermal ensembles.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: F401
