# Builds the optional compiled phase-average kernels. If Cython or a C
# compiler is unavailable the install still succeeds and the package falls
# back to the pure-numpy backend at import time.
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "trapsync._kernels._phase",
                ["src/trapsync/_kernels/_phase.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except Exception as exc:  # pragma: no cover
    print(f"trapsync: skipping compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
