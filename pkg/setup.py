"""Build script for the optional compiled Monte Carlo kernels.

The package works without the extension (a pure-numpy backend is selected
at import time), so a failed compile should not block installation.
Set TENSORCAST_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("TENSORCAST_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "tensorcast._kernels._mc_cy",
                    ["src/tensorcast/_kernels/_mc_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    # -ffp-contract=off: no FMA contraction, so the compiled
                    # kernels stay bit-identical to the numpy backend.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
