"""Builds the optional Cython kernels; the package still installs without them."""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("EWMAVOL_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython/numpy unavailable; installing pure-Python kernels only", file=sys.stderr)
    else:
        openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
        ext_modules = cythonize(
            [
                Extension(
                    "ewmavol._kernels",
                    ["src/ewmavol/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no -ffast-math / FMA contraction: results must match the numpy path
                    extra_compile_args=["-O3", "-ffp-contract=off"] + openmp,
                    extra_link_args=openmp,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
