"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time); set FEDSILO_PURE=1 to skip compilation explicitly.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FEDSILO_PURE"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "fedsilo._kernels._core",
                    ["src/fedsilo/_kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython/numpy at build time: ship the pure-Python backend only.
        ext_modules = []

setup(ext_modules=ext_modules)
