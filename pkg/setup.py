"""Build script: compiles the optional Cython kernel core.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here downgrades to a pure-Python install
rather than aborting.
"""

import numpy
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/taskcomm/_kernels/_core.pyx"],
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False, "cdivision": True},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    print(f"taskcomm: skipping compiled kernels ({exc}); numpy fallback will be used")
    ext_modules = []

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
