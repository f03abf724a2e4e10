"""Build script: compiles the optional Cython kernel.

The package works without the extension (a numpy fallback is selected at
import time), so any failure here is non-fatal.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from setuptools import Extension
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "semicocycle_lab._kernels._poly_cy",
                ["src/semicocycle_lab/_kernels/_poly_cy.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-env dependent
    print(f"semicocycle-lab: skipping Cython kernel build ({exc})")

setup(ext_modules=ext_modules)
