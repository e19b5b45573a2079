"""Build script: compiles the optional accelerator extension.

The package is pure Python plus one optional Cython extension holding the
sequential hot kernels (recurrent scans, CRF recursions).  If Cython or a C
compiler is unavailable the build silently falls back to the NumPy lane; the
installed package selects the lane at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "starner._core",
                ["src/starner/_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

for ext in extensions:
    ext.optional = True

setup(ext_modules=extensions)
