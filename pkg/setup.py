import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("DAGFOCI_NO_EXT", "") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "dagfoci._kernels",
                    ["src/dagfoci/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no FMA contraction: tie detection relies on a fixed rounding sequence
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError as exc:
        print(f"building without compiled kernels: {exc}", file=sys.stderr)

setup(ext_modules=ext_modules)
