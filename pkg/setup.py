import os

import numpy as np
from setuptools import Extension, setup

# PERBIF_NO_EXT=1 skips the compiled kernel; the pure-Python one is used instead.
ext_modules = []
if not os.environ.get("PERBIF_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "perbif._kernels",
                ["src/perbif/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # no FMA contraction: keeps results identical to the Python kernel
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
