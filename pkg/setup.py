import os

import numpy as np
from setuptools import Extension, setup

# NALM_BENCH_NO_EXT=1 skips the compiled kernels; the package then runs on
# its pure-Python backend.
ext_modules = []
if not os.environ.get("NALM_BENCH_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "nalm_bench._kernels",
                ["src/nalm_bench/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
