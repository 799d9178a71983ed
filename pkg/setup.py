"""Build script: compiles the optional Cython kernel, falling back to pure Python."""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "ballaverage._kernels",
                ["src/ballaverage/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # noqa: BLE001 - any build-chain failure falls back
    print(f"ballaverage: Cython kernel unavailable ({exc}); "
          "installing with the pure-Python backend only", file=sys.stderr)

setup(ext_modules=ext_modules)
