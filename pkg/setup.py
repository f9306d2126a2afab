"""Build script: compiles the optional accelerated emulator kernel.

The compiled extension is a pure speed-up; every code path has a Python
twin in crossio._kernels.pure and the package works without a compiler.
Set CROSSIO_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("CROSSIO_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "crossio._kernels._cykernel",
                    ["src/crossio/_kernels/_cykernel.pyx"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
