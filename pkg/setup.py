"""Build the optional compiled scan kernel.

Without Cython or a C compiler the package still installs; the pure numpy
path is then used at runtime.
"""

import os
import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext_modules = cythonize(
        [
            Extension(
                "comblab._scan_kernel",
                ["src/comblab/_scan_kernel.pyx"],
                extra_compile_args=["-O3", "-fcx-limited-range"] + openmp,
                extra_link_args=openmp,
            )
        ],
        compiler_directives={"language_level": "3"},
        quiet=True,
    )
except ImportError:
    if os.environ.get("COMBLAB_REQUIRE_KERNEL"):
        raise

setup(ext_modules=ext_modules)
