"""Build script for the compiled geometry kernels.

The package works without the extension (a numpy fallback is selected at
import time), but the Monte-Carlo engine is ~50x faster with it.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # sdist installs without Cython fall back to pure Python
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "irsnet.mc._kernels",
                sources=["src/irsnet/mc/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
