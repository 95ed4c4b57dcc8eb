"""Build script.

The package is pure Python except for an optional Cython extension that
accelerates the bit-level entropy serializer.  The build degrades gracefully:
if Cython (or a C compiler) is unavailable the extension is skipped and the
package falls back to the pure Python implementation at import time.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/stereocodec/_kernels/_bitio.pyx"],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
