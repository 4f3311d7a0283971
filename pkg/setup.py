"""Build script for the optional compiled kernels.

The package is fully functional without the extension: ``comove.kernels``
falls back to the pure-Python implementations in ``comove._kernels_py``.
Building the extension only makes the hot loops (annealing, overlap sweep,
Jacobi rotations) much faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "comove._kernels",
                ["src/comove/_kernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
