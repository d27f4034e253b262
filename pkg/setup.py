"""Build hook for the optional Cython FFT kernel.

The package works without it; ``frets.numeric`` falls back to the numpy
implementation in ``frets._kernels_py`` when the extension is missing.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "frets._kernels",
                ["src/frets/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # no -ffast-math / -march=native: results must match the
                # numpy fallback bit for bit
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
