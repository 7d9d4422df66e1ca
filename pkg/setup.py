"""Builds the optional compiled round-loop kernels.

The package works without the extension (a pure-numpy backend is selected at
import time), so a failed compile only costs speed.  The kernels link against
numpy's static random-distribution library so they can consume the exact same
PCG64 streams as ``numpy.random.Generator``.
"""
import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: compiled kernels skipped ({exc}); "
                  "the numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "the numpy fallback will be used")


def extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        return []
    random_lib = os.path.abspath(
        os.path.join(np.get_include(), "..", "..", "random", "lib"))
    ext = Extension(
        "airdp._kernels._native",
        sources=["src/airdp/_kernels/_native.pyx"],
        include_dirs=[np.get_include()],
        library_dirs=[random_lib],
        libraries=["npyrandom"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # No fused multiply-adds: the fading chain must match the numpy
        # backend bitwise, operation for operation.
        extra_compile_args=["-ffp-contract=off"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
