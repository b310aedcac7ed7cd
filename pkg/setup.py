"""Build script for the optional compiled kernels.

The package works without the extension: a numpy fallback with the same
signatures is selected at import time.  Any failure to compile is reported
as a warning and the install proceeds pure-Python.
"""
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    def _warn(self, exc):
        print("*" * 70, file=sys.stderr)
        print("WARNING: compiled kernels failed to build; the pure-numpy",
              file=sys.stderr)
        print("fallback will be used.  Reason: %s" % exc, file=sys.stderr)
        print("*" * 70, file=sys.stderr)


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "bishopdisc._kernels_c",
        ["src/bishopdisc/_kernels_c.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
