"""Build script wiring up the optional compiled tape kernel.

The package is fully functional without the extension: ``contactnh.backend``
falls back to the pure-Python kernel when ``contactnh._kernels`` is absent,
so a failed compile downgrades the install instead of breaking it.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, headers missing, ...
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            "warning: compiled kernel unavailable, falling back to the "
            f"pure-Python backend ({exc})",
            file=sys.stderr,
        )


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError as exc:
        OptionalBuildExt._warn(exc)
        return []
    return cythonize(
        [
            Extension(
                "contactnh._kernels",
                ["src/contactnh/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
