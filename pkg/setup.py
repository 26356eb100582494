"""Build script: compiles the Cython eigensolver kernel when possible.

The compiled kernel is optional. If no C compiler (or Cython) is available
the package installs anyway and falls back to the pure-NumPy kernel at
import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


ext_modules = []
cmdclass = {}

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "eigenkae.linalg._kernel_cy",
                ["src/eigenkae/linalg/_kernel_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

    class OptionalBuildExt(build_ext):
        """Skip the extension instead of failing the whole install."""

        def run(self):
            try:
                super().run()
            except Exception as exc:  # noqa: BLE001
                print(f"warning: compiled kernel skipped ({exc}); "
                      "using pure-Python fallback", file=sys.stderr)

        def build_extension(self, ext):
            try:
                super().build_extension(ext)
            except Exception as exc:  # noqa: BLE001
                print(f"warning: failed to build {ext.name} ({exc}); "
                      "using pure-Python fallback", file=sys.stderr)

    cmdclass["build_ext"] = OptionalBuildExt
except ImportError as exc:
    print(f"warning: Cython/NumPy unavailable at build time ({exc}); "
          "building without the compiled kernel", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass=cmdclass)
