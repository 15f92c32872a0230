"""Build the optional compiled sweep kernel.

The package works without it: ``subeq.kernels`` falls back to the pure
Python kernel when the extension is missing.  Set ``SUBEQ_NO_EXT=1`` to
skip the build.
"""

import os
import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing etc.
            print(f"warning: compiled kernel not built ({exc}); using the Python kernel",
                  file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: {ext.name} not built ({exc})", file=sys.stderr)


def extensions():
    if os.environ.get("SUBEQ_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension

    omp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext = Extension(
        "subeq._ckernel",
        ["src/subeq/_ckernel.pyx"],
        # no -march=native or fast-math: results must not depend on the build host
        extra_compile_args=["-O3", "-ffp-contract=off"] + omp,
        extra_link_args=omp,
    )
    return cythonize([ext], compiler_directives={"language_level": "3"}, quiet=True)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
