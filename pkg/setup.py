"""Build script: compiles the optional C kernel extension.

The package works without the extension (a pure-Python kernel module is
selected at import time); the extension only makes the hot loops fast.
Set SEQ2SEQ_PURE_PYTHON=1 to skip the build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain
            print(f"warning: C kernel build failed ({exc}); "
                  "falling back to the pure-Python kernels")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "falling back to the pure-Python kernels")


ext_modules = []
if os.environ.get("SEQ2SEQ_PURE_PYTHON") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "seq2seq._ckernels",
                    ["src/seq2seq/_ckernels.pyx"],
                    # -ffp-contract=off: no FMA fusion, so the C kernels are
                    # bit-identical to the pure-Python fallback.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("warning: Cython not available; using the pure-Python kernels")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
