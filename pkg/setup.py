import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None


class optional_build_ext(build_ext):
    """A failed compile leaves the pure-Python kernel in charge."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001
            print(f"warning: compiled core not built ({exc}); using pure-Python kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: {ext.name} not built ({exc}); using pure-Python kernel")


# no FMA contraction: the compiled core must round exactly like CPython floats
compile_args = ["-O2", "-ffp-contract=off"] if os.name != "nt" else []

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [Extension("bpre._core", ["src/bpre/_core.pyx"], extra_compile_args=compile_args)],
        compiler_directives={"language_level": 3},
    )

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
