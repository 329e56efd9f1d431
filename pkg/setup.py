"""Build the compiled kernel extension.

The extension is optional: when no compiler (or Cython) is available the
package installs anyway and falls back to the pure-Python kernels at
import time. -ffp-contract=off keeps the compiled doubles bit-identical
to the pure backend; never add fast-math here.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing toolchain: fall back to pure
            print(f"boltsim: skipping native kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"boltsim: skipping {ext.name} ({exc})")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    from setuptools import Extension
    # -ffp-contract=off: no FMA contraction; -fno-builtin-sin/-cos: stop GCC
    # fusing adjacent sin/cos into glibc sincos, whose results differ by ulps
    # from separate calls. Both are required for bit-identity with _pure.
    return cythonize(
        [Extension(
            "boltsim._speedup._native",
            ["src/boltsim/_speedup/_native.pyx"],
            extra_compile_args=["-O2", "-ffp-contract=off",
                                "-fno-builtin-sin", "-fno-builtin-cos"],
        )],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": optional_build_ext})
