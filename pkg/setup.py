"""Build script for the optional compiled neighbor-search kernel.

The extension is a best-effort accelerator: if Cython or a C compiler is
unavailable the install proceeds and the package falls back to the pure
numpy implementation at import time.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "comformer._core._neighbors",
        sources=["src/comformer/_core/_neighbors.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


class OptionalBuildExt(build_ext):
    """Never fail the install over the accelerator extension."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"warning: compiled kernel skipped ({exc}); numpy fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"warning: building {ext.name} failed ({exc}); numpy fallback will be used")


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
