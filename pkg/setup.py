"""Builds the optional compiled kernel; the package runs without it."""
import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("DRSUBMAX_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "drsubmax._core",
            ["src/drsubmax/_core.pyx"],
            # keep float semantics identical to the pure-Python fallback
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
        ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
