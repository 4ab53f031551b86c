"""Build script: compiles the optional hot-loop extension.

Set WVQKD_PURE_PYTHON=1 to skip the extension entirely; the package then
runs on the numpy fallback kernels selected at import time.
"""

import os

from setuptools import setup


def _extensions():
    if os.environ.get("WVQKD_PURE_PYTHON"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "wvqkd._kernels._core",
        ["src/wvqkd/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        # -ffp-contract=off: the numpy fallback must stay bit-identical to the
        # compiled kernel, so FMA contraction is forbidden.
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=_extensions())
