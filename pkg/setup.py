"""Build the optional compiled kernel core.

The package works without it: ``fracdiff.kernels`` falls back to the numpy
implementation when ``fracdiff._ckernels`` cannot be imported.  Set
``FRACDIFF_NO_EXT=1`` to skip the build entirely.
"""

import os
import sys

from setuptools import setup


def extensions():
    if os.environ.get("FRACDIFF_NO_EXT"):
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        print(f"fracdiff: building without compiled kernels ({exc})", file=sys.stderr)
        return []

    openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
    ext = Extension(
        "fracdiff._ckernels",
        ["src/fracdiff/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # no -ffast-math: reductions must keep a fixed evaluation order
        extra_compile_args=["-O3"] + openmp,
        extra_link_args=openmp,
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=extensions())
