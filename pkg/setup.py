"""Build script for the compiled sampling kernels.

Set FEWPATCH_PURE=1 to skip the extension and install the pure-Python
package only; the library falls back to the interpreted kernels at import
time when the extension is absent.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("FEWPATCH_PURE") != "1":
    from Cython.Build import cythonize

    # -ffp-contract=off: the pure-Python fallback must produce bit-identical
    # streams, so FMA contraction of a*a + b*b style expressions is disabled.
    ext_modules = cythonize(
        [
            Extension(
                "fewpatch._kernels",
                ["src/fewpatch/_kernels.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off", "-fopenmp"],
                extra_link_args=["-fopenmp"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
