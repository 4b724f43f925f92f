"""Builds the optional compiled search kernel.

The package works without it; ``refinery._kernels`` falls back to the pure
Python backend when the extension is missing.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("REFINERY_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("refinery._kernels._csearch", ["src/refinery/_kernels/_csearch.pyx"],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
