import os

import numpy as np
from setuptools import Extension, setup

# HRVSEPSIS_NO_EXT=1 installs the pure-Python package only
ext_modules = []
if not os.environ.get("HRVSEPSIS_NO_EXT"):
    from Cython.Build import cythonize

    ext = Extension(
        "hrvsepsis.learners._tree_core",
        ["src/hrvsepsis/learners/_tree_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # keeps float arithmetic in lockstep with the numpy fallback
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    ext_modules = cythonize([ext], compiler_directives={"language_level": "3"})

setup(ext_modules=ext_modules)
