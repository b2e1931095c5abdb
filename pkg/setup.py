"""Build script for the compiled kernel extension.

The extension is optional: if Cython or a C compiler is missing the
package installs anyway and falls back to the numpy kernels at import.
"""

import numpy as np
from setuptools import setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/nvsr/backend/_core.pyx",
        language_level=3,
    )
    for ext in ext_modules:
        ext.include_dirs.append(np.get_include())
        ext.extra_compile_args = ["-O3"]
        ext.define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
