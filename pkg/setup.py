"""Build script.

The compiled kernel is optional: if Cython or a C compiler is unavailable the
package installs without it and urom._kernels falls back to the pure numpy
implementation at import time.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "urom._kernels._ext",
                ["src/urom/_kernels/_ext.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - degraded build path
    sys.stderr.write(f"warning: compiled kernel skipped ({exc}); pure fallback will be used\n")
    ext_modules = []

setup(ext_modules=ext_modules)
