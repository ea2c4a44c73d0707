import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # No Cython at build time: install pure-python only, the package
    # falls back to the numpy kernels at import.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "stancekit._kernels.ckernels",
                ["src/stancekit/_kernels/ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
