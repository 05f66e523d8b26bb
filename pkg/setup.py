import os

import numpy as np
from setuptools import Extension, setup

# The compiled core is optional: without Cython or a C compiler the package
# installs and runs on the pure-numpy fallback.
ext_modules = []
if os.environ.get("HYPERCUBE_LSH_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "hypercube_lsh._core",
                    ["src/hypercube_lsh/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
