import os

import numpy as np
from setuptools import Extension, setup

# Set SUBSCRIBER_CA_NO_EXT=1 to install the pure-Python kernel only.
ext_modules = []
if not os.environ.get("SUBSCRIBER_CA_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "subscriber_ca._ckernel",
                ["src/subscriber_ca/_ckernel.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
