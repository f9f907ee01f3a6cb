import os

import numpy
from setuptools import Extension, setup

extensions = []
if os.environ.get("BIRKHOFF_LAB_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        extensions = cythonize(
            [
                Extension(
                    "birkhoff_lab._kernels",
                    ["src/birkhoff_lab/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=extensions)
