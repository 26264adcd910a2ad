import numpy
from setuptools import setup

# The compiled kernels are optional: if Cython (or a C compiler) is not
# available the package falls back to the numpy/scipy implementations in
# demandcast._kernels._slow, selected at import time.
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/demandcast/_kernels/_fast.pyx", language_level=3
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, include_dirs=[numpy.get_include()])
