"""Build the optional Cython speedups; the package falls back to numpy if they fail."""
import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
    extensions = cythonize(
        [Extension(
            "imseal._kernels._native",
            sources=["src/imseal/_kernels/_native.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            optional=True,
        )],
        language_level=3,
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
