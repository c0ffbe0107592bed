"""Build script: compiles the hot-kernel extension when Cython is available.

The package is fully functional without the extension; ``coentropy.kernels``
falls back to the pure-Python implementation at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext = Extension(
        "coentropy._native",
        ["src/coentropy/_native.pyx"],
        extra_compile_args=["-O3"],
    )
    ext.optional = True  # a failed compile degrades to the pure-Python backend
    ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
