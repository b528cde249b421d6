"""Build script for the compiled kernel extension.

The extension is optional: when Cython or a C toolchain is unavailable the
package installs anyway and railmax.kernels falls back to the pure-Python
twin at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "railmax._ckernels",
                ["src/railmax/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
