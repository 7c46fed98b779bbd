"""Build script for the optional compiled propagation kernel.

The package is fully functional without the extension: ``viewgrade.kernels``
falls back to a pure-Python kernel with bit-identical output. The extension
is marked optional so an install never fails on a machine without a C
compiler.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # source-only install without Cython
    cythonize = None

extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "viewgrade.kernels._propagation_cy",
                ["src/viewgrade/kernels/_propagation_cy.pyx"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=extensions)
