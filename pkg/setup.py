import sys

import numpy
from setuptools import setup

# The compiled CSR kernels are optional: the package falls back to the
# NumPy implementations when the extension is missing, so a failed build
# of the extension should not block installation.
ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/modgcn/kernels/_csr_cy.pyx",
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover
    print(f"warning: building without compiled kernels ({exc})", file=sys.stderr)

setup(
    ext_modules=ext_modules,
    include_dirs=[numpy.get_include()],
)
