import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("FIBERRING_PURE_PYTHON"):
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "fiberring._kernels._rk4_cy",
                    ["src/fiberring/_kernels/_rk4_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # -fcx-limited-range: inline complex multiply without the
                    # NaN-recovery library call; amplitudes stay finite by construction.
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        # No Cython available: install with the pure-python kernel only.
        ext_modules = []

setup(ext_modules=ext_modules)
