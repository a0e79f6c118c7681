"""Build glue for the optional compiled kernels.

The package is fully functional without the extension: vrdkit.gbdt falls
back to numpy kernels at import time. Building with Cython just makes the
histogram/tree hot loops faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "vrdkit.gbdt._corekern",
                ["src/vrdkit/gbdt/_corekern.pyx"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
