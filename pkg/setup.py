"""Build the optional Cython kernels.

If Cython or a C compiler is missing the package still installs and uses the
pure-Python kernels.
"""
from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("radialopf._kernels", ["src/radialopf/_kernels.pyx"],
                   include_dirs=[np.get_include()], extra_compile_args=["-O2"])],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
