import os

from setuptools import setup

ext_modules = []
if os.environ.get("FLUXLIM_NO_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        flags = ["-O3", "-ffp-contract=off", "-fopenmp"]
        ext_modules = cythonize(
            [
                Extension(
                    "fluxlim._kernels._ckernels",
                    ["src/fluxlim/_kernels/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=flags,
                    extra_link_args=["-fopenmp"],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # no Cython available: the numpy kernels are used at import time
        ext_modules = []

setup(ext_modules=ext_modules)
