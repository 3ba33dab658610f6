from Cython.Build import cythonize
from setuptools import Extension, setup

ext_modules = cythonize(
    [
        Extension(
            "lfrefine._kernels._greedy",
            sources=["src/lfrefine/_kernels/_greedy.pyx"],
            extra_compile_args=["-O3"],
        )
    ],
    language_level=3,
)

setup(ext_modules=ext_modules)
