import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The pure-Python fallback in porous_soc/_fallback.py is used when this
# extension is missing, so a failed compile is not fatal at import time.
extensions = [
    Extension(
        "porous_soc._kernels",
        ["src/porous_soc/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
