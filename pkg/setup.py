import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# -ffp-contract=off: fused multiply-add would make the compiled kernels
# diverge bitwise from the pure-NumPy fallback.
extensions = [
    Extension(
        "gramkit.kernels._ckernels",
        ["src/gramkit/kernels/_ckernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
