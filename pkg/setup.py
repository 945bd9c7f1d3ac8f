import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "dynsubmax._kernels",
                ["src/dynsubmax/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    extensions = []

# The package must stay installable without a C toolchain; the pure-Python
# kernels take over when the extension is missing.
for ext in extensions:
    ext.optional = True

setup(ext_modules=extensions)
