"""Build script for the optional compiled envelope kernel.

The package works without it: margulis.kernels falls back to numpy.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "margulis._envelope",
                ["src/margulis/_envelope.pyx"],
                # keep a*b + c unfused so both backends round identically
                extra_compile_args=["-O3", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
