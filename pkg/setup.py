"""Build script: compiles the optional Hausdorff extension when Cython is available.

The package is fully functional without the extension; miml._dist falls back
to a NumPy implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the C extension did not compile."""

    def run(self):
        try:
            build_ext.run(self)
        except Exception as exc:  # missing compiler, etc.
            print(f"warning: skipping C extension build ({exc})")

    def build_extension(self, ext):
        try:
            build_ext.build_extension(self, ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); "
                  "the NumPy fallback will be used")


extensions = []
try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "miml._dist._hausdorff_cy",
                ["src/miml/_dist/_hausdorff_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    print("warning: Cython not available; building without the compiled core")

setup(ext_modules=extensions, cmdclass={"build_ext": optional_build_ext})
