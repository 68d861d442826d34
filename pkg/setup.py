"""Build script: compiles the optional Cython kernel backend.

The package is fully functional without the extension (a pure-numpy
backend is selected at import time), so any failure to cythonize or
compile downgrades to a source-only install instead of aborting.
"""

from setuptools import setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError:
        return []
    try:
        return cythonize(
            "src/pann/_kernels/_core.pyx",
            compiler_directives={"language_level": 3},
            include_path=["src"],
        ), [numpy.get_include()]
    except Exception:
        return []


_ext = _extensions()
if _ext:
    modules, include_dirs = _ext
    for mod in modules:
        mod.include_dirs.extend(include_dirs)
        mod.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
    setup(ext_modules=modules)
else:
    setup()
