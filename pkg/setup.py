from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "lokal._smo",
                ["src/lokal/_smo.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython/numpy at build time: install pure-Python only; the solver
    # falls back to lokal._smo_py at import.
    pass

setup(ext_modules=ext_modules)
