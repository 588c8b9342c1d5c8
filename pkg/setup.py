import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("EDABENCH_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install; the fallback backend is used
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "edabench._core",
                    ["src/edabench/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
