"""Build the optional compiled path kernel; the package works without it."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("THOMALAB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        rnd = os.path.join(os.path.dirname(np.__file__), "random", "lib")
        ext = Extension(
            "thomalab.sim._kernel",
            ["src/thomalab/sim/_kernel.pyx"],
            include_dirs=[np.get_include()],
            library_dirs=[rnd],
            libraries=["npyrandom", "m"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            # keep a*b+c unfused so results match the Python kernel bit for bit
            extra_compile_args=["-O2", "-ffp-contract=off"],
        )
        ext_modules = cythonize([ext], language_level=3)

setup(ext_modules=ext_modules)
