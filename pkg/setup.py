import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled extension only speeds up the inner decoding/filtering
# loops; the package falls back to tactus._dsp_py if it is missing.
extensions = [
    Extension(
        "tactus._dsp",
        sources=["src/tactus/_dsp.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
