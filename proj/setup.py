from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

ext = Pybind11Extension(
    "air_pipeline._core",
    sorted(glob("src/*.cpp")) + ["bindings/air_py.cpp"],
    include_dirs=["include", "vendor"],
    libraries=["ssl", "crypto"],
    cxx_std=20,
)

setup(
    ext_modules=[ext],
    cmdclass={"build_ext": build_ext},
)
