"""CMake-driven build of the _exkin extension (pybind11 cmake pattern)."""

import pathlib
import subprocess
import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = pathlib.Path(__file__).parent.resolve()
        ext_path = pathlib.Path(self.get_ext_fullpath(ext.name)).resolve()
        build_dir = pathlib.Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                f"-DPython_EXECUTABLE={sys.executable}",
                "-DEXKIN_BUILD_PYTHON=ON",
                "-DEXKIN_BUILD_TESTS=OFF",
                "-DEXKIN_BUILD_CLI=OFF",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={ext_path.parent}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_exkin", "-j"],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("exkin._exkin")],
    cmdclass={"build_ext": CMakeBuild},
)
