import sys

from setuptools import find_packages

try:
    from cx_Freeze import setup, Executable
except ImportError:  # cx_Freeze is only needed for frozen executables
    from setuptools import setup
    Executable = None

build_exe_options = {
    "packages": [
        "ergolab", "fastapi", "uvicorn", "numpy", "scipy", "sympy", "mpmath",
        "pandas", "dotenv", "psutil", "multiprocessing", "logging"
    ],
    "excludes": ["tkinter", "matplotlib", "pytest"]
}

extra = {}
if Executable is not None:
    extra["options"] = {"build_exe": build_exe_options}
    extra["executables"] = [
        Executable(
            "ergolab/main.py",
            base=None,
            target_name="ergolab.exe" if sys.platform == "win32" else "ergolab",
        )
    ]

setup(
    name="ErgoLab",
    version="1.0.0",
    description="Simulation and verification lab for skew-product measure-preserving systems",
    author="ErgoLab Team",
    packages=find_packages(include=["ergolab", "ergolab.*"]),
    install_requires=[
        "fastapi", "uvicorn", "pydantic", "numpy", "scipy", "sympy", "mpmath",
        "pandas", "python-dotenv", "psutil",
    ],
    **extra,
)
