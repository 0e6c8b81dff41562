from setuptools import setup, find_packages

setup(
    name="vlcsim",
    version="0.1.0",
    packages=find_packages(where=".", exclude=["tests", "tests.*"]),
    package_data={"vlcsim": ["configs/*.json", "evaluation/*.json"]},
    python_requires=">=3.8",
    install_requires=["numpy", "scipy", "pandas>=1.5", "attrs", "loguru", "tqdm", "pebble"],
    license="BSD-2-Clause",
    description="Ray-traced channel, misalignment and SIC capacity simulator for imaging MIMO VLC arrays",
    entry_points={"console_scripts": ["vlcsim=vlcsim.main:main"]},
)
