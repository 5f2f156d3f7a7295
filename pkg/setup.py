#!/usr/bin/env python3

import os

from dsmve import NAME, SOURCE_URL, VERSION
from setuptools import setup, find_packages


__dirname = os.path.abspath(os.path.dirname(__file__))

with open(os.path.join(__dirname, "README.md")) as readme:
    README = readme.read()

# prefer the hashed lock file from bin/update_requirements.sh when present
__requirements = os.path.join(__dirname, "requirements.txt.lock")
if not os.path.exists(__requirements):
    __requirements = os.path.join(__dirname, "requirements.txt")

with open(__requirements) as requirements:
    INSTALL_REQUIRES = [
        line.split(" ")[0]
        for line in requirements.read().replace("\\\n", "").split("\n")
        if line and not line.startswith("-")
    ]


setup(
    name=NAME,
    version=VERSION,
    description="Particle Euler-Maruyama simulation of delay McKean-Vlasov equations driven by fractional Brownian motion",
    url=SOURCE_URL,
    long_description=README,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Mozilla Public License 2.0 (MPL 2.0)",
        "Natural Language :: English",
        "Programming Language :: Python :: 3 :: Only",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    install_requires=INSTALL_REQUIRES,
    packages=find_packages(exclude=["tests", "tests.*"]),
    entry_points={"console_scripts": ["dsmve=dsmve.run_pipeline:main"]},
    include_package_data=True,
    zip_safe=True,
    python_requires=">=3.8",
)
