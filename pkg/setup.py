"""
Copyright vi-sim Contributors
SPDX-License-Identifier: Apache-2.0
"""

import re
import ast

from setuptools import setup, find_packages

install_requirements = [
    "click == 7.1.2",
    "cli_helpers == 2.3.1",
    "configobj >= 5.0.6",
    "numpy >= 1.22",
    "scipy >= 1.8",
    "joblib >= 1.1",
]

_version_re = re.compile(r"__version__\s+=\s+(.*)")

with open("src/vi_sim_cli/__init__.py", "rb") as f:
    version = str(ast.literal_eval(_version_re.search(f.read().decode("utf-8")).group(1)))

description = "Variable importance under correlated features: permutation importance, OLS and knockoff CPI"

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="vi-sim",
    author="vi-sim Contributors",
    version=version,
    license="Apache 2.0",
    packages=find_packages("src"),
    package_dir={"": "src"},
    package_data={"vi_sim_cli": ["conf/clirc"]},
    description=description,
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=install_requirements,
    entry_points={"console_scripts": ["visim=vi_sim_cli.main:cli"]},
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: Unix",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires=">=3.8",
)
