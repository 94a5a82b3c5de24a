# -*- coding: utf-8 -*-
import os

from setuptools import setup, find_packages

module_dir = os.path.dirname(os.path.abspath(__file__))

gpkg_deps = ["geopandas>=0.12"]
testing_deps = ["pytest>=7", "pytest-cov", "httpx"]
dev_deps = ["pylint", "black", "pre-commit"] + testing_deps

setup(
    name="streetscore",
    version="1.0.0",
    url="https://github.com/streetscore/streetscore",
    license="MIT License",
    author="The streetscore developers",
    description="Score street-level scenes along an OpenStreetMap street network with a vision-language model.",
    long_description=open(os.path.join(module_dir, "README.md")).read(),
    long_description_content_type="text/markdown",
    keywords="openstreetmap street-view urban-analytics vision-language-model gis",
    packages=find_packages(),
    include_package_data=True,
    package_data={
        "streetscore": ["config.json", "grammars/*.lark", "tasks/*.task"],
        "streetscore.tests": ["static/*.json", "static/prompts/*.txt"],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: MacOS :: MacOS X",
        "Operating System :: POSIX :: Linux",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: GIS",
        "Topic :: Scientific/Engineering :: Image Recognition",
    ],
    python_requires=">=3.9",
    install_requires=[
        "fastapi>=0.100",
        "httpx",
        "lark>=1.1",
        "matplotlib>=3.5",
        "numpy>=1.21",
        "openai>=1.0",
        "Pillow>=9.0",
        "pydantic>=2.0",
        "requests>=2.25",
        "shapely>=2.0",
        "uvicorn",
    ],
    extras_require={"gpkg": gpkg_deps, "dev": dev_deps, "testing": testing_deps},
    entry_points={"console_scripts": ["streetscore = streetscore.cli:main"]},
)
