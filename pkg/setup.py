from setuptools import setup, find_packages

# Read requirements
with open("requirements.txt", "r") as f:
    requirements = [
        line.strip() for line in f.readlines() if line.strip() and not line.startswith("#")
    ]

# Read the README for the long description
with open("README.md", "r") as f:
    long_description = f.read()

setup(
    name="neharilab",
    version="0.1.0",
    description="Nehari-manifold ground states and verification for asymptotically linear elliptic problems",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="NehariLab Team",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    package_data={"neharilab.config": ["*.yaml"]},
    install_requires=requirements,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "nehari-lab=neharilab.main:main",
        ],
    },
)
