from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="pybailout",
    version="0.1.0",
    description="Bailout allocation, fairness and clearing in Eisenberg-Noe financial networks",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests",)),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy>=1.9",
        "networkx",
        "pandas",
        "pyyaml",
        "tqdm",
        "opentelemetry-api",
        "opentelemetry-sdk",
        "opentelemetry-exporter-otlp",
        "typer",
        "python-dotenv",
        "sqlmodel<0.0.45",
    ],
    entry_points={
        "console_scripts": [
            "pybailout=pybailout.cli:app",
        ],
    },
)
