from setuptools import setup, find_packages

setup(
    name="haarpsi-iqa-toolkit",
    version="1.0.0",
    packages=find_packages(exclude=["tests", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.21",
        "scipy>=1.7",
        "pypng>=0.20220715.0",
        "psutil>=5.8.0",
        "Pillow>=9.0"
    ],
    entry_points={
        "console_scripts": ["iqa=src.cli:main"]
    },
    python_requires=">=3.8",
    author="IQA Toolkit",
    description="HaarPSI full-reference image quality assessment with evaluation and tuning harness"
)
