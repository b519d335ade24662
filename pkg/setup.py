from setuptools import setup, find_packages
import io

__doc__ = (
    """Numerical lab for Wong-Zakai approximations and the support theorem of stochastic differential equations."""
)

with io.open("readme.rst", encoding="UTF8") as readme:
    long_description = readme.read()

setup(
    name="wong_zakai_lab",
    version="0.1.0",
    description=__doc__,
    long_description=long_description,
    package_dir={"wong_zakai_lab": "wong_zakai_lab"},
    packages=find_packages(exclude=["tests"]),
    zip_safe=False,
    python_requires=">=3.8",
    install_requires=["numpy>=1.20", "scipy"],
    extras_require={
        "tests": ["pytest>=7"],
        "docs": ["sphinx"],
    },
    entry_points={"console_scripts": ["wz-lab = wong_zakai_lab.cli:main"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
