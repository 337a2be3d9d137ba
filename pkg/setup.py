import os

from setuptools import find_packages, setup  # type: ignore

here = os.path.dirname(os.path.abspath(__file__))

with open(os.path.join(here, "requirements.txt"), encoding="utf-8") as fh:
    requirements = [line.strip() for line in fh if line.strip() and not line.startswith(("#", "pytest"))]

setup(
    name="meetwalk",
    version="0.1.0",
    description="Expected meeting times of random walkers on digraphs",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    package_data={"meetwalk.commands": ["specs/*.yml"]},
    include_package_data=True,
    install_requires=requirements,
    python_requires=">=3.9",
    entry_points={"console_scripts": ["meetwalk = meetwalk.cli:main"]},
    zip_safe=False,
)
