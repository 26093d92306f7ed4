from setuptools import find_packages, setup


def parse_requirements(filename):
    with open(filename, "r") as f:
        return [
            line.split("#", 1)[0].strip()
            for line in f
            if line.strip() and not line.startswith("#")
        ]


setup(
    name="tactile-contour-workbench",
    version="0.1.0",
    packages=find_packages(exclude=("tests", "tests.*")),
    include_package_data=True,
    install_requires=parse_requirements("requirements.txt"),
    entry_points={"console_scripts": ["tactile-workbench=app.main:main"]},
    python_requires=">=3.9",
)
