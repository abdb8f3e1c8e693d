import setuptools

setuptools.setup(
    name="PyMBQC",
    version="0.1.0",
    description="Correlation-function analysis of measurement-based quantum gates on cluster states",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(include=["PyMBQC*"]),
    install_requires=["numpy>=1.20", "pandas>=1.5", "scipy>=1.7"],
    entry_points={"console_scripts": ["pymbqc=PyMBQC.cli:main"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.8",
    keywords=[
        "PyMBQC",
        "measurement-based quantum computation",
        "cluster state",
        "stabilizer",
        "correlation function",
    ],
)
