import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

with open("csquant/__init__.py", "r") as fh:
    for l in fh:
        if l.startswith('__version__'):
            exec(l)
            break
    else:
        __version__ = 'x.y.z'

setuptools.setup(
    name="csquant",
    version=__version__,
    description=(
        "Coherent-state quantization, measurement and star products on the"
        " plane and the sphere."
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests"]),
    package_data={"csquant": ["defs/*.json"]},
    classifiers=[
        "Programming Language :: Python :: 3",
        "Development Status :: 2 - Pre-Alpha",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires='>=3.8',
    install_requires=["numpy", "scipy", "pandas", "xarray", "joblib"],
    extras_require={"tests": ["pytest"]},
    include_package_data=True,
    zip_safe=False,
)
