from setuptools import setup, find_packages

setup(
    name="failsafe-nr",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "scripts"]),
    package_data={"failsafe_nr": ["configs/*.yaml"]},
    python_requires=">=3.9",
    install_requires=[
        "numpy",
        "scipy",
        "pandas",
        "pydantic>=2",
        "click",
        "hydra-core",
        "omegaconf",
        "pyYAML",
        "python-dotenv",
        "tqdm",
    ],
    extras_require={"wandb": ["wandb"], "test": ["pytest"]},
    entry_points={"console_scripts": ["failsafe=failsafe_nr.cli:cli"]},
)
