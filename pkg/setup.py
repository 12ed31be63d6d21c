import pathlib
import re

import setuptools

ROOT = pathlib.Path(__file__).parent

with open(ROOT / "README.md", "r") as f:
    long_description = f.read()


with open(ROOT / "replayguard" / "__init__.py", encoding="utf-8") as f:
    match = re.search(r'^__version__\s*=\s*[\'"]([^\'"]*)[\'"]', f.read(), re.MULTILINE)
    if match is None:
        raise RuntimeError("Could not parse version.")
    VERSION = match.group(1)

with open(ROOT / "requirements.txt", "r") as f:
    requirements = f.read().splitlines()

setuptools.setup(
    name="replayguard",
    version=VERSION,
    author="Merlin Fuchs",
    author_email="contact@merlin.gg",
    description="Replay spoofing detection with small spectrogram CNNs, from audio to EER",
    long_description=long_description,
    long_description_content_type="text/markdown",
    url="https://github.com/Merlintor/replayguard",
    packages=setuptools.find_packages(exclude=("tests", "tests.*", "examples", "examples.*")),
    classifiers=[
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Intended Audience :: Science/Research",
        "Topic :: Multimedia :: Sound/Audio :: Analysis",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Operating System :: OS Independent",
    ],
    install_requires=requirements,
    extras_require={"test": ["pytest>=6.0", "hypothesis>=6.0"]},
    entry_points={"console_scripts": ["replayguard=replayguard.commands:main"]},
    python_requires=">=3.8",
)
