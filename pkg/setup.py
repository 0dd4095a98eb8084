from setuptools import setup

with open("README.md", "r") as fh:
    long_description = fh.read()

setup(
    name="cvmdi-ps",
    version="0.1.0",
    description="Key rates for continuous-variable measurement-device-independent QKD with post-selection, against complete and restricted eavesdroppers.",
    packages = ['cvmdi'],
    classifiers=[
        "License :: OSI Approved :: Mozilla Public License 2.0 (MPL 2.0)",
    ],
    install_requires = [
        "numpy",
        "scipy",
        "sortedcontainers"
    ],
    long_description=long_description,
    long_description_content_type="text/markdown"

)
