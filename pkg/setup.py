#!/usr/bin/env python


from setuptools import find_packages, setup
from topkrange import __version__
from os import path

setup(
    name='topkrange',
    version=__version__,
    description='Dynamic top-k range reporting in the external memory model',
    url='https://pypi.org/project/topkrange/',
    packages=find_packages(exclude=['tests', 'tests.*', 'benchmarks']),
    install_requires=['numpy >= 1.17'],
    zip_safe=False,
    long_description=open(
        path.join(
            path.dirname(__file__),
            'README'
        )
    ).read(),
    entry_points={
        'console_scripts': ['topkrange-bench = topkrange.bench:main'],
    },
    test_suite='tests',
    classifiers=[
    "License :: OSI Approved :: MIT License",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3",
    "Operating System :: OS Independent",
    "Topic :: Scientific/Engineering",
    "Topic :: Software Development :: Libraries :: Python Modules",
    "Intended Audience :: Science/Research",
    "Development Status :: 3 - Alpha"]
    )
