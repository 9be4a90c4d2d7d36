#!/usr/bin/env python
# -*- coding: utf-8 -*-
import os

from setuptools import setup, find_packages

here = os.path.abspath(os.path.dirname(__file__))

# To update the package version number, edit cc_synth/__version__.py
version = {}
with open(os.path.join(here, 'cc_synth', '__version__.py')) as f:
    exec(f.read(), version)

with open('README.md') as readme_file:
    readme = readme_file.read()

setup(
    name='cc_synth',
    version=version['__version__'],
    description="Chance-constrained open-loop control of stochastic linear "
                "systems with arbitrary disturbances.",
    long_description=readme + '\n\n',
    long_description_content_type='text/markdown',
    author="cc_synth developers",
    packages=find_packages(exclude=('tests',)),
    package_dir={'cc_synth': 'cc_synth'},
    package_data={'cc_synth': ['fixtures/v1/*.yaml']},
    include_package_data=True,
    license="MIT license",
    zip_safe=False,
    keywords='chance constraints, stochastic control, characteristic '
             'functions',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: MIT License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
    ],
    python_requires='>=3.8',
    test_suite='tests',
    install_requires=['pyyaml', 'numpy', 'scipy', 'pandas'],
    entry_points={
        'console_scripts': ['cc-synth=cc_synth.cli:main'],
    },
    setup_requires=[
        # dependency for `python setup.py test`
        'pytest-runner',
        # dependencies for `python setup.py build_sphinx`
        'sphinx',
        'sphinx_rtd_theme',
        'recommonmark',
    ],
    tests_require=[
        'pytest',
        'pytest-cov',
        'pycodestyle'
    ],
    extras_require={
        'osqp': ['osqp>=1.0'],
        'dev': ['pytest', 'pytest-cov', 'pycodestyle'],
    }
)
