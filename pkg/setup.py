#!/usr/bin/env python3

import os

from setuptools import setup, find_packages

here = os.path.dirname(os.path.abspath(__file__))

with open(os.path.join(here, 'README.md'), 'r', encoding='utf-8') as f:
    long_description = f.read()


def read_requirements(path):
    """Split requirements.txt into runtime pins and development tools by section header."""
    groups = {'runtime': [], 'dev': []}
    group = 'runtime'
    with open(path, 'r', encoding='utf-8') as f:
        for line in f.read().splitlines():
            line = line.strip()
            if line.startswith('#'):
                group = 'runtime' if 'core' in line.lower() else 'dev'
            elif line:
                groups[group].append(line)
    return groups


requirements = read_requirements(os.path.join(here, 'requirements.txt'))

setup(
    name='cia-risk-engine',
    version='0.1.0',
    description='Continuous CIA risk assessment with FAIR-style loss scoring and AHP provider ranking',
    long_description=long_description,
    long_description_content_type='text/markdown',
    packages=find_packages(where='src'),
    package_dir={'': 'src'},
    py_modules=['main'],
    install_requires=requirements['runtime'],
    extras_require={'dev': requirements['dev']},
    python_requires='>=3.8',
    entry_points={
        'console_scripts': [
            'cia-risk=main:main',
        ],
    },
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Information Technology',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Topic :: Security',
    ],
)
