"""Installation with setuptools or pip."""
from setuptools import setup, find_packages
import os
import ast


def get_version_from_init():
    """Obtain library version from main init."""
    init_file = os.path.join(
        os.path.dirname(__file__), 'ctcsync', '__init__.py'
    )
    with open(init_file) as fd:
        for line in fd:
            if line.startswith('__version__'):
                return ast.literal_eval(line.split('=', 1)[1].strip())


with open('README.md') as f:
    readme = f.read()


setup(
    name='ctcsync',
    version=get_version_from_init(),
    description='Ctcsync: cross-technology clock synchronization over an RSSI side channel.',
    long_description=readme,
    long_description_content_type='text/markdown',
    packages=find_packages(exclude=('tests', 'docs', 'examples')),
    python_requires='>=3.8',
    install_requires=[
        'lmfit',
        'mypy',
        'numba',
        'numpy>=1.17.0',
        'pandas>=1.0.0',
        'pint',
        'pyyaml',
        'scipy>=1.0.0',
    ],
    extras_require={
        'test': ['pytest'],
    },
    package_data={'ctcsync': ['presets.yaml']},
    entry_points={
        'console_scripts': [
            'ctcsync=ctcsync.harness.cli:main',
        ],
    },
)
