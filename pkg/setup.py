"""A setuptools based setup module.

See:
https://packaging.python.org/guides/distributing-packages-using-setuptools/
"""

from setuptools import setup, find_packages
from os import path

here = path.abspath(path.dirname(__file__))

# Get the long description from the README file
with open(path.join(here, 'README.md'), encoding='utf-8') as f:
    long_description = f.read()

# Read requirements.txt
with open(path.join(here, 'requirements.txt'), encoding='utf-8') as f:
    requirements = [line for line in f.read().split('\n') if line.strip()]

setup(
    name='pylag',
    version='0.1.0',
    description='Travelling equilibria of phenotype distributions under a moving optimum',
    license='AGPL-3.0-or-later',
    long_description=long_description,
    long_description_content_type='text/markdown',
    author='pylag developers',
    packages=find_packages(include=['pylag', 'pylag.*']),
    package_data={'pylag': ['../config/*']},
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=requirements,
    entry_points={
        'console_scripts': ['pylag=pylag.cli:main']
    }
)
