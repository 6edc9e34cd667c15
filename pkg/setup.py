import io
from setuptools import setup

with io.open('README.rst', 'rt', encoding='utf8') as f:
    long_description = f.read()

setup(
    name='constrained_inversion',
    version='1.0.0',
    description='Bayesian inversion with soft constraints: exact importance weighting and constraint-reweighted EnKF',
    long_description=long_description,
    license='MIT',
    keywords='inverse problems ensemble kalman filter constraints bayesian',
    packages=['constrained_inversion'],
    install_requires=['numpy', 'scipy'],
    entry_points={
        'console_scripts': ['constrained-inversion = constrained_inversion.cli:main'],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
)
