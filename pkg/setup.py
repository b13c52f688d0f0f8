#!/usr/bin/python3
import sys
from setuptools import setup
from meshloc.settings import VERSION

if sys.version_info < (3, 7):
    sys.exit('Python 3.7 is required to run meshloc')


setup(
    name='meshloc',
    version=VERSION,
    license='GPL-3',
    packages=['meshloc', 'meshloc.util', 'meshloc.sensors'],
    scripts=['bin/meshloc'],
    install_requires=[
        'PyYAML',
        'numpy',
        'scipy',
        'numba',
        'trimesh'
    ],
    test_suite='tests',
    description='Localize range sensors directly in triangle mesh maps',
    long_description="""meshloc registers range sensor scans (rotating LiDARs,
    depth cameras or arbitrary ray layouts) against triangle mesh maps. Rays
    are simulated from the current pose estimate, measured points are
    projected onto the simulated surfaces and an SVD turns the resulting
    correspondences into a pose correction. Several sensors can be combined
    into a single correction.""",
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 or later (GPLv3+)',
        'Programming Language :: Python',
        'Operating System :: POSIX :: Linux',
        'Topic :: Scientific/Engineering'
    ],
)
