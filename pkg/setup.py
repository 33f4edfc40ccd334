# -*- coding: utf-8 -*-
from setuptools import setup, find_packages
from splitpipe import __version__

REQUIREMENTS = [
    'Django>=3.2,<5.0',
    'tablib>=3.0',
    'numpy>=1.21',
    'networkx>=2.6',
    'simpy>=4.0',
]

CLASSIFIERS = [
    'Development Status :: 4 - Beta',
    'Environment :: Console',
    'Framework :: Django',
    'Framework :: Django :: 3.2',
    'Framework :: Django :: 4.2',
    'Intended Audience :: Science/Research',
    'License :: OSI Approved :: BSD License',
    'Operating System :: OS Independent',
    'Programming Language :: Python',
    'Programming Language :: Python :: 3.8',
    'Programming Language :: Python :: 3.9',
    'Programming Language :: Python :: 3.10',
    'Programming Language :: Python :: 3.11',
    'Topic :: Scientific/Engineering',
    'Topic :: System :: Distributed Computing',
]

setup(
    name='splitpipe',
    version=__version__,
    description='Plan cuts, placements and micro-batch sizes for pipelined split learning',
    author='splitpipe contributors',
    packages=find_packages(exclude=['tests', 'tests.*']),
    license='LICENSE.txt',
    platforms=['OS Independent'],
    install_requires=REQUIREMENTS,
    classifiers=CLASSIFIERS,
    include_package_data=True,
    zip_safe=False,
    entry_points={
        'console_scripts': [
            'splitpipe=splitpipe.cli:main',
        ],
    },
    test_suite='tests.settings.run',
)
