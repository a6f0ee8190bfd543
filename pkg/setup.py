from pathlib import Path
from setuptools import setup, find_packages

_path = Path('requirements.txt')
with _path.open() as requirements:
    requires = [l.strip() for l in requirements if l.strip()]

setup(name='garnet',
      description='Cavity-magnon polariton spectra: transmission, branches and fits.',
      long_description='Simulation of cavity transmission with magnon modes, polariton '
                       'branches, parameter extraction from field-frequency maps and '
                       'derived coupling figures, stored as AnnData.',
      license='BSD 3',
      packages=find_packages(exclude=['tests', 'tests.*']),
      install_requires=requires,
      extras_require={
          'test': ['pytest'],
      },
      entry_points={
          'console_scripts': ['garnet = garnet.cli:main'],
      },
      classifiers=[
          'Development Status :: 3 - Alpha',
          'Intended Audience :: Science/Research',
          'Topic :: Scientific/Engineering :: Physics',
          'License :: OSI Approved :: BSD License',
          'Programming Language :: Python :: 3.8',
          'Programming Language :: Python :: 3.9',
          'Programming Language :: Python :: 3.10',
          'Programming Language :: Python :: 3.11',
      ],
      python_requires='>=3.8',
      zip_safe=False,
      version='0.1.0',
      )
