from setuptools import setup, find_packages

setup(
    name="unfitted_hdg",
    version="0.0.1",
    license="MIT",
    packages=find_packages(exclude=['docs', 'examples', 'examples.*']),
    install_requires=['numpy>=1.0,<2',
                      'scipy',
                      'sacred',
                      'easydict',
                      # matplotlib.path does the point-in-polygon tests of the cut quadrature
                      'matplotlib',
                      'pandas'],
    extras_require={'test': ['pytest>=4',
                             'pytest-mock',
                             'flake8',
                             'pydocstyle',
                             'pytest_cov>=2.0']},
    entry_points={'console_scripts': ['solve = unfitted_hdg.cli:main']},

    classifiers=[
        # How mature is this project? Common values are
        #   3 - Alpha
        #   4 - Beta
        #   5 - Production/Stable
        'Development Status :: 3 - Alpha',

        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8'
    ],
)
