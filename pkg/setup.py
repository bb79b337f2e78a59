from setuptools import setup

setup(
    name='django-conformal',
    version=__import__('django_conformal').__version__,
    description='Conformal measures, spectral radii and harmonic functions '
                'for group extensions of Markov shifts',
    packages=(
        'django_conformal',
        'django_conformal.management',
        'django_conformal.management.commands',
        'django_conformal.tests',
    ),
    package_data={
        'django_conformal': [
            'configs/*.json',
            'templates/django_conformal/*',
        ]
    },
    install_requires=(
        'Django>=3.2',
        'numpy',
        'scipy',
        'sympy',
    ),
    entry_points={
        'console_scripts': ['conformal = django_conformal.cli:main'],
    },
    classifiers=(
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: BSD License',
        'Operating System :: OS Independent',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
        'Framework :: Django',
    ),
)
