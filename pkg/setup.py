from setuptools import setup, find_packages
import os

# Read the README file for the long description
def read_readme():
    with open(os.path.join(os.path.dirname(__file__), 'README.md'), encoding='utf-8') as f:
        return f.read()

setup(
    name="django-gelfand",
    version="0.1.0",
    packages=find_packages(exclude=['test_app', 'test_app.*', 'core_build', 'core_build.*']),
    include_package_data=True,
    package_data={
        'django_gelfand': [
            'data/*.g',
        ],
    },
    install_requires=[
        "Django>=4.2,<6.0",
        "numpy>=1.26,<3.0",
        "scipy>=1.11,<2.0",
    ],
    entry_points={
        'console_scripts': [
            'gelfand=django_gelfand.cli:main',
        ],
    },
    python_requires=">=3.10",
    description="A reusable Django app for Gelfand problems on weighted graphs: minimal solutions, extremal parameter, stability and bifurcation diagrams.",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    author="Lorenzo Silva",
    author_email="lorenzo.smb.rayo@gmail.com",
    license="MIT",
    url="https://github.com/LorenzoSilvaMoore/django-gelfand",
    project_urls={
        "Bug Tracker": "https://github.com/LorenzoSilvaMoore/django-gelfand/issues",
        "Documentation": "https://github.com/LorenzoSilvaMoore/django-gelfand#readme",
        "Source Code": "https://github.com/LorenzoSilvaMoore/django-gelfand",
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Framework :: Django",
        "Framework :: Django :: 4.2",
        "Framework :: Django :: 5.0",
        "Framework :: Django :: 5.1",
        "Framework :: Django :: 5.2",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords="django gelfand graphs bifurcation",
    zip_safe=False,
)
