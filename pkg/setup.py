from setuptools import setup, find_packages

setup(name='anosov_gym',
      version='0.1.0',
      packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
      install_requires=[
            # the following two are required to install gym==0.20.0
            'setuptools==65.5.0',
            'pyglet==1.5.27',
            'gym==0.20.0',
            'numpy',
            'scipy',
            'tqdm',
      ],
      extras_require={
            'test': ['pytest'],
      },
      entry_points={
            'console_scripts': ['anosov-gym=anosov_gym.cli:main'],
      },
)
