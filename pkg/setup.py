from setuptools import setup, find_packages

setup(
    name='coper',
    version='0.1.0',
    packages=find_packages(exclude=['test', 'examples*']),
    py_modules=['coper'],
    package_data={'cli': ['configs/*.ini']},
    data_files=[('model_configs', ['model_configs/desk.json', 'model_configs/wide.json',
                                   'model_configs/tune_grid.json'])],
    entry_points={'console_scripts': ['coper = cli.main:main']},
    install_requires=[
        'einops',
        'numpy',
        'pandas',
        'prefigure',
        'pytorch_lightning',
        'scikit-learn',
        'scipy',
        'torch',
        'tqdm',
        'wandb',
    ],
)
