# Configuration file for the Sphinx documentation builder.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

project = 'garnet'
copyright = '2026, garnet developers'
author = 'garnet developers'
release = '0.1.0'

extensions = ['autoapi.extension']
autoapi_dirs = ['../../garnet']


def skip_private_modules(app, what, name, obj, skip, options):
    # the public API is re-exported from each subpackage
    if what == 'module' and name.rsplit('.', 1)[-1].startswith('_'):
        skip = True
    return skip


def setup(sphinx):
    sphinx.connect('autoapi-skip-member', skip_private_modules)


napoleon_numpy_docstring = True
napoleon_google_docstring = False
napoleon_use_param = True
napoleon_use_rtype = True
napoleon_attr_annotations = True

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'pandas': ('https://pandas.pydata.org/pandas-docs/stable/', None),
    'anndata': ('https://anndata.readthedocs.io/en/stable/', None),
    'scanpy': ('https://scanpy.readthedocs.io/en/stable/', None),
    'joblib': ('https://joblib.readthedocs.io/en/latest/', None),
}

templates_path = ['_templates']
exclude_patterns = []

html_theme = 'sphinx_rtd_theme'
html_theme_options = {'logo_only': False}
html_static_path = []
