# Configuration file for the Sphinx documentation builder.
# http://www.sphinx-doc.org/en/master/config

import os
import sys
sys.path.insert(0, os.path.abspath('..'))

from wong_zakai_lab import __version__  # noqa: E402

# -- Project information -----------------------------------------------------

project = 'wong_zakai_lab'
copyright = '2026, the wong_zakai_lab developers'
author = 'the wong_zakai_lab developers'

master_doc = 'index'

release = __version__
version = '.'.join(release.split('.')[:2])


# -- General configuration ---------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
]

# Google-style Args:/Returns:/Raises: sections only.
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_use_ivar = True

templates_path = ['_templates']

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']


# -- Options for HTML output -------------------------------------------------

html_theme = 'alabaster'

html_static_path = ['_static']

# Autodoc Options

autoclass_content = 'both'

autodoc_member_order = 'bysource'

autodoc_default_options = {'undoc-members': False, 'show-inheritance': True}
