# Sphinx configuration of the pylag documentation.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

from pylag import __version__  # noqa: E402

project = 'pylag'
author = 'pylag developers'
copyright = '2021, pylag developers'
version = __version__
release = __version__

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon']
autodoc_member_order = 'bysource'
napoleon_google_docstring = True
napoleon_numpy_docstring = False

master_doc = 'index'
exclude_patterns = ['_build']
pygments_style = 'sphinx'
html_theme = 'classic'
