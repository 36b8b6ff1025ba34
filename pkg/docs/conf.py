#!/usr/bin/env python3
# -*- coding: utf-8 -*-
#
# quasiplanes documentation build configuration file.

import sys
import os

sys.path.insert(0, os.path.abspath(".."))

from quasiplanes.__version__ import VERSION, __version__

# -- General configuration ------------------------------------------------

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.mathjax',
    'sphinx.ext.napoleon'
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'quasiplanes'
copyright = '2026, quasiplanes developers'
author = 'quasiplanes developers'

version = '.'.join(map(str, VERSION[:2]))
release = __version__

exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
pygments_style = 'sphinx'

# -- Options for HTML output ----------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_static_path = ['_static']
htmlhelp_basename = 'quasiplanesdoc'

# -- Options for manual page output ---------------------------------------

man_pages = [
    (master_doc, 'quasiplanes', 'quasiplanes Documentation', [author], 1)
]
