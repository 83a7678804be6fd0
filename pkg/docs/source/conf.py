# -*- coding: utf-8 -*-
#
# moderr documentation build configuration file.

import sys
import os

# Make the package importable without installing it.
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__),
    "..", "..")))

import sphinx_rtd_theme

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.doctest',
    'sphinx.ext.intersphinx',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'moderr'
copyright = u'2019, the moderr developers'

version = '0.1'
release = '0.1.0'

exclude_patterns = []
pygments_style = 'sphinx'

html_theme = 'sphinx_rtd_theme'
html_theme_path = [sphinx_rtd_theme.get_html_theme_path()]
htmlhelp_basename = 'moderrdoc'

latex_elements = {
}
latex_documents = [
  ('index', 'moderr.tex', u'moderr Documentation',
   u'the moderr developers', 'manual'),
]

man_pages = [
    ('index', 'moderr', u'moderr Documentation',
     [u'the moderr developers'], 1)
]

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable', None),
    'scipy': ('https://docs.scipy.org/doc/scipy', None),
}
