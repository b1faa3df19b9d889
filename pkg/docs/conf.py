# Sphinx configuration of the ctcsync documentation.
import os
import sys

sys.path.insert(0, os.path.abspath('..'))
import ctcsync  # noqa: E402

project = 'Ctcsync'
copyright = u'2026, the ctcsync developers'
author = u'The ctcsync developers'
version = ctcsync.__version__
release = ctcsync.__version__

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.autosummary',
    'sphinx_automodapi.automodapi',
    'sphinx.ext.doctest',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
]
numpydoc_show_class_members = False  # required by automodapi

templates_path = ['_templates']
source_suffix = ['.rst']
master_doc = 'index'
exclude_patterns = ['_build']

html_theme = 'sphinx_rtd_theme'
html_static_path = []
htmlhelp_basename = 'Ctcsyncdoc'

latex_documents = [
    (master_doc, 'Ctcsync.tex', 'Ctcsync Documentation', author, 'manual'),
]
man_pages = [
    (master_doc, 'ctcsync', 'Ctcsync Documentation', [author], 1),
]

# Google-style docstrings only
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_special_with_doc = True
napoleon_use_param = True
napoleon_use_rtype = True

autoclass_content = 'both'
autodoc_inherit_docstrings = True
autodoc_default_options = {
    'member-order': 'bysource',
}
