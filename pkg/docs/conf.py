#!/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Sphinx configuration of the cc_synth documentation. Only the settings that
# differ from the sphinx defaults are listed.
import os
import sys

here = os.path.dirname(__file__)
sys.path.insert(0, os.path.abspath(os.path.join(here, '..')))

import cc_synth  # noqa: E402

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon',
              'sphinx.ext.mathjax']
# Docstrings use the Google style
napoleon_google_docstring = True
napoleon_numpy_docstring = False
autodoc_member_order = 'bysource'

source_suffix = '.rst'
master_doc = 'index'

project = 'cc_synth'
author = "cc_synth developers"
copyright = '2026, ' + author
version = cc_synth.__version__
release = cc_synth.__version__

exclude_patterns = ['_build', 'apidocs/modules.rst']
pygments_style = 'sphinx'


def run_apidoc(_):
    """Regenerate the API pages of the package before every build."""
    out = os.path.abspath(os.path.join(here, 'apidocs'))
    src = os.path.abspath(os.path.join(here, '..', 'cc_synth'))
    from sphinx.ext import apidoc
    apidoc.main(['-f', '-T', '-e', '-M', '-o', out, src])


def setup(app):
    app.connect('builder-inited', run_apidoc)


html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'cc_synth_doc'
