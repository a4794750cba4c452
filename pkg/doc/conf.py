# -*- coding: utf-8 -*-
#
# topkrange documentation build configuration file.
#
# This file is execfile()d with the current directory set to its containing dir.

import sys, os

# the package lives one directory up
sys.path.insert(0, os.path.abspath('..'))

# -- General configuration -----------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.todo', 'sphinx.ext.coverage',
              'sphinx.ext.intersphinx']

todo_include_todos = True

templates_path = ['_templates']

source_suffix = '.rst'

master_doc = 'index'

project = u'topkrange'
copyright = u'2026, topkrange contributors'

import topkrange
# The short X.Y version.
version = '%s.%s' % (topkrange.version_info[0], topkrange.version_info[1])
# The full version, including alpha/beta/rc tags.
release = topkrange.__version__

exclude_trees = ['_build']

show_authors = False

pygments_style = 'sphinx'

intersphinx_mapping = {'python': ('https://docs.python.org/3', None),
                       'numpy': ('https://numpy.org/doc/stable', None)}

# -- Options for HTML output ---------------------------------------------------

html_theme = 'default'

html_static_path = ['_static']

htmlhelp_basename = 'topkrangedoc'

# -- Options for LaTeX output --------------------------------------------------

latex_documents = [
  ('index', 'topkrange.tex', u'topkrange Documentation',
   u'topkrange contributors', 'manual'),
]
