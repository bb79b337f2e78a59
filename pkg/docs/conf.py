# -*- coding: utf-8 -*-
#
# django-conformal documentation build configuration file.

extensions = []

templates_path = ['.templates']

source_suffix = '.txt'

master_doc = 'index'

project = u'django-conformal'

version = '0.1'
release = '0.1.0pre'

exclude_trees = []

pygments_style = 'sphinx'

html_static_path = ['.static']

html_use_modindex = False

html_use_index = False

html_copy_source = False

htmlhelp_basename = 'django-conformaldoc'

latex_documents = [
  ('index', 'django-conformal.tex', u'django-conformal Documentation',
   u'', 'manual'),
]
