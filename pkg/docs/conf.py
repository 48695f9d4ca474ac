# Configuration file for the Sphinx documentation builder.
#
# This file only contains a selection of the most common options. For a full
# list see the documentation:
# https://www.sphinx-doc.org/en/master/usage/configuration.html

# -- Path setup --------------------------------------------------------------

import datetime
import os
import sys

sys.path.insert(0, os.path.abspath("../"))

import coplanar  # noqa: E402

# -- Project information -----------------------------------------------------

project = coplanar.__title__
author = coplanar.__author__
copyright = f"{datetime.date.today().year}, {author}"
version = coplanar.__version__
release = coplanar.__version__

# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.napoleon",
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "sphinx_rtd_theme",
]
templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

# autodoc
autodoc_member_order = "bysource"


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
