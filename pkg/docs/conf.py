from __future__ import annotations

from sphinx_api_relink.helpers import get_package_version

REPO_TITLE = "Privacy-preserving release of smart-meter data"
PACKAGE_NAME = "di_release"

add_module_names = False
api_target_substitutions: dict[str, str | tuple[str, str]] = {
    "Array": "tomlkit.items.Array",
    "Callable": "typing.Callable",
    "ClipMode": ("obj", "di_release.optim.ClipMode"),
    "DistortionKind": ("obj", "di_release.privmech.DistortionKind"),
    "HeadKind": ("obj", "di_release.neural.HeadKind"),
    "Iterable": "typing.Iterable",
    "Iterator": "typing.Iterator",
    "LabelSemantics": ("obj", "di_release.data.LabelSemantics"),
    "Mapping": "collections.abc.Mapping",
    "Namespace": "argparse.Namespace",
    "P.args": ("attr", "typing.ParamSpec.args"),
    "P.kwargs": ("attr", "typing.ParamSpec.kwargs"),
    "P": "typing.ParamSpec",
    "Path": "pathlib.Path",
    "PrivacyTerm": ("obj", "di_release.privmech.PrivacyTerm"),
    "Sequence": "typing.Sequence",
    "SyntheticTask": ("obj", "di_release.data.synthetic.SyntheticTask"),
    "T": "typing.TypeVar",
    "Table": "tomlkit.items.Table",
    "TOMLDocument": "tomlkit.TOMLDocument",
    "np.ndarray": "numpy.ndarray",
    "pd.DataFrame": "pandas.DataFrame",
}
autodoc_member_order = "bysource"
autodoc_typehints_format = "short"
autosectionlabel_prefix_document = True
codeautolink_concat_default = True
copybutton_prompt_is_regexp = True
copybutton_prompt_text = r">>> |\.\.\. "  # doctest
default_role = "py:obj"
extensions = [
    "myst_parser",
    "sphinx_api_relink",
    "sphinx_codeautolink",
    "sphinx_copybutton",
    "sphinx.ext.autodoc",
    "sphinx.ext.autosectionlabel",
    "sphinx.ext.doctest",
    "sphinx.ext.intersphinx",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
    "sphinxarg.ext",
]
generate_apidoc_package_path = f"../src/{PACKAGE_NAME}"
html_copy_source = True
html_last_updated_fmt = "%-d %B %Y"
html_show_copyright = False
html_show_sourcelink = False
html_show_sphinx = False
html_sourcelink_suffix = ""
html_theme = "sphinx_book_theme"
html_theme_options = {
    "logo": {"text": "di-release"},
    "path_to_docs": "docs",
    "show_navbar_depth": 2,
    "show_toc_level": 2,
    "use_download_button": False,
}
html_title = REPO_TITLE
intersphinx_mapping = {
    "attrs": ("https://www.attrs.org/en/stable", None),
    "numpy": ("https://numpy.org/doc/stable", None),
    "pandas": ("https://pandas.pydata.org/docs", None),
    "python": ("https://docs.python.org/3", None),
    "scipy": ("https://docs.scipy.org/doc/scipy", None),
    "tomlkit": ("https://tomlkit.readthedocs.io/en/stable", None),
}
myst_enable_extensions = [
    "colon_fence",
    "dollarmath",
]
nitpick_ignore_regex = [
    ("py:class", r"^.*.[A-Z]$"),
]
nitpicky = True
primary_domain = "py"
project = PACKAGE_NAME
release = get_package_version(PACKAGE_NAME)
version = get_package_version(PACKAGE_NAME)
