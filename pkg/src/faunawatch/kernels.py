"""Hot-loop kernels, compiled when available.

The Cython extension ``faunawatch._kernels`` is used if it was built;
otherwise the pure-Python versions in ``_kernels_py`` are used. Set
``FAUNAWATCH_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

if os.environ.get("FAUNAWATCH_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "cython"

tokenize = _impl.tokenize
nb_log_likelihoods = _impl.nb_log_likelihoods
score_sentence = _impl.score_sentence

__all__ = ["BACKEND", "tokenize", "nb_log_likelihoods", "score_sentence"]
