"""Kernel dispatch: compiled extension when importable, numpy otherwise."""

import os

from . import _pykernels

BACKEND = "python"
nearest_codewords = _pykernels.nearest_codewords
coset_min_weights = _pykernels.coset_min_weights

if os.environ.get("MDLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        nearest_codewords = _ckernels.nearest_codewords
        coset_min_weights = _ckernels.coset_min_weights

__all__ = ["BACKEND", "nearest_codewords", "coset_min_weights"]
