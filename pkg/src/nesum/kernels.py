"""Hot-loop kernels with an import-time backend choice.

The compiled extension ``nesum._kernels`` is used when it was built; otherwise
(or when ``NESUM_PURE_PYTHON=1`` is set) the pure-Python module is used.
Both backends take token sequences and encode them to integer ids first.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_compiled = None

if not os.environ.get("NESUM_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled

        BACKEND = "cython"
    except ImportError:
        _compiled = None


def encode_pair(a, b):
    """Map two token sequences onto a shared integer alphabet."""
    ids = {}
    ea = [ids.setdefault(t, len(ids)) for t in a]
    eb = [ids.setdefault(t, len(ids)) for t in b]
    return ea, eb


def _as_array(seq):
    return np.asarray(seq, dtype=np.longlong)


def lcs_length(a, b, backend=None):
    """Longest common subsequence length of two token sequences."""
    backend = backend or BACKEND
    ea, eb = encode_pair(a, b)
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return int(_compiled.lcs_length(_as_array(ea), _as_array(eb)))
    return _kernels_py.lcs_length(ea, eb)


def longest_common_run(a, b, backend=None):
    """Longest common contiguous run of two token sequences."""
    backend = backend or BACKEND
    ea, eb = encode_pair(a, b)
    if backend == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return int(_compiled.longest_common_run(_as_array(ea), _as_array(eb)))
    return _kernels_py.longest_common_run(ea, eb)


def available_backends():
    return ["python"] + (["cython"] if _compiled is not None else [])
