"""Kernel backend selection.

The compiled extension ``tactus._dsp`` is optional: if it was not built,
or the environment variable ``TACTUS_PURE_PYTHON`` is set to a non-empty
value, the NumPy implementations in ``tactus._dsp_py`` are used instead.
Both backends decode identical paths and agree numerically to rounding;
``benchmarks/bench_dsp.py`` compares their speed.
"""

import os

from . import _dsp_py

if os.environ.get("TACTUS_PURE_PYTHON"):
    _impl = _dsp_py
    BACKEND = "python"
else:
    try:
        from . import _dsp as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _dsp_py
        BACKEND = "python"

viterbi_sparse = _impl.viterbi_sparse
forward_sparse = _impl.forward_sparse
comb_filter_bank = _impl.comb_filter_bank
