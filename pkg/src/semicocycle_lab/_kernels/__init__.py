"""Kernel selection: compiled Cython core with a pure-numpy fallback.

Set SEMICOCYCLE_LAB_PURE_PY=1 to force the fallback (used by the benchmark
and by CI environments without a compiler).
"""

import os

from . import _poly_py

if os.environ.get("SEMICOCYCLE_LAB_PURE_PY", "") not in ("", "0"):
    _impl = _poly_py
else:
    try:
        from . import _poly_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _poly_py

IMPL = _impl.IMPL
poly_eval = _impl.poly_eval
poly_dderiv = _impl.poly_dderiv
evolve_poly = _impl.evolve_poly

OK = _poly_py.OK
ESCAPED = _poly_py.ESCAPED
STIFF = _poly_py.STIFF
BLOWUP = _poly_py.BLOWUP
