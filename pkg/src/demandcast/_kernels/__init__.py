"""Hot numeric kernels with a compiled core and a pure-Python fallback.

The Cython extension ``_fast`` is preferred when importable; otherwise the
numpy/scipy implementations in ``_slow`` are used.  Set the environment
variable ``DEMANDCAST_PURE=1`` to force the fallback (used by the
benchmark and the backend cross-check tests).
"""

import os

from . import _slow

if os.environ.get("DEMANDCAST_PURE") == "1":
    _impl = _slow
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _slow
        BACKEND = "python"

css_innovations = _impl.css_innovations
arma_simulate = _impl.arma_simulate
arma_forecast = _impl.arma_forecast
cd_lasso_gram = _impl.cd_lasso_gram

__all__ = [
    "BACKEND",
    "arma_forecast",
    "arma_simulate",
    "cd_lasso_gram",
    "css_innovations",
]
