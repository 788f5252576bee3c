"""Backend selection: compiled kernel core with a pure-numpy fallback.

``tholdout._core`` (Cython) is preferred when it was built; otherwise the
numpy implementations in ``tholdout._core_py`` are used.  Setting the
environment variable ``THOLDOUT_FORCE_PYTHON=1`` before import forces the
fallback (used by the backend benchmarks and tests).
"""

from __future__ import annotations

import os

from . import _core_py

if os.environ.get("THOLDOUT_FORCE_PYTHON", "") == "1":
    core = _core_py
else:
    try:
        from . import _core as core  # type: ignore[no-redef]
    except ImportError:
        core = _core_py

HAVE_COMPILED = bool(getattr(core, "IS_COMPILED", False))
BACKEND_NAME = "compiled" if HAVE_COMPILED else "python"

hist_hellinger_sq = core.hist_hellinger_sq
hist_lq = core.hist_lq
gauss_kde_pdf = core.gauss_kde_pdf
dp_partition = core.dp_partition
birge_sum = core.birge_sum
baraud_sum = core.baraud_sum
LOG_SATURATION = core.LOG_SATURATION
