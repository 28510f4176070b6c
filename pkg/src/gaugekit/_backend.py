"""Select the compiled kernel module, falling back to numpy.

Set ``GAUGEKIT_PURE_PYTHON=1`` to force the fallback (used by the
benchmark and by the backend-parity tests).
"""

import os

from . import _core_py

if os.environ.get("GAUGEKIT_PURE_PYTHON", "") not in ("", "0"):
    kernels = _core_py
    NAME = "python"
else:
    try:
        from . import _core as kernels  # type: ignore[attr-defined]

        NAME = "cython"
    except ImportError:
        kernels = _core_py
        NAME = "python"

green_block = kernels.green_block
green_apply = kernels.green_apply
poisson_block = kernels.poisson_block
smoothed_block = kernels.smoothed_block
smoothed_apply = kernels.smoothed_apply
