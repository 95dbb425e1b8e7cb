"""Backend selection for the array kernels.

The compiled module is preferred when importable.  Set SWLATTICE_BACKEND to
"python" or "cython" to force a choice; "cython" raises if the extension is
missing rather than silently falling back, since the backend is part of the
reproducibility envelope of a run.
"""

import os

from . import _kernels_np

_choice = os.environ.get("SWLATTICE_BACKEND", "auto").strip().lower()

if _choice not in ("auto", "cython", "python"):
    raise RuntimeError(f"SWLATTICE_BACKEND must be auto, cython or python, got {_choice!r}")

if _choice == "python":
    kernels = _kernels_np
    _name = "python"
else:
    try:
        from . import _kernels_cy as kernels  # type: ignore[no-redef]

        _name = "cython"
    except ImportError:
        if _choice == "cython":
            raise RuntimeError(
                "SWLATTICE_BACKEND=cython but the compiled extension is not available"
            ) from None
        kernels = _kernels_np
        _name = "python"

forward_diff = kernels.forward_diff
forward_diff_transpose = kernels.forward_diff_transpose
cov_forward = kernels.cov_forward
cov_forward_transpose = kernels.cov_forward_transpose


def backend_name() -> str:
    """Name of the active kernel backend, "cython" or "python"."""
    return _name
