"""Backend selection for the compiled kernels.

Set ``MODUMECH_BACKEND=numpy`` to force the pure-numpy path; the default is
``numba`` whenever it can be imported.
"""
import os

try:
    import numba  # noqa: F401
    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    HAS_NUMBA = False


def requested_backend():
    name = os.environ.get("MODUMECH_BACKEND", "numba").strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"MODUMECH_BACKEND must be 'numba' or 'numpy', got {name!r}")
    if name == "numba" and not HAS_NUMBA:
        return "numpy"
    return name
