"""Backend selection for the detection-threshold scan.

The compiled extension is preferred when importable; otherwise the numpy
fallback is used. Both implementations follow the same arithmetic order and
return bit-identical results, so selection only affects speed.
"""
from __future__ import annotations

from contextlib import contextmanager

from . import _depscan_py as _pure

try:
    from . import _depscan as _compiled
except ImportError:
    _compiled = None

_active = _compiled if _compiled is not None else _pure


def backend_name() -> str:
    return "compiled" if _active is _compiled else "python"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def _module_for(name: str):
    if name == "python":
        return _pure
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


@contextmanager
def use_backend(name: str):
    """Force a specific backend within a block (tests and benchmarks)."""
    global _active
    previous = _active
    _active = _module_for(name)
    try:
        yield
    finally:
        _active = previous


def optimal_dep(hwm, hwg, c1, c2, sigma2, grid_points, quantile, rel_tol):
    """Minimize empirical dep over detection thresholds; see _depscan_py."""
    return _active.optimal_dep(
        hwm, hwg, c1, c2, sigma2, grid_points, quantile, rel_tol
    )


def optimal_dep_batch(hwm, hwg, c1_arr, c2_arr, sigma2, grid_points, quantile, rel_tol):
    """Vectorized optimal_dep over paired (c1, c2) arrays, shared draws."""
    return _active.optimal_dep_batch(
        hwm, hwg, c1_arr, c2_arr, sigma2, grid_points, quantile, rel_tol
    )
