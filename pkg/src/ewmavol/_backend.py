"""Kernel backend selection plus the array preparation both backends share.

The compiled Cython module ``_kernels`` is used when importable; otherwise
the numpy implementation in ``_kernels_py`` is used. Set
``EWMAVOL_BACKEND=python`` (or ``cython``) to force one.
"""

from __future__ import annotations

import logging
import os
from types import ModuleType
from typing import Optional

import numpy as np

from . import _kernels_py

logger = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available_backends() -> tuple:
    return tuple(sorted(_BACKENDS))


def resolve(name: Optional[str] = None) -> ModuleType:
    """Return the kernel module for ``name`` ("auto", "cython", "python")."""
    name = name or os.environ.get("EWMAVOL_BACKEND", "auto")
    if name == "auto":
        return _BACKENDS.get("cython", _kernels_py)
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} unavailable; choose from {available_backends()}"
        ) from None


def default_backend_name() -> str:
    return resolve().NAME


def default_threads() -> int:
    return os.cpu_count() or 1


def cross_products(returns: np.ndarray) -> np.ndarray:
    """Per-row upper-triangle cross-products, shape (n_rows, A(A+1)/2)."""
    returns = np.ascontiguousarray(returns, dtype=float)
    iu, ju = np.triu_indices(returns.shape[1])
    return np.ascontiguousarray(returns[:, iu] * returns[:, ju])


def weight_table(lambdas: np.ndarray, max_lags: int) -> np.ndarray:
    """``table[l, n] = lambdas[l] ** n`` for n = 0..max_lags."""
    lambdas = np.asarray(lambdas, dtype=float)
    powers = np.arange(max_lags + 1, dtype=float)
    return np.ascontiguousarray(np.power(lambdas[:, None], powers[None, :]))


def norm_table(lambdas: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``table[l, n] = (1 - lambda) / (1 - lambda ** n)``; column 0 is unused (NaN)."""
    lambdas = np.asarray(lambdas, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        table = (1.0 - lambdas[:, None]) / (1.0 - weights)
    table[:, 0] = np.nan
    return np.ascontiguousarray(table)
