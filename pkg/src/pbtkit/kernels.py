"""Hot numeric kernels: tensor-factor permutations as index maps.

A permutation pi of n tensor factors never needs a dense matrix product; it
is a relabelling of computational basis states. The kernels here build those
index maps and accumulate weighted sums of permutation matrices (the inner
loop of isotypic projector construction, n! terms).

Two implementations are kept in sync: a numba @njit fast path and a pure
numpy fallback. Set PBT_NO_NUMBA=1 before import to force the fallback.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("PBT_NO_NUMBA", "").lower() not in ("1", "true", "yes")
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:
        USE_NUMBA = False

if not USE_NUMBA:

    def njit(*args, **kwargs):  # pragma: no cover - trivial decorator shim
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def digits_table(n: int, d: int) -> np.ndarray:
    """(d^n, n) table of base-d digits; column 0 is the most significant."""
    dim = d**n
    idx = np.arange(dim, dtype=np.int64)
    table = np.empty((dim, n), dtype=np.int64)
    for k in range(n - 1, -1, -1):
        table[:, k] = idx % d
        idx //= d
    return table


def place_values(n: int, d: int) -> np.ndarray:
    return d ** np.arange(n - 1, -1, -1, dtype=np.int64)


def perm_index_map(perm: tuple[int, ...], n: int, d: int) -> np.ndarray:
    """Index map of the operator sending factor k of the input to factor
    perm[k] of the output: out[i] is the row holding column i's 1.
    """
    digits = digits_table(n, d)
    places = place_values(n, d)
    target = np.asarray(perm, dtype=np.int64)
    return digits @ places[target]


@njit(cache=True)
def _accumulate_nb(perms, weights, digits, places, out):  # pragma: no cover - jit
    m, n = perms.shape
    dim = digits.shape[0]
    for p in range(m):
        w = weights[p]
        if w == 0.0:
            continue
        for col in range(dim):
            row = 0
            for k in range(n):
                row += digits[col, k] * places[perms[p, k]]
            out[row, col] += w
    return out


def _accumulate_np(perms, weights, digits, places, out):
    for p in range(perms.shape[0]):
        w = weights[p]
        if w == 0.0:
            continue
        rows = digits @ places[perms[p]]
        out[rows, np.arange(digits.shape[0])] += w
    return out


def accumulate_weighted_perms(
    perms: np.ndarray, weights: np.ndarray, n: int, d: int
) -> np.ndarray:
    """Dense sum_p weights[p] * V(perms[p]) on (C^d)^(tensor n).

    perms: (m, n) int array, each row a permutation of range(n).
    """
    perms = np.ascontiguousarray(perms, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    digits = digits_table(n, d)
    places = place_values(n, d)
    out = np.zeros((d**n, d**n), dtype=np.float64)
    if USE_NUMBA:
        return _accumulate_nb(perms, weights, digits, places, out)
    return _accumulate_np(perms, weights, digits, places, out)
