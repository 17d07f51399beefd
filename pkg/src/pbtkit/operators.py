"""Dense operator constructions on (C^d)^(tensor n).

Factor convention throughout the package: a system of N ports plus one input
factor lives on n = N+1 tensor factors; factor positions 0..N-1 are the ports
A_1..A_N and position N is the input C. Basis indices are big-endian in base
d (factor 0 is the most significant digit).

Operators are real in the computational basis, so matrices are float64.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from . import partitions as pt
from .errors import (
    DomainError,
    NotPositiveSemidefiniteError,
    ResourceCapError,
)

DEFAULT_MAX_DIM = 4096
# permutation count grows like n!; index-map accumulation stays fast up to 8
YOUNG_PROJECTOR_MAX_FACTORS = 8


def max_dim() -> int:
    raw = os.environ.get("PBT_MAX_DIM", "")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise DomainError(f"PBT_MAX_DIM must be an integer, got {raw!r}")
    return DEFAULT_MAX_DIM


def check_dim_cap(n: int, d: int) -> int:
    dim = d**n
    cap = max_dim()
    if dim > cap:
        raise ResourceCapError(
            f"dimension d^n = {d}^{n} = {dim} exceeds the cap {cap} "
            "(override with PBT_MAX_DIM)"
        )
    return dim


@dataclass(frozen=True)
class DenseOperator:
    """Square matrix on (C^d)^(tensor n) with its factor structure."""

    entries: np.ndarray
    n_factors: int
    local_dim: int

    def __post_init__(self):
        dim = self.local_dim**self.n_factors
        if self.entries.shape != (dim, dim):
            raise DomainError(
                f"matrix shape {self.entries.shape} does not match "
                f"d^n = {self.local_dim}^{self.n_factors}"
            )

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_factors

    def hermitian_residual(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T.conj())))


def permutation_operator(perm: tuple[int, ...], n: int, d: int) -> DenseOperator:
    """Unitary relabelling of tensor factors: input factor k goes to perm[k].

    Satisfies V(pi) V(tau) = V(pi o tau) with (pi o tau)(k) = pi(tau(k)).
    """
    if sorted(perm) != list(range(n)):
        raise DomainError(f"{perm} is not a permutation of range({n})")
    dim = check_dim_cap(n, d)
    rows = kernels.perm_index_map(tuple(perm), n, d)
    mat = np.zeros((dim, dim), dtype=np.float64)
    mat[rows, np.arange(dim)] = 1.0
    return DenseOperator(mat, n, d)


def _cycle_type(perm: tuple[int, ...]) -> pt.PartitionT:
    n = len(perm)
    seen = [False] * n
    lengths = []
    for start in range(n):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


@lru_cache(maxsize=None)
def _symmetric_group(n: int):
    """All permutations of range(n) plus the index of each one's cycle type."""
    perms = np.array(list(itertools.permutations(range(n))), dtype=np.int64)
    types = pt.enumerate_partitions(n)
    type_pos = {t: k for k, t in enumerate(types)}
    type_index = np.array(
        [type_pos[_cycle_type(tuple(p))] for p in perms], dtype=np.int64
    )
    return perms, type_index, types


@lru_cache(maxsize=None)
def young_projector(rows: pt.PartitionT, n: int, d: int) -> DenseOperator:
    """Isotypic projector of the symmetric-group irrep on (C^d)^(tensor n).

    P = (dim / n!) * sum over permutations of character * V(perm). Idempotent,
    commutes with every V(perm), trace = sym_dim * gl_mult.
    """
    rows = pt.check_partition(rows)
    if pt.size(rows) != n:
        raise DomainError(f"{rows} is not a partition of {n}")
    if n > YOUNG_PROJECTOR_MAX_FACTORS:
        raise ResourceCapError(
            f"isotypic projector needs {n}! permutation terms; capped at "
            f"n <= {YOUNG_PROJECTOR_MAX_FACTORS}"
        )
    check_dim_cap(n, d)
    perms, type_index, types = _symmetric_group(n)
    d_rows = pt.sym_dimension(rows)
    char_by_type = np.array(
        [pt.character(rows, t) for t in types], dtype=np.float64
    )
    weights = (d_rows / math.factorial(n)) * char_by_type[type_index]
    mat = kernels.accumulate_weighted_perms(perms, weights, n, d)
    mat.setflags(write=False)
    return DenseOperator(mat, n, d)


def maximally_entangled_projector(d: int) -> DenseOperator:
    """Rank-one projector onto (1/sqrt d) sum_k |kk> on two factors."""
    vec = np.zeros(d * d)
    vec[np.arange(d) * d + np.arange(d)] = 1.0 / math.sqrt(d)
    return DenseOperator(np.outer(vec, vec), 2, d)


def embedded_pair_projector(i: int, N: int, d: int) -> DenseOperator:
    """Maximally entangled projector on the pair (A_i, C), identity elsewhere."""
    if not 1 <= i <= N:
        raise DomainError(f"port index {i} out of range 1..{N}")
    n = N + 1
    dim = check_dim_cap(n, d)
    places = kernels.place_values(n, d)
    pair_places = (places[i - 1], places[N])
    rest = [k for k in range(n) if k not in (i - 1, N)]
    if rest:
        base = kernels.digits_table(len(rest), d) @ places[rest]
    else:
        base = np.zeros(1, dtype=np.int64)
    mat = np.zeros((dim, dim), dtype=np.float64)
    for a in range(d):
        rows = base + a * (pair_places[0] + pair_places[1])
        for b in range(d):
            cols = base + b * (pair_places[0] + pair_places[1])
            mat[rows, cols] = 1.0 / d
    return DenseOperator(mat, n, d)


def signal_state(i: int, N: int, d: int) -> DenseOperator:
    """Port-i signal: maximally entangled pair (A_i, C), maximally mixed rest."""
    proj = embedded_pair_projector(i, N, d)
    return DenseOperator(proj.entries / d ** (N - 1), N + 1, d)


def rho_operator(N: int, d: int) -> DenseOperator:
    """Sum of all N signal states; trace N; commutes with port permutations."""
    total = np.zeros((d ** (N + 1), d ** (N + 1)))
    for i in range(1, N + 1):
        total += signal_state(i, N, d).entries
    return DenseOperator(total, N + 1, d)


def port_transposition(i: int, j: int, N: int, d: int) -> DenseOperator:
    """V of the transposition (A_i A_j) on the N+1 factor space."""
    perm = list(range(N + 1))
    perm[i - 1], perm[j - 1] = perm[j - 1], perm[i - 1]
    return permutation_operator(tuple(perm), N + 1, d)


def partial_transpose_last(matrix: np.ndarray, n: int, d: int) -> np.ndarray:
    """Transpose on the last tensor factor only."""
    outer = d ** (n - 1)
    shaped = matrix.reshape(outer, d, outer, d)
    return np.ascontiguousarray(shaped.transpose(0, 3, 2, 1)).reshape(
        outer * d, outer * d
    )


def hermitize(matrix: np.ndarray) -> np.ndarray:
    return (matrix + matrix.T.conj()) / 2


def psd_eigh(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a PSD matrix, symmetrized first.

    Raises if an eigenvalue is more negative than -1e-8 times the largest.
    """
    sym = hermitize(matrix)
    vals, vecs = np.linalg.eigh(sym)
    top = float(vals[-1]) if vals.size else 0.0
    floor = -1e-8 * max(top, 0.0)
    if vals.size and vals[0] < floor:
        raise NotPositiveSemidefiniteError(
            f"eigenvalue {vals[0]:.3e} below PSD floor {floor:.3e}"
        )
    return vals, vecs


def _spectral_apply(matrix: np.ndarray, fn, rel_tol: float) -> np.ndarray:
    vals, vecs = psd_eigh(matrix)
    top = float(vals[-1]) if vals.size else 0.0
    keep = vals > rel_tol * top
    transformed = np.where(keep, fn(np.where(keep, vals, 1.0)), 0.0)
    return (vecs * transformed) @ vecs.T.conj()


def sqrt_psd(matrix: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    return _spectral_apply(matrix, np.sqrt, rel_tol)


def inv_sqrt_on_support(matrix: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Pseudo-inverse square root: eigenvalues below rel_tol * max are null."""
    return _spectral_apply(matrix, lambda v: 1.0 / np.sqrt(v), rel_tol)


def support_projector(matrix: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    return _spectral_apply(matrix, np.ones_like, rel_tol)


def sqrt_fidelity(a: np.ndarray, b: np.ndarray, rel_tol: float = 1e-12) -> float:
    """Square-root fidelity tr sqrt(sqrt(a) b sqrt(a)) of two density matrices.

    Eigenvalues below rel_tol times the largest are numerical null space;
    dropping them keeps the square root from amplifying rounding noise.
    """
    s = sqrt_psd(a)
    inner = hermitize(s @ b @ s)
    vals = np.linalg.eigvalsh(inner)
    top = float(vals[-1]) if vals.size else 0.0
    vals = np.where(vals > rel_tol * max(top, 0.0), vals, 0.0)
    return float(np.sqrt(vals).sum())


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    vals = np.linalg.eigvalsh(hermitize(a - b))
    return 0.5 * float(np.abs(vals).sum())
