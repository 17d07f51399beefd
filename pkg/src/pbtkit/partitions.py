"""Exact combinatorics of integer partitions and irrep data.

Partitions are plain tuples of weakly decreasing positive ints, e.g. (3, 1);
the empty partition is (). Everything here is exact: results are ints,
Fractions, or tuples thereof. No floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import DomainError

PartitionT = tuple[int, ...]


def check_partition(rows: PartitionT) -> PartitionT:
    """Validate canonical form: weakly decreasing, all parts >= 1."""
    rows = tuple(int(r) for r in rows)
    if any(r < 1 for r in rows):
        raise DomainError(f"partition parts must be positive: {rows}")
    if any(rows[i] < rows[i + 1] for i in range(len(rows) - 1)):
        raise DomainError(f"partition rows must weakly decrease: {rows}")
    return rows


def height(rows: PartitionT) -> int:
    return len(rows)


def size(rows: PartitionT) -> int:
    return sum(rows)


@lru_cache(maxsize=None)
def enumerate_partitions(n: int, max_height: int | None = None) -> tuple[PartitionT, ...]:
    """All partitions of n with at most max_height rows, decreasing lexicographic.

    n = 0 yields the empty partition as the single element. max_height=None
    means unbounded.
    """
    if n < 0:
        raise DomainError("n must be non-negative")
    if n == 0:
        return ((),)
    bound = n if max_height is None else max_height

    def gen(remaining: int, max_part: int, rows_left: int):
        if remaining == 0:
            yield ()
            return
        if rows_left == 0:
            return
        for first in range(min(remaining, max_part), 0, -1):
            for rest in gen(remaining - first, first, rows_left - 1):
                yield (first,) + rest

    return tuple(gen(n, n, bound))


def box_neighbors(rows: PartitionT, direction: str) -> list[PartitionT]:
    """Partitions reachable by adding or removing one box, decreasing lex order."""
    rows = check_partition(rows)
    out: list[PartitionT] = []
    if direction == "add":
        for i in range(len(rows)):
            if i == 0 or rows[i - 1] > rows[i]:
                out.append(rows[:i] + (rows[i] + 1,) + rows[i + 1:])
        out.append(rows + (1,))
    elif direction == "remove":
        for i in range(len(rows)):
            if i == len(rows) - 1 or rows[i] > rows[i + 1]:
                shrunk = rows[:i] + (rows[i] - 1,) + rows[i + 1:]
                out.append(tuple(r for r in shrunk if r > 0))
    else:
        raise DomainError(f"direction must be 'add' or 'remove', got {direction!r}")
    out.sort(reverse=True)
    return out


def conjugate(rows: PartitionT) -> PartitionT:
    rows = check_partition(rows)
    if not rows:
        return ()
    return tuple(sum(1 for r in rows if r > j) for j in range(rows[0]))


def _hook_length(rows: PartitionT, conj: PartitionT, i: int, j: int) -> int:
    return (rows[i] - j) + (conj[j] - i) - 1


@lru_cache(maxsize=None)
def sym_dimension(rows: PartitionT) -> int:
    """Dimension of the symmetric-group irrep labelled by the partition.

    Hook-length formula; for a two-row partition (N-l, l) this equals
    C(N, l) - C(N, l-1).
    """
    rows = check_partition(rows)
    n = size(rows)
    if n == 0:
        return 1
    conj = conjugate(rows)
    hooks = 1
    for i in range(len(rows)):
        for j in range(rows[i]):
            hooks *= _hook_length(rows, conj, i, j)
    dim, rem = divmod(math.factorial(n), hooks)
    assert rem == 0
    return dim


@lru_cache(maxsize=None)
def gl_multiplicity(rows: PartitionT, d: int) -> int:
    """Dimension of the GL(d) irrep with the given highest weight.

    This is the multiplicity of the symmetric-group irrep in the Schur-Weyl
    decomposition of (C^d)^(tensor n). Zero when the partition has more than
    d rows; for d=2 and (N-l, l) it equals N-2l+1.
    """
    rows = check_partition(rows)
    if d < 1:
        raise DomainError("d must be >= 1")
    if len(rows) > d:
        return 0
    if not rows:
        return 1
    conj = conjugate(rows)
    num = 1
    den = 1
    for i in range(len(rows)):
        for j in range(rows[i]):
            num *= d + j - i
            den *= _hook_length(rows, conj, i, j)
    mult, rem = divmod(num, den)
    assert rem == 0
    return mult


def _beta_set(rows: PartitionT) -> tuple[int, ...]:
    k = len(rows)
    return tuple(rows[i] + (k - 1 - i) for i in range(k))


def _beta_to_partition(beta: list[int]) -> PartitionT:
    beta = sorted(beta, reverse=True)
    k = len(beta)
    rows = tuple(beta[i] - (k - 1 - i) for i in range(k))
    return tuple(r for r in rows if r > 0)


@lru_cache(maxsize=None)
def character(rows: PartitionT, cycle_type: PartitionT) -> int:
    """Irreducible symmetric-group character via the Murnaghan-Nakayama rule."""
    rows = check_partition(rows)
    cycle_type = check_partition(cycle_type)
    if size(rows) != size(cycle_type):
        raise DomainError(
            f"partition of {size(rows)} paired with cycle type of {size(cycle_type)}"
        )
    return _mn_character(rows, cycle_type)


@lru_cache(maxsize=None)
def _mn_character(rows: PartitionT, cycle_type: PartitionT) -> int:
    if not cycle_type:
        return 1
    length = cycle_type[0]
    rest = cycle_type[1:]
    beta = _beta_set(rows)
    beta_lookup = set(beta)
    total = 0
    for b in beta:
        target = b - length
        if target < 0 or target in beta_lookup:
            continue
        crossings = sum(1 for other in beta if target < other < b)
        new_beta = [target if x == b else x for x in beta]
        total += (-1) ** crossings * _mn_character(_beta_to_partition(new_beta), rest)
    return total


def class_size(cycle_type: PartitionT) -> int:
    """Number of permutations with the given cycle type."""
    cycle_type = check_partition(cycle_type)
    n = size(cycle_type)
    z = 1
    for part in set(cycle_type):
        count = cycle_type.count(part)
        z *= part**count * math.factorial(count)
    return math.factorial(n) // z


@dataclass(frozen=True)
class IrrepData:
    partition: PartitionT
    sym_dim: int
    gl_mult: int
    local_dim: int


def irrep_data(rows: PartitionT, d: int) -> IrrepData:
    rows = check_partition(rows)
    return IrrepData(rows, sym_dimension(rows), gl_multiplicity(rows, d), d)


def admissible_pairs(N: int, d: int) -> list[tuple[PartitionT, PartitionT]]:
    """All (alpha, mu) with alpha of N-1 boxes, mu = alpha plus one box,
    and both heights at most d."""
    if N < 1:
        raise DomainError("N must be >= 1")
    pairs = []
    for alpha in enumerate_partitions(N - 1, d):
        for mu in box_neighbors(alpha, "add"):
            if height(mu) <= d:
                pairs.append((alpha, mu))
    return pairs


def gamma(alpha: PartitionT, mu: PartitionT, N: int, d: int) -> Fraction:
    """Rational spectrum parameter N * m_mu * d_alpha / (m_alpha * d_mu).

    The associated eigenvalue of the combined-signal state is gamma / d^N.
    """
    alpha = check_partition(alpha)
    mu = check_partition(mu)
    if size(alpha) != N - 1:
        raise DomainError(f"alpha must have {N - 1} boxes, got {alpha}")
    if mu not in box_neighbors(alpha, "add"):
        raise DomainError(f"{mu} is not {alpha} plus one box")
    m_alpha = gl_multiplicity(alpha, d)
    m_mu = gl_multiplicity(mu, d)
    if m_alpha == 0 or m_mu == 0:
        raise DomainError(f"pair ({alpha}, {mu}) not admissible at local dimension {d}")
    return Fraction(N * m_mu * sym_dimension(alpha), m_alpha * sym_dimension(mu))


def rho_eigenvalue(alpha: PartitionT, mu: PartitionT, N: int, d: int) -> Fraction:
    return gamma(alpha, mu, N, d) / d**N


def gamma_star(alpha: PartitionT, N: int, d: int) -> tuple[Fraction, PartitionT]:
    """Maximum of gamma over admissible one-box extensions of alpha.

    Returns (value, argmax); ties broken toward the lexicographically
    larger extension.
    """
    alpha = check_partition(alpha)
    if gl_multiplicity(alpha, d) == 0:
        raise DomainError(f"{alpha} not admissible at local dimension {d}")
    best: tuple[Fraction, PartitionT] | None = None
    for mu in box_neighbors(alpha, "add"):
        if height(mu) > d:
            continue
        value = gamma(alpha, mu, N, d)
        if best is None or value > best[0] or (value == best[0] and mu > best[1]):
            best = (value, mu)
    if best is None:
        raise DomainError(f"no admissible extension of {alpha} at d={d}")
    return best


@dataclass(frozen=True)
class SpinSector:
    """One total-spin sector of N qubits: multiplicity 2j+1, dimension d_j."""

    N: int
    j: Fraction
    d_j: int
    m_j: int
    partition: PartitionT


def spin_sectors(N: int) -> list[SpinSector]:
    """Spin sectors of N qubits, decreasing j, matching two-row partitions."""
    if N < 1:
        raise DomainError("N must be >= 1")
    sectors = []
    for two_j in range(N, -1 if N % 2 == 0 else 0, -2):
        j = Fraction(two_j, 2)
        a = (N + two_j) // 2
        b = (N - two_j) // 2
        m_j = two_j + 1
        d_j, rem = divmod(m_j * math.factorial(N), math.factorial(b) * math.factorial(a + 1))
        assert rem == 0
        partition = (a, b) if b > 0 else (a,)
        sectors.append(SpinSector(N, j, d_j, m_j, partition))
    return sectors
