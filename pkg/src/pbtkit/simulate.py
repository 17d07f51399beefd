"""Operator-level simulator: builds the actual measurement families on
(C^d)^{N+1} and evaluates channel merits by direct trace arithmetic.

This module is the ground truth the closed-form engine is checked against.
Systems are ordered A_1..A_N, C; the teleported half never appears because
every trace it would enter collapses onto the N+1 remaining factors.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import partitions as pt
from .errors import (
    ConsistencyError,
    DomainError,
    LabelingError,
    UnsupportedVariantError,
)
from .merits import (
    MeritReport,
    OptVector,
    ProtocolVariant,
    multiplicity_square_sum,
    qubit_optimal_eigenvector,
)
from .operators import (
    DenseOperator,
    check_dim_cap,
    hermitize,
    inv_sqrt_on_support,
    maximally_entangled_projector,
    port_transposition,
    rho_operator,
    signal_state,
    young_projector,
)

_PSD_TOL = 1e-10
_COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True)
class PovmSet:
    variant: ProtocolVariant
    N: int
    d: int
    elements: tuple[DenseOperator, ...]
    labels: tuple[int, ...]
    includes_failure: bool

    def __post_init__(self):
        if len(self.elements) != len(self.labels):
            raise DomainError("one label per element required")
        success = sorted(l for l in self.labels if l != 0)
        if success != list(range(1, self.N + 1)):
            raise DomainError(
                f"success labels {success} must be exactly 1..{self.N}"
            )
        if (0 in self.labels) != self.includes_failure:
            raise DomainError("failure label and includes_failure flag disagree")
        dim = self.d ** (self.N + 1)
        total = np.zeros((dim, dim))
        for op in self.elements:
            if op.entries.shape != (dim, dim):
                raise DomainError("element dimension mismatch")
            low = float(np.linalg.eigvalsh(hermitize(op.entries))[0])
            if low < -_PSD_TOL:
                raise ConsistencyError(
                    f"element has negative eigenvalue {low}"
                )
            total = total + op.entries
        deviation = float(np.max(np.abs(total - np.eye(dim))))
        if deviation > _COMPLETENESS_TOL:
            raise ConsistencyError(
                f"elements sum to identity only within {deviation}"
            )

    def failure_element(self) -> DenseOperator:
        if not self.includes_failure:
            raise DomainError(f"{self.variant.value} carries no failure element")
        return self.elements[self.labels.index(0)]


@dataclass(frozen=True)
class SpectralBlock:
    eigenvalue: float
    exact: Fraction
    dimension: int
    projector: DenseOperator
    label: tuple[pt.PartitionT, pt.PartitionT] | None


@dataclass(frozen=True)
class SpectralDecomposition:
    N: int
    d: int
    blocks: tuple[SpectralBlock, ...]
    support_dimension: int


def _wrap(matrix: np.ndarray, N: int, d: int) -> DenseOperator:
    matrix.setflags(write=False)
    return DenseOperator(matrix, N + 1, d)


@lru_cache(maxsize=None)
def _srm_family(N: int, d: int):
    """Square-root measurement of the signal ensemble plus its excess term."""
    dim = check_dim_cap(N + 1, d)
    rho = rho_operator(N, d).entries
    root = inv_sqrt_on_support(rho)
    elements = []
    total = np.zeros((dim, dim))
    for i in range(1, N + 1):
        pi = hermitize(root @ signal_state(i, N, d).entries @ root)
        pi.setflags(write=False)
        elements.append(pi)
        total = total + pi
    delta = hermitize(np.eye(dim) - total)
    delta.setflags(write=False)
    return tuple(elements), delta


def _pair_block(alpha: pt.PartitionT, N: int, d: int) -> np.ndarray:
    """P_alpha on the first N-1 ports tensored with the pair projector on
    (A_N, C)."""
    p_alpha = young_projector(alpha, N - 1, d).entries
    return np.kron(p_alpha, maximally_entangled_projector(d).entries)


def _covariance_orbit(top: np.ndarray, N: int, d: int) -> list[np.ndarray]:
    """Elements for ports 1..N from the port-N element via transpositions."""
    ordered = []
    for i in range(1, N):
        v = port_transposition(i, N, N, d).entries
        ordered.append(hermitize(v @ top @ v))
    ordered.append(top)
    return ordered


@lru_cache(maxsize=None)
def _ppbt_nonopt_elements(N: int, d: int):
    dim = check_dim_cap(N + 1, d)
    top = np.zeros((dim, dim))
    for alpha in pt.enumerate_partitions(N - 1, d):
        star, _ = pt.gamma_star(alpha, N, d)
        top = top + float(d / star) * _pair_block(alpha, N, d)
    ordered = _covariance_orbit(hermitize(top), N, d)
    failure = hermitize(np.eye(dim) - sum(ordered))
    for arr in ordered:
        arr.setflags(write=False)
    failure.setflags(write=False)
    return tuple(ordered), failure


def _optimizer_coefficients(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None
) -> dict[pt.PartitionT, float]:
    """Young-block weights of the diagonal optimizer operator."""
    frames = pt.enumerate_partitions(N, d)
    if variant is ProtocolVariant.PPBT_OPT:
        g = Fraction(1, multiplicity_square_sum(N, d))
        return {
            mu: float(
                Fraction(d**N)
                * g
                * Fraction(pt.gl_multiplicity(mu, d), pt.sym_dimension(mu))
            )
            ** 0.5
            for mu in frames
        }
    if variant is ProtocolVariant.DPBT_OPT:
        if v is None:
            if d != 2:
                raise UnsupportedVariantError(
                    "the deterministic optimizer needs an explicit eigenvector "
                    "for d > 2"
                )
            v = qubit_optimal_eigenvector(N)
        elif (v.N, v.d) != (N, d):
            raise DomainError(
                f"optimizer vector is for (N, d) = ({v.N}, {v.d}), wanted ({N}, {d})"
            )
        scale = d**N
        return {
            mu: v[mu]
            * (scale / (pt.sym_dimension(mu) * pt.gl_multiplicity(mu, d))) ** 0.5
            for mu in frames
        }
    raise DomainError(f"no optimizer is defined for {variant}")


def _block_diagonal(coeffs: dict[pt.PartitionT, float], N: int, d: int) -> np.ndarray:
    dim = d**N
    out = np.zeros((dim, dim))
    for mu, c in coeffs.items():
        out = out + c * young_projector(mu, N, d).entries
    return hermitize(out)


def optimizer_operator(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> DenseOperator:
    """Resource-rotation operator on the N ports; tr(O^2) = d^N."""
    variant = ProtocolVariant(variant)
    coeffs = _optimizer_coefficients(variant, N, d, v)
    matrix = _block_diagonal(coeffs, N, d)
    trace = float(np.trace(matrix @ matrix))
    if abs(trace - d**N) > 1e-8 * d**N:
        raise ConsistencyError(
            f"optimizer normalization tr(O^2) = {trace}, expected {d ** N}"
        )
    matrix.setflags(write=False)
    return DenseOperator(matrix, N, d)


@lru_cache(maxsize=None)
def _ppbt_opt_elements(N: int, d: int):
    """True optimized probabilistic elements: the printed pair-projector form
    holds for the optimizer-conjugated (effective) operators, so the POVM
    itself carries the inverse rotation."""
    dim = check_dim_cap(N + 1, d)
    g = Fraction(1, multiplicity_square_sum(N, d))
    top = np.zeros((dim, dim))
    for alpha in pt.enumerate_partitions(N - 1, d):
        u = (
            Fraction(d ** (N + 1), N)
            * g
            * Fraction(pt.gl_multiplicity(alpha, d), pt.sym_dimension(alpha))
        )
        top = top + float(u) * _pair_block(alpha, N, d)
    coeffs = _optimizer_coefficients(ProtocolVariant.PPBT_OPT, N, d, None)
    inverse = _block_diagonal({mu: 1.0 / c for mu, c in coeffs.items()}, N, d)
    inv_full = np.kron(inverse, np.eye(d))
    top = hermitize(inv_full @ top @ inv_full)
    ordered = _covariance_orbit(top, N, d)
    failure = hermitize(np.eye(dim) - sum(ordered))
    for arr in ordered:
        arr.setflags(write=False)
    failure.setflags(write=False)
    return tuple(ordered), failure


def build_povms(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> PovmSet:
    """Measurement family for a variant.

    The optimized may-fail and deterministic variants reuse the plain
    square-root elements: the optimizer is scalar on every eigenblock of the
    signal sum, so rotating the ensemble leaves its square-root measurement
    unchanged. The rotation shows up only through the states, i.e. through
    the optimizer passed to channel_merits.
    """
    variant = ProtocolVariant(variant)
    if variant in (ProtocolVariant.MPBT_OPTIMIZED, ProtocolVariant.DPBT_OPT):
        if v is None and d != 2:
            raise UnsupportedVariantError(
                f"{variant.value} needs an optimizer vector for d > 2"
            )
        if v is not None and (v.N, v.d) != (N, d):
            raise DomainError(
                f"optimizer vector is for (N, d) = ({v.N}, {v.d}), wanted ({N}, {d})"
            )
    if variant in (ProtocolVariant.MPBT, ProtocolVariant.MPBT_OPTIMIZED):
        elements, delta = _srm_family(N, d)
        ops = [_wrap(e, N, d) for e in elements] + [_wrap(delta, N, d)]
        return PovmSet(variant, N, d, tuple(ops), tuple(range(1, N + 1)) + (0,), True)
    if variant in (ProtocolVariant.DPBT_NONOPT, ProtocolVariant.DPBT_OPT):
        elements, delta = _srm_family(N, d)
        ops = [_wrap(hermitize(e + delta / N), N, d) for e in elements]
        return PovmSet(variant, N, d, tuple(ops), tuple(range(1, N + 1)), False)
    if variant is ProtocolVariant.PPBT_NONOPT:
        ordered, failure = _ppbt_nonopt_elements(N, d)
        ops = [_wrap(e, N, d) for e in ordered] + [_wrap(failure, N, d)]
        return PovmSet(variant, N, d, tuple(ops), tuple(range(1, N + 1)) + (0,), True)
    if variant is ProtocolVariant.PPBT_OPT:
        ordered, failure = _ppbt_opt_elements(N, d)
        ops = [_wrap(e, N, d) for e in ordered] + [_wrap(failure, N, d)]
        return PovmSet(variant, N, d, tuple(ops), tuple(range(1, N + 1)) + (0,), True)
    raise UnsupportedVariantError(
        f"{variant.value} is produced by convert_to_deterministic, not built directly"
    )


_CONVERSION_MAP = {
    ProtocolVariant.MPBT: ProtocolVariant.DPBT_NONOPT,
    ProtocolVariant.MPBT_OPTIMIZED: ProtocolVariant.DPBT_OPT,
    ProtocolVariant.PPBT_NONOPT: ProtocolVariant.CONVERTED_FROM_PPBT_NONOPT,
    ProtocolVariant.PPBT_OPT: ProtocolVariant.CONVERTED_FROM_PPBT_OPT,
}


def convert_to_deterministic(povms: PovmSet) -> PovmSet:
    """Spread the failure element uniformly over the port outcomes."""
    if not povms.includes_failure:
        raise DomainError(
            f"{povms.variant.value} has no failure element to redistribute"
        )
    failure = povms.failure_element().entries
    ops = []
    labels = []
    for op, label in zip(povms.elements, povms.labels):
        if label == 0:
            continue
        ops.append(_wrap(hermitize(op.entries + failure / povms.N), povms.N, povms.d))
        labels.append(label)
    return PovmSet(
        _CONVERSION_MAP[povms.variant],
        povms.N,
        povms.d,
        tuple(ops),
        tuple(labels),
        False,
    )


def _optimizer_on_ports(
    optimizer: DenseOperator | np.ndarray | None, N: int, d: int
) -> np.ndarray | None:
    if optimizer is None:
        return None
    entries = optimizer.entries if isinstance(optimizer, DenseOperator) else optimizer
    if entries.shape != (d**N, d**N):
        raise DomainError(
            f"optimizer acts on {entries.shape}, wanted ({d ** N}, {d ** N})"
        )
    return np.kron(entries, np.eye(d))


def channel_merits(
    povms: PovmSet, optimizer: DenseOperator | np.ndarray | None = None
) -> MeritReport:
    """Evaluate merits by direct traces against the signal ensemble.

    With an optimizer O the element enters as (O^dag x 1) E (O x 1): for the
    rotated protocols this reproduces teleporting through the rotated
    resource while keeping the plain signal states as the reference frame.
    """
    N, d = povms.N, povms.d
    full = _optimizer_on_ports(optimizer, N, d)
    fid_sum = 0.0
    trace_sum = 0.0
    for op, label in zip(povms.elements, povms.labels):
        if label == 0:
            continue
        eff = op.entries if full is None else full.conj().T @ op.entries @ full
        sigma = signal_state(label, N, d).entries
        fid_sum += float(np.trace(eff @ sigma).real)
        trace_sum += float(np.trace(eff).real)
    p_succ = trace_sum / d ** (N + 1)
    f_det = fid_sum / d**2
    return MeritReport(
        variant=povms.variant,
        N=N,
        d=d,
        p_succ=p_succ,
        fidelity=f_det / p_succ,
        deterministic_fidelity=f_det,
        provenance="simulated",
    )


def m0_rho_overlap(
    povms: PovmSet, optimizer: DenseOperator | np.ndarray | None = None
) -> float:
    """tr(M_0 rho) against the (possibly rotated) signal sum."""
    N, d = povms.N, povms.d
    failure = povms.failure_element().entries
    rho = rho_operator(N, d).entries
    full = _optimizer_on_ports(optimizer, N, d)
    if full is not None:
        rho = full @ rho @ full.conj().T
    return float(np.trace(failure @ rho).real)


def spectral_decompose_rho(N: int, d: int) -> SpectralDecomposition:
    """Eigenblocks of the signal sum, each matched to its exact prediction.

    Predictions come from exact rational arithmetic, so any unmatched block
    signals a genuine construction bug and is surfaced verbatim.
    """
    check_dim_cap(N + 1, d)
    predicted: dict[Fraction, list] = {}
    for alpha, mu in pt.admissible_pairs(N, d):
        m_alpha = pt.gl_multiplicity(alpha, d)
        if m_alpha == 0:
            continue
        value = pt.rho_eigenvalue(alpha, mu, N, d)
        entry = predicted.setdefault(value, [0, []])
        entry[0] += pt.sym_dimension(mu) * m_alpha
        entry[1].append((alpha, mu))
    rho = rho_operator(N, d).entries
    eigenvalues, vectors = np.linalg.eigh(hermitize(rho))
    order = np.argsort(eigenvalues)[::-1]
    eigenvalues = eigenvalues[order]
    vectors = vectors[:, order]

    groups: list[list[int]] = []
    for idx, lam in enumerate(eigenvalues):
        if lam <= 1e-9:
            if lam < -1e-9:
                raise LabelingError(f"negative eigenvalue {lam} in the signal sum")
            continue
        if groups and abs(eigenvalues[groups[-1][0]] - lam) <= 1e-9 * max(
            1.0, abs(lam)
        ):
            groups[-1].append(idx)
        else:
            groups.append([idx])

    targets = sorted(predicted.items(), key=lambda kv: kv[0], reverse=True)
    if len(groups) != len(targets):
        raise LabelingError(
            f"found {len(groups)} eigenvalue groups, predicted {len(targets)}: "
            f"numeric {[float(eigenvalues[g[0]]) for g in groups]}, "
            f"exact {[float(k) for k, _ in targets]}"
        )
    blocks = []
    support = 0
    for group, (exact, (dim, labels)) in zip(groups, targets):
        lam = float(eigenvalues[group[0]])
        if abs(lam - float(exact)) > 1e-9:
            raise LabelingError(
                f"eigenvalue {lam} does not match predicted {float(exact)} "
                f"({exact}) within 1e-9"
            )
        if len(group) != dim:
            raise LabelingError(
                f"eigenvalue {lam} spans dimension {len(group)}, predicted {dim} "
                f"for labels {labels}"
            )
        basis = vectors[:, group]
        projector = hermitize(basis @ basis.conj().T)
        blocks.append(
            SpectralBlock(
                eigenvalue=lam,
                exact=exact,
                dimension=dim,
                projector=_wrap(projector, N, d),
                label=labels[0] if len(labels) == 1 else None,
            )
        )
        support += dim
    return SpectralDecomposition(N, d, tuple(blocks), support)


_RESOURCE_NAMES = ("nonopt", "optP", "optD")

_PAIR_TO_RESOURCES = {
    "optP_vs_optD": ("optP", "optD"),
    "optD_vs_optP": ("optP", "optD"),
    "nonopt_vs_optP": ("nonopt", "optP"),
    "optP_vs_nonopt": ("nonopt", "optP"),
    "nonopt_vs_optD": ("nonopt", "optD"),
    "optD_vs_nonopt": ("nonopt", "optD"),
}


def _resource_matrix(name: str, N: int, d: int, v: OptVector | None) -> np.ndarray:
    if name == "nonopt":
        return np.eye(d**N)
    if name == "optP":
        return optimizer_operator(ProtocolVariant.PPBT_OPT, N, d).entries
    if name == "optD":
        return optimizer_operator(ProtocolVariant.DPBT_OPT, N, d, v).entries
    raise DomainError(f"unknown resource {name!r}; choose from {_RESOURCE_NAMES}")


def state_overlap_numeric(
    pair: str | tuple[str, str], N: int, d: int, v: OptVector | None = None
) -> float:
    """Square-root fidelity of two resource states as (1/d^N) tr(O_1 O_2).

    Both resources are rotations of the same pair product, so their overlap
    collapses onto the ports alone; the 2(N+1)-system states never appear.
    """
    if isinstance(pair, str):
        try:
            first, second = _PAIR_TO_RESOURCES[pair]
        except KeyError:
            raise DomainError(
                f"unknown overlap pair {pair!r}; choose from "
                f"{sorted(set(_PAIR_TO_RESOURCES.values()))}"
            )
    else:
        first, second = pair
    a = _resource_matrix(first, N, d, v)
    b = _resource_matrix(second, N, d, v)
    return float(np.trace(a @ b).real) / d**N
