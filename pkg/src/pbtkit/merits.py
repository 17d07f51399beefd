"""Closed-form figures of merit for the eight protocol variants.

Conventions: N ports of local dimension d. A protocol variant bundles a
resource state (plain product of maximally entangled pairs, or pre-rotated
by an optimizer), a measurement family, and a failure-handling rule:

- mpbt / mpbt-opt: may fail AND distort; reports (p_succ, F) jointly.
- dpbt-nonopt / dpbt-opt: never fails, output distorted.
- ppbt-nonopt / ppbt-opt: may fail, faithful on success.
- converted-ppbt-*: deterministic protocols obtained from the probabilistic
  ones by pointing the failure outcome at a uniformly random port.

Rational quantities are returned as exact Fractions; square roots and
trigonometry force floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from . import partitions as pt
from .errors import ConsistencyError, DomainError, UnsupportedVariantError


class ProtocolVariant(str, Enum):
    MPBT = "mpbt"
    MPBT_OPTIMIZED = "mpbt-opt"
    DPBT_NONOPT = "dpbt-nonopt"
    DPBT_OPT = "dpbt-opt"
    PPBT_NONOPT = "ppbt-nonopt"
    PPBT_OPT = "ppbt-opt"
    CONVERTED_FROM_PPBT_NONOPT = "converted-ppbt-nonopt"
    CONVERTED_FROM_PPBT_OPT = "converted-ppbt-opt"

    @classmethod
    def from_string(cls, name: str) -> "ProtocolVariant":
        try:
            return cls(name)
        except ValueError:
            raise DomainError(
                f"unknown protocol variant {name!r}; choose from "
                f"{[v.value for v in cls]}"
            )


DETERMINISTIC_VARIANTS = frozenset(
    {
        ProtocolVariant.DPBT_NONOPT,
        ProtocolVariant.DPBT_OPT,
        ProtocolVariant.CONVERTED_FROM_PPBT_NONOPT,
        ProtocolVariant.CONVERTED_FROM_PPBT_OPT,
    }
)


@dataclass(frozen=True)
class MeritReport:
    variant: ProtocolVariant
    N: int
    d: int
    p_succ: float
    fidelity: float | None
    deterministic_fidelity: float | None
    provenance: str
    p_succ_exact: Fraction | None = None
    fidelity_exact: Fraction | None = None
    deterministic_fidelity_exact: Fraction | None = None


@dataclass(frozen=True)
class OptVector:
    """Resource-optimizer eigenvector: one non-negative weight per frame."""

    N: int
    d: int
    entries: dict[pt.PartitionT, float]

    def __post_init__(self):
        expected = set(pt.enumerate_partitions(self.N, self.d))
        got = set(self.entries)
        if got != expected:
            raise DomainError(
                f"optimizer vector keys {sorted(got, reverse=True)} do not match "
                f"the admissible frames {sorted(expected, reverse=True)}"
            )
        if any(v < 0 for v in self.entries.values()):
            raise DomainError("optimizer vector entries must be non-negative")
        norm = sum(v * v for v in self.entries.values())
        if abs(norm - 1.0) > 1e-12:
            raise DomainError(f"optimizer vector norm {norm} differs from 1")

    def __getitem__(self, rows: pt.PartitionT) -> float:
        return self.entries[rows]


def qubit_optimal_eigenvector(N: int) -> OptVector:
    """Entries 2 sin(pi (2j+1)/(N+2)) / sqrt(N+2) per spin sector j.

    This is the top eigenvector of the qubit teleportation matrix; plugged
    into the deterministic optimized machinery it yields cos^2(pi/(N+2)).
    """
    entries = {}
    for sector in pt.spin_sectors(N):
        two_j = int(2 * sector.j)
        v = 2 * math.sin(math.pi * (two_j + 1) / (N + 2)) / math.sqrt(N + 2)
        entries[sector.partition] = v
    return OptVector(N, 2, entries)


def load_opt_vector(path: str) -> OptVector:
    """Read an optimizer vector from JSON:
    {"N": int, "d": int, "entries": [{"partition": [ints], "v": float}]}.
    """
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        N = int(raw["N"])
        d = int(raw["d"])
        entries = {
            tuple(int(r) for r in item["partition"]): float(item["v"])
            for item in raw["entries"]
        }
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed optimizer vector file {path}: {exc}")
    norm = sum(v * v for v in entries.values())
    if abs(norm - 1.0) > 1e-9:
        raise DomainError(
            f"optimizer vector in {path} has squared norm {norm}, expected 1"
        )
    # renormalize residual float noise so the stricter type invariant holds
    scale = 1.0 / math.sqrt(norm)
    entries = {k: v * scale for k, v in entries.items()}
    return OptVector(N, d, entries)


def _resolve_opt_vector(N: int, d: int, v: OptVector | None, what: str) -> OptVector:
    if v is None:
        if d == 2:
            return qubit_optimal_eigenvector(N)
        raise UnsupportedVariantError(
            f"{what} needs an optimizer vector for d = {d} > 2 "
            "(no closed form is known); supply one explicitly"
        )
    if (v.N, v.d) != (N, d):
        raise DomainError(
            f"optimizer vector is for (N, d) = ({v.N}, {v.d}), wanted ({N}, {d})"
        )
    return v


def multiplicity_square_sum(N: int, d: int) -> int:
    return sum(pt.gl_multiplicity(mu, d) ** 2 for mu in pt.enumerate_partitions(N, d))


def mpbt_success_closed_form_qubits(N: int) -> Fraction:
    return 1 - Fraction(N + 2, 2 ** (N + 1))


def ppbt_nonopt_success_readings(N: int, d: int) -> dict[str, Fraction]:
    """Two readings of the non-optimal probabilistic success normalization.

    The source equations admit two normalizations differing by a factor N.
    The operator-level simulator confirms "validated"; "alternate" is kept
    only so the discrimination test can show exactly one reading survives.
    """
    total = Fraction(0)
    for alpha in pt.enumerate_partitions(N - 1, d):
        m_alpha = pt.gl_multiplicity(alpha, d)
        ratios = [
            Fraction(pt.sym_dimension(mu), pt.gl_multiplicity(mu, d))
            for mu in pt.box_neighbors(alpha, "add")
            if pt.height(mu) <= d
        ]
        total += m_alpha**2 * min(ratios)
    validated = total / d**N
    return {"validated": validated, "alternate": validated / N}


def success_probability_analytic(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> Fraction | float:
    """Success probability; exact Fraction whenever the formula is rational."""
    variant = ProtocolVariant(variant)
    if N < 1 or d < 2:
        raise DomainError(f"need N >= 1 and d >= 2, got ({N}, {d})")
    if variant in DETERMINISTIC_VARIANTS:
        return Fraction(1)
    if variant is ProtocolVariant.MPBT:
        total = 0
        for alpha, mu in pt.admissible_pairs(N, d):
            total += pt.sym_dimension(mu) * pt.gl_multiplicity(alpha, d)
        p = Fraction(total, d ** (N + 1))
        if d == 2 and p != mpbt_success_closed_form_qubits(N):
            raise ConsistencyError(
                f"general success sum {p} differs from the qubit closed form "
                f"{mpbt_success_closed_form_qubits(N)} at N={N}"
            )
        return p
    if variant is ProtocolVariant.MPBT_OPTIMIZED:
        vec = _resolve_opt_vector(N, d, v, "optimized may-fail success probability")
        total = 0.0
        for alpha, mu in pt.admissible_pairs(N, d):
            ratio = Fraction(pt.gl_multiplicity(alpha, d), pt.gl_multiplicity(mu, d))
            total += float(ratio) * vec[mu] ** 2
        return total / d
    if variant is ProtocolVariant.PPBT_NONOPT:
        return ppbt_nonopt_success_readings(N, d)["validated"]
    if variant is ProtocolVariant.PPBT_OPT:
        return Fraction(N, N + d * d - 1)
    raise UnsupportedVariantError(f"no success probability for {variant}")


def _dpbt_nonopt_fidelity_qubit_form(N: int) -> float:
    total = 0.0
    for k in range(N + 1):
        term = (N - 2 * k - 1) / math.sqrt(k + 1) + (N - 2 * k + 1) / math.sqrt(
            N - k + 1
        )
        total += term * term * math.comb(N, k)
    return total / 2 ** (N + 3)


def deterministic_fidelity_analytic(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> float | Fraction:
    """Entanglement fidelity weighted by success (F_det = p_succ * F)."""
    variant = ProtocolVariant(variant)
    if variant in (ProtocolVariant.DPBT_NONOPT, ProtocolVariant.MPBT):
        # the failure branch is trace-orthogonal to every signal, so the
        # deterministic completion does not change this sum
        total = 0.0
        for alpha in pt.enumerate_partitions(N - 1, d):
            m_alpha = pt.gl_multiplicity(alpha, d)
            if m_alpha == 0:
                continue
            inner = 0.0
            for mu in pt.box_neighbors(alpha, "add"):
                if pt.height(mu) > d:
                    continue
                inner += math.sqrt(
                    pt.sym_dimension(mu) * pt.gl_multiplicity(mu, d)
                )
            total += inner * inner
        value = total / d ** (N + 2)
        if d == 2:
            alt = _dpbt_nonopt_fidelity_qubit_form(N)
            if abs(value - alt) > 1e-12:
                raise ConsistencyError(
                    f"frame-sum fidelity {value} differs from the qubit "
                    f"binomial form {alt} at N={N}"
                )
        return value
    if variant in (ProtocolVariant.DPBT_OPT, ProtocolVariant.MPBT_OPTIMIZED):
        if d != 2:
            raise UnsupportedVariantError(
                "optimized deterministic fidelity has no closed form for d > 2"
            )
        return math.cos(math.pi / (N + 2)) ** 2
    if variant in (ProtocolVariant.PPBT_NONOPT, ProtocolVariant.PPBT_OPT):
        return success_probability_analytic(variant, N, d, v)
    if variant in (
        ProtocolVariant.CONVERTED_FROM_PPBT_NONOPT,
        ProtocolVariant.CONVERTED_FROM_PPBT_OPT,
    ):
        source = (
            ProtocolVariant.PPBT_NONOPT
            if variant is ProtocolVariant.CONVERTED_FROM_PPBT_NONOPT
            else ProtocolVariant.PPBT_OPT
        )
        return converted_fidelity_analytic(source, N, d)
    raise UnsupportedVariantError(f"no deterministic fidelity for {variant}")


def fidelity_analytic(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> float | Fraction:
    """Entanglement fidelity conditioned on success."""
    variant = ProtocolVariant(variant)
    if variant in (ProtocolVariant.PPBT_NONOPT, ProtocolVariant.PPBT_OPT):
        return Fraction(1)
    if variant in DETERMINISTIC_VARIANTS:
        return deterministic_fidelity_analytic(variant, N, d, v)
    if variant in (ProtocolVariant.MPBT, ProtocolVariant.MPBT_OPTIMIZED):
        f_det = deterministic_fidelity_analytic(variant, N, d, v)
        p = success_probability_analytic(variant, N, d, v)
        return float(f_det) / float(p)
    raise UnsupportedVariantError(f"no fidelity formula for {variant}")


def conversion_fidelity(
    p_succ: float, m0_rho_overlap: float, N: int, d: int
) -> float:
    """Deterministic fidelity after redirecting failures to a random port."""
    if not 0 <= p_succ <= 1:
        raise DomainError(f"p_succ {p_succ} outside [0, 1]")
    if m0_rho_overlap < 0:
        raise DomainError(f"overlap {m0_rho_overlap} must be non-negative")
    value = p_succ + m0_rho_overlap / (d * d * N)
    if not -1e-9 <= value <= 1 + 1e-9:
        raise ConsistencyError(
            f"converted fidelity {value} escapes [0,1]; inputs inconsistent"
        )
    return value


def converted_failure_overlap(N: int, d: int) -> Fraction:
    """Exact tr(M_0 rho) for the non-optimal probabilistic measurement."""
    per_port = Fraction(0)
    for alpha in pt.enumerate_partitions(N - 1, d):
        if pt.gl_multiplicity(alpha, d) == 0:
            continue
        star, _ = pt.gamma_star(alpha, N, d)
        d_alpha = pt.sym_dimension(alpha)
        for nu in pt.box_neighbors(alpha, "add"):
            if pt.height(nu) > d:
                continue
            per_port += (
                pt.gl_multiplicity(nu, d)
                * d_alpha
                * pt.gamma(alpha, nu, N, d)
                / star
            )
    per_port /= d**N
    return N - N * per_port


def converted_fidelity_analytic(
    source: ProtocolVariant, N: int, d: int
) -> Fraction:
    source = ProtocolVariant(source)
    if source is ProtocolVariant.PPBT_OPT:
        # the optimized failure element is orthogonal to the rotated signals
        return Fraction(N, N + d * d - 1)
    if source is ProtocolVariant.PPBT_NONOPT:
        p = ppbt_nonopt_success_readings(N, d)["validated"]
        overlap = converted_failure_overlap(N, d)
        return p + overlap / (d * d * N)
    raise DomainError(f"conversion is defined for probabilistic sources, not {source}")


_OVERLAP_ALIASES = {
    "optP_vs_optD": "optP_vs_optD",
    "optD_vs_optP": "optP_vs_optD",
    "nonopt_vs_optP": "nonopt_vs_optP",
    "optP_vs_nonopt": "nonopt_vs_optP",
    "nonopt_vs_optD": "nonopt_vs_optD",
    "optD_vs_nonopt": "nonopt_vs_optD",
}


def _overlap_general(pair: str, N: int, d: int, v: OptVector | None) -> float:
    frames = pt.enumerate_partitions(N, d)
    g = Fraction(1, multiplicity_square_sum(N, d))
    if pair == "optP_vs_optD":
        vec = _resolve_opt_vector(N, d, v, "overlap with the optimized deterministic resource")
        root_g = math.sqrt(float(g))
        return sum(vec[mu] * pt.gl_multiplicity(mu, d) * root_g for mu in frames)
    if pair == "nonopt_vs_optD":
        vec = _resolve_opt_vector(N, d, v, "overlap with the optimized deterministic resource")
        total = 0.0
        for mu in frames:
            weight = Fraction(
                pt.sym_dimension(mu) * pt.gl_multiplicity(mu, d), d**N
            )
            total += vec[mu] * math.sqrt(float(weight))
        return total
    if pair == "nonopt_vs_optP":
        total = 0.0
        for mu in frames:
            m_mu = pt.gl_multiplicity(mu, d)
            weight = g * Fraction(pt.sym_dimension(mu) * m_mu, d**N)
            total += m_mu * math.sqrt(float(weight))
        return total
    raise DomainError(f"unknown overlap pair {pair!r}")


def _overlap_qubit_spin_form(pair: str, N: int) -> float:
    """Same overlaps from the explicit qubit spin-sector closed forms."""
    sectors = pt.spin_sectors(N)
    g = 6 / ((N + 1) * (N + 2) * (N + 3))
    total = 0.0
    for s in sectors:
        two_j = int(2 * s.j)
        v_j = 2 * math.sin(math.pi * (two_j + 1) / (N + 2)) / math.sqrt(N + 2)
        if pair == "optP_vs_optD":
            total += v_j * s.m_j * math.sqrt(g)
        elif pair == "nonopt_vs_optD":
            total += v_j * math.sqrt(float(Fraction(s.d_j * s.m_j, 2**N)))
        elif pair == "nonopt_vs_optP":
            total += s.m_j * math.sqrt(g * float(Fraction(s.d_j * s.m_j, 2**N)))
    return total


def resource_overlap_analytic(
    pair: str, N: int, d: int, v: OptVector | None = None
) -> float:
    """Square-root fidelity between two resource states, in [0, 1].

    Pairs name the two resources: plain pair product (nonopt), probabilistic
    optimizer (optP), deterministic optimizer (optD). Reversed names are
    accepted; the quantity is symmetric.
    """
    if pair not in _OVERLAP_ALIASES:
        raise DomainError(
            f"unknown overlap pair {pair!r}; choose from "
            f"{sorted(set(_OVERLAP_ALIASES.values()))}"
        )
    pair = _OVERLAP_ALIASES[pair]
    value = _overlap_general(pair, N, d, v)
    if d == 2 and v is None:
        spin = _overlap_qubit_spin_form(pair, N)
        if abs(value - spin) > 1e-10:
            raise ConsistencyError(
                f"frame-sum overlap {value} and spin-form overlap {spin} "
                f"disagree for {pair} at N={N}"
            )
    if not -1e-12 <= value <= 1 + 1e-9:
        raise ConsistencyError(f"overlap {value} escapes [0, 1]")
    return min(max(value, 0.0), 1.0)


def merit_report(
    variant: ProtocolVariant, N: int, d: int, v: OptVector | None = None
) -> MeritReport:
    """Analytic MeritReport; fields are None where no closed form exists."""
    variant = ProtocolVariant(variant)
    p = success_probability_analytic(variant, N, d, v)
    fid: float | Fraction | None
    f_det: float | Fraction | None
    try:
        fid = fidelity_analytic(variant, N, d, v)
        f_det = deterministic_fidelity_analytic(variant, N, d, v)
    except UnsupportedVariantError:
        if variant is ProtocolVariant.MPBT_OPTIMIZED:
            # the success probability is still defined for d > 2 given v
            fid = None
            f_det = None
        else:
            raise
    return MeritReport(
        variant=variant,
        N=N,
        d=d,
        p_succ=float(p),
        fidelity=None if fid is None else float(fid),
        deterministic_fidelity=None if f_det is None else float(f_det),
        provenance="analytic",
        p_succ_exact=p if isinstance(p, Fraction) else None,
        fidelity_exact=fid if isinstance(fid, Fraction) else None,
        deterministic_fidelity_exact=f_det if isinstance(f_det, Fraction) else None,
    )
