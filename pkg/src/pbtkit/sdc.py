"""Superdense coding over deterministic port teleportation.

A sender encodes one of N·d^2 messages by choosing a port and a Pauli-type
rotation; the receiver's port measurement plus decoding yields conditional
fidelities F_{i|k} that depend only on whether i = k. All information
quantities are in bits (base-2 logs throughout).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DomainError
from .operators import DenseOperator, embedded_pair_projector, hermitize
from .simulate import PovmSet


@dataclass(frozen=True)
class SdcReport:
    N: int
    d: int
    F_diag: float
    F_off: float
    q_diag: float
    q_off: float
    mutual_information: float
    provenance: str = "analytic"

    def __post_init__(self):
        total = self.q_diag + (self.N - 1) * self.q_off
        if abs(total - 1.0) > 1e-9:
            raise ConsistencyError(
                f"outcome weights sum to {total}, expected 1 within 1e-9"
            )


def conditional_fidelities(N: int, d: int, F: float) -> tuple[float, float]:
    """Diagonal and off-diagonal conditional fidelities from the channel F.

    The pair satisfies F_diag + (N-1)*F_off = N/d^2 exactly; the off part
    tends to the random-guess value 1/d^2 as the port count grows.
    """
    if N == 1:
        raise DomainError(
            "off-diagonal conditional fidelity is undefined for a single port"
        )
    if not 0.0 <= F <= 1.0:
        raise DomainError(f"fidelity {F} outside [0, 1]")
    return F, N / (d * d * (N - 1)) - F / (N - 1)


def mutual_information(F_star: float, N: int, d: int) -> float:
    """Transmitted bits for a fidelity floor F_star."""
    if F_star <= 0:
        raise DomainError(f"fidelity floor {F_star} must be positive")
    if F_star > 1 + 1e-12:
        raise DomainError(f"fidelity floor {F_star} exceeds 1")
    return math.log2(F_star) + (d * d * F_star / N) * math.log2(d * d)


def iabour_f_star(N: int, d: int) -> float:
    """Large-N fidelity of the plain deterministic protocol, remainder dropped."""
    return 1.0 - (d * d - 1) / (4 * N)


def converted_ppbt_f_star(N: int, d: int) -> float:
    """Fidelity floor every deterministic protocol inherits from conversion."""
    return N / (N + d * d - 1)


@dataclass(frozen=True)
class AsymptoticBound:
    value: float
    asymptotic: bool
    note: str


def optimized_dpbt_f_star(N: int, d: int) -> AsymptoticBound:
    """Optimized-protocol floor 1 - d^5/(4*sqrt(2)*N^2).

    The flag warns that this drops a d^{9/2}-order numerator term and an
    N^{-3} tail, so at small N the value can even go negative; callers must
    treat it as asymptotic guidance, not a certified bound.
    """
    value = 1.0 - d**5 / (4 * math.sqrt(2) * N * N)
    return AsymptoticBound(
        value=value,
        asymptotic=True,
        note="asymptotic, d-dependent remainder dropped",
    )


def sdc_report(N: int, d: int, F: float, provenance: str = "analytic") -> SdcReport:
    F_diag, F_off = conditional_fidelities(N, d, F)
    q_diag = d * d * F_diag / N
    q_off = d * d * F_off / N
    return SdcReport(
        N=N,
        d=d,
        F_diag=F_diag,
        F_off=F_off,
        q_diag=q_diag,
        q_off=q_off,
        mutual_information=mutual_information(F_diag, N, d),
        provenance=provenance,
    )


def post_measurement_states(povms: PovmSet, N: int, d: int) -> list[DenseOperator]:
    """Normalized receiver-side states, one per port outcome.

    Tracing the measurement back through the shared resource identifies the
    state for outcome i with (N/d^{N+1}) times the i-th element, so the
    whole list comes from the deterministic measurement family directly.
    """
    if (povms.N, povms.d) != (N, d):
        raise DomainError(
            f"measurement family is for (N, d) = ({povms.N}, {povms.d}), "
            f"wanted ({N}, {d})"
        )
    if povms.includes_failure:
        raise DomainError(
            "post-measurement states need the deterministic completion; "
            "convert the family first"
        )
    scale = N / d ** (N + 1)
    by_label = dict(zip(povms.labels, povms.elements))
    states = []
    for label in range(1, N + 1):
        chi = hermitize(scale * by_label[label].entries)
        trace = float(np.trace(chi))
        if abs(trace - 1.0) > 1e-9:
            raise ConsistencyError(
                f"post-measurement state for port {label} has trace {trace}"
            )
        chi.setflags(write=False)
        states.append(DenseOperator(chi, N + 1, d))
    return states


def simulated_fidelity_table(povms: PovmSet) -> np.ndarray:
    """Matrix of conditional fidelities; entry [k-1, i-1] is F_{i|k}."""
    N, d = povms.N, povms.d
    states = post_measurement_states(povms, N, d)
    pair = [embedded_pair_projector(i, N, d).entries for i in range(1, N + 1)]
    table = np.empty((N, N))
    for k in range(N):
        for i in range(N):
            table[k, i] = float(np.trace(states[k].entries @ pair[i]).real)
    return table


@dataclass(frozen=True)
class PortCountResult:
    continuous: float
    integer: int
    warning: str | None


def optimal_port_count(d: int, n_max: int = 100) -> PortCountResult:
    """Port count maximizing the transmitted bits.

    The continuous stationary point comes from the closed form; the exported
    answer is the integer grid argmax, because ports are counted in integers.
    """
    if d < 2:
        raise DomainError(f"need d >= 2, got {d}")
    log_dd = math.log(d * d)
    numerator = 3 * d**2 * (d**2 - 1) * log_dd + math.sqrt(
        (d - d**3) ** 2 * (2 * d**2 + d**2 * log_dd - 2)
    )
    denominator = 2 * (1 - d**2 + 4 * d**2 * log_dd)
    continuous = numerator / denominator
    best_n, best_value = None, -math.inf
    for N in range(1, n_max + 1):
        floor = iabour_f_star(N, d)
        if floor <= 0:
            continue
        value = mutual_information(floor, N, d)
        if value > best_value:
            best_n, best_value = N, value
    warning = None
    if abs(continuous - best_n) >= 1.5:
        warning = (
            f"continuous optimum {continuous:.4f} and grid optimum {best_n} "
            "disagree by 1.5 or more"
        )
        warnings.warn(warning)
    return PortCountResult(continuous=continuous, integer=best_n, warning=warning)
