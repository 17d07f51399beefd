import math
from fractions import Fraction

import numpy as np
import pytest

from pbtkit import merits, partitions as pt
from pbtkit.errors import ConsistencyError, DomainError, UnsupportedVariantError
from pbtkit.merits import OptVector, ProtocolVariant as V
from pbtkit.operators import (
    embedded_pair_projector,
    maximally_entangled_projector,
    port_transposition,
    rho_operator,
    signal_state,
    young_projector,
)
from pbtkit.simulate import (
    PovmSet,
    build_povms,
    channel_merits,
    convert_to_deterministic,
    m0_rho_overlap,
    optimizer_operator,
    spectral_decompose_rho,
    state_overlap_numeric,
)

SMALL_POINTS = ((2, 2), (3, 2), (2, 3))


def success_elements(povms):
    return [
        op.entries for op, label in zip(povms.elements, povms.labels) if label != 0
    ]


class TestPovmConstruction:
    def test_srm_element_traces(self):
        povms = build_povms(V.MPBT, 2, 2)
        for entries in success_elements(povms):
            # SRM elements split the 4-dimensional support evenly
            assert np.trace(entries) == pytest.approx(2.0, abs=1e-10)

    def test_deterministic_element_traces(self):
        povms = build_povms(V.DPBT_NONOPT, 2, 2)
        for entries in success_elements(povms):
            assert np.trace(entries) == pytest.approx(2**3 / 2, abs=1e-10)

    def test_delta_orthogonal_to_signals(self):
        for N, d in SMALL_POINTS:
            delta = build_povms(V.MPBT, N, d).failure_element().entries
            for i in range(1, N + 1):
                overlap = float(np.trace(delta @ signal_state(i, N, d).entries))
                assert abs(overlap) <= 1e-10

    def test_optimized_variants_reuse_srm_elements(self):
        plain = build_povms(V.MPBT, 3, 2)
        rotated = build_povms(V.MPBT_OPTIMIZED, 3, 2)
        for a, b in zip(plain.elements, rotated.elements):
            assert np.array_equal(a.entries, b.entries)
        assert rotated.variant is V.MPBT_OPTIMIZED

    def test_variant_preconditions(self):
        with pytest.raises(UnsupportedVariantError):
            build_povms(V.CONVERTED_FROM_PPBT_OPT, 2, 2)
        with pytest.raises(UnsupportedVariantError):
            build_povms(V.DPBT_OPT, 2, 3)
        with pytest.raises(DomainError):
            build_povms(V.DPBT_OPT, 2, 2, merits.qubit_optimal_eigenvector(3))

    def test_qutrit_optimized_with_explicit_vector(self):
        entries = dict.fromkeys(pt.enumerate_partitions(2, 3), 0.0)
        entries[(2,)] = 0.8
        entries[(1, 1)] = 0.6
        povms = build_povms(V.MPBT_OPTIMIZED, 2, 3, OptVector(2, 3, entries))
        assert povms.includes_failure

    def test_labels_must_cover_ports(self):
        povms = build_povms(V.MPBT, 2, 2)
        with pytest.raises(DomainError):
            PovmSet(V.MPBT, 2, 2, povms.elements, (1, 1, 0), True)
        with pytest.raises(DomainError):
            PovmSet(V.MPBT, 2, 2, povms.elements, (1, 2, 0), False)

    def test_incomplete_set_rejected(self):
        povms = build_povms(V.DPBT_NONOPT, 2, 2)
        half = tuple(
            type(op)(op.entries / 2, op.n_factors, op.local_dim)
            for op in povms.elements
        )
        with pytest.raises(ConsistencyError):
            PovmSet(V.DPBT_NONOPT, 2, 2, half, povms.labels, False)

    def test_failure_element_accessor(self):
        with pytest.raises(DomainError):
            build_povms(V.DPBT_NONOPT, 2, 2).failure_element()


class TestCovariance:
    @pytest.mark.parametrize(
        "variant", [V.MPBT, V.DPBT_NONOPT, V.PPBT_NONOPT, V.PPBT_OPT]
    )
    def test_port_swap_covariance(self, variant):
        N, d = 3, 2
        povms = build_povms(variant, N, d)
        by_label = dict(zip(povms.labels, povms.elements))
        for i in range(1, N + 1):
            for j in range(i + 1, N + 1):
                swap = port_transposition(i, j, N, d).entries
                perm = {i: j, j: i}
                for label in range(1, N + 1):
                    moved = swap @ by_label[label].entries @ swap
                    target = by_label[perm.get(label, label)].entries
                    assert np.max(np.abs(moved - target)) <= 1e-10
                if povms.includes_failure:
                    fail = by_label[0].entries
                    assert np.max(np.abs(swap @ fail @ swap - fail)) <= 1e-10


class TestChannelMerits:
    @pytest.mark.parametrize("point", SMALL_POINTS)
    @pytest.mark.parametrize("variant", [V.MPBT, V.DPBT_NONOPT, V.PPBT_NONOPT])
    def test_plain_variants_match_closed_forms(self, point, variant):
        N, d = point
        rep = channel_merits(build_povms(variant, N, d))
        assert rep.provenance == "simulated"
        assert rep.p_succ == pytest.approx(
            float(merits.success_probability_analytic(variant, N, d)), abs=1e-10
        )
        assert rep.fidelity == pytest.approx(
            float(merits.fidelity_analytic(variant, N, d)), abs=1e-10
        )

    @pytest.mark.parametrize("point", SMALL_POINTS)
    def test_optimized_probabilistic_matches_closed_forms(self, point):
        N, d = point
        rep = channel_merits(
            build_povms(V.PPBT_OPT, N, d), optimizer_operator(V.PPBT_OPT, N, d)
        )
        assert rep.p_succ == pytest.approx(N / (N + d * d - 1), abs=1e-10)
        assert rep.fidelity == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_optimized_deterministic_qubit_fidelity(self, N):
        rep = channel_merits(
            build_povms(V.DPBT_OPT, N, 2), optimizer_operator(V.DPBT_OPT, N, 2)
        )
        assert rep.p_succ == pytest.approx(1.0, abs=1e-10)
        assert rep.fidelity == pytest.approx(
            math.cos(math.pi / (N + 2)) ** 2, abs=1e-10
        )

    @pytest.mark.parametrize("N", [2, 3])
    def test_optimized_may_fail_matches_closed_forms(self, N):
        rep = channel_merits(
            build_povms(V.MPBT_OPTIMIZED, N, 2), optimizer_operator(V.DPBT_OPT, N, 2)
        )
        assert rep.p_succ == pytest.approx(
            merits.success_probability_analytic(V.MPBT_OPTIMIZED, N, 2), abs=1e-10
        )
        assert rep.deterministic_fidelity == pytest.approx(
            math.cos(math.pi / (N + 2)) ** 2, abs=1e-10
        )

    def test_nonopt_probabilistic_discriminates_the_factor(self):
        # exactly one of the two candidate normalizations survives contact
        # with the operator-level construction
        for N, d in SMALL_POINTS:
            readings = merits.ppbt_nonopt_success_readings(N, d)
            simulated = channel_merits(build_povms(V.PPBT_NONOPT, N, d)).p_succ
            assert simulated == pytest.approx(float(readings["validated"]), abs=1e-8)
            assert abs(simulated - float(readings["alternate"])) > 1e-3

    def test_optimizer_dimension_mismatch(self):
        povms = build_povms(V.DPBT_OPT, 2, 2)
        with pytest.raises(DomainError):
            channel_merits(povms, np.eye(8))


class TestConversion:
    def test_mpbt_converts_to_dpbt_elementwise(self):
        converted = convert_to_deterministic(build_povms(V.MPBT, 3, 2))
        direct = build_povms(V.DPBT_NONOPT, 3, 2)
        assert converted.variant is V.DPBT_NONOPT
        for a, b in zip(converted.elements, direct.elements):
            assert np.max(np.abs(a.entries - b.entries)) <= 1e-12

    def test_conversion_preserves_total(self):
        original = build_povms(V.PPBT_NONOPT, 2, 2)
        converted = convert_to_deterministic(original)
        before = sum(op.entries for op in original.elements)
        after = sum(op.entries for op in converted.elements)
        assert np.max(np.abs(before - after)) <= 1e-12

    @pytest.mark.parametrize("point", SMALL_POINTS)
    def test_converted_nonopt_fidelity(self, point):
        N, d = point
        rep = channel_merits(convert_to_deterministic(build_povms(V.PPBT_NONOPT, N, d)))
        assert rep.fidelity == pytest.approx(
            float(merits.converted_fidelity_analytic(V.PPBT_NONOPT, N, d)), abs=1e-9
        )

    @pytest.mark.parametrize("point", SMALL_POINTS)
    def test_converted_opt_fidelity(self, point):
        N, d = point
        rep = channel_merits(
            convert_to_deterministic(build_povms(V.PPBT_OPT, N, d)),
            optimizer_operator(V.PPBT_OPT, N, d),
        )
        assert rep.fidelity == pytest.approx(N / (N + d * d - 1), abs=1e-9)

    def test_conversion_requires_failure_element(self):
        with pytest.raises(DomainError):
            convert_to_deterministic(build_povms(V.DPBT_NONOPT, 2, 2))


class TestFailureOverlap:
    def test_nonopt_failure_overlap_exact_values(self):
        assert m0_rho_overlap(build_povms(V.PPBT_NONOPT, 2, 2)) == pytest.approx(
            1 / 3, abs=1e-9
        )
        assert m0_rho_overlap(build_povms(V.PPBT_NONOPT, 3, 2)) == pytest.approx(
            9 / 16, abs=1e-9
        )

    @pytest.mark.parametrize("point", SMALL_POINTS)
    def test_optimized_failure_never_fires(self, point):
        N, d = point
        value = m0_rho_overlap(
            build_povms(V.PPBT_OPT, N, d), optimizer_operator(V.PPBT_OPT, N, d)
        )
        assert abs(value) <= 1e-9

    def test_conversion_rule_closes_the_loop(self):
        N, d = 2, 2
        povms = build_povms(V.PPBT_NONOPT, N, d)
        p = channel_merits(povms).p_succ
        overlap = m0_rho_overlap(povms)
        predicted = merits.conversion_fidelity(p, overlap, N, d)
        simulated = channel_merits(convert_to_deterministic(povms)).fidelity
        assert simulated == pytest.approx(predicted, abs=1e-10)


class TestOptimizer:
    @pytest.mark.parametrize("variant", [V.PPBT_OPT, V.DPBT_OPT])
    def test_normalization_and_symmetry(self, variant):
        op = optimizer_operator(variant, 3, 2).entries
        assert np.trace(op @ op) == pytest.approx(2**3, rel=1e-8)
        # equal to adjoint, transpose, and conjugate: real symmetric
        assert np.max(np.abs(op - op.T)) <= 1e-10
        assert np.max(np.abs(np.imag(op))) == 0

    def test_deterministic_qubit_coefficients(self):
        # spectral weights must equal the published spin closed form
        N = 2
        op = optimizer_operator(V.DPBT_OPT, N, 2).entries
        rebuilt = np.zeros_like(op)
        for sector in pt.spin_sectors(N):
            m_j, d_j = sector.m_j, sector.d_j
            gamma = (
                2 ** (N + 2)
                / ((N + 2) * m_j * d_j)
                * math.sin(math.pi * m_j / (N + 2)) ** 2
            )
            rebuilt += math.sqrt(gamma) * young_projector(sector.partition, N, 2).entries
        assert np.max(np.abs(op - rebuilt)) <= 1e-10

    def test_probabilistic_qubit_coefficients(self):
        N = 2
        op = optimizer_operator(V.PPBT_OPT, N, 2).entries
        h = 6 / ((N + 1) * (N + 2) * (N + 3))
        rebuilt = np.zeros_like(op)
        for sector in pt.spin_sectors(N):
            zeta = 2**N * h * sector.m_j / sector.d_j
            rebuilt += math.sqrt(zeta) * young_projector(sector.partition, N, 2).entries
        assert np.max(np.abs(op - rebuilt)) <= 1e-10

    def test_qutrit_needs_vector(self):
        with pytest.raises(UnsupportedVariantError):
            optimizer_operator(V.DPBT_OPT, 2, 3)
        entries = dict.fromkeys(pt.enumerate_partitions(2, 3), 0.0)
        entries[(2,)] = 1.0
        op = optimizer_operator(V.DPBT_OPT, 2, 3, OptVector(2, 3, entries))
        assert np.trace(op.entries @ op.entries) == pytest.approx(9.0, rel=1e-8)

    def test_probabilistic_optimizer_ignores_no_vector_for_qutrits(self):
        op = optimizer_operator(V.PPBT_OPT, 2, 3)
        assert np.trace(op.entries @ op.entries) == pytest.approx(9.0, rel=1e-8)


class TestOptimizedStructure:
    def test_effective_elements_live_on_their_pair(self):
        # conjugating back by the optimizer exposes the printed form, which
        # is supported entirely inside (pair projector on A_i C) x rest
        N, d = 2, 2
        povms = build_povms(V.PPBT_OPT, N, d)
        full = np.kron(optimizer_operator(V.PPBT_OPT, N, d).entries, np.eye(d))
        for op, label in zip(povms.elements, povms.labels):
            if label == 0:
                continue
            effective = full @ op.entries @ full
            outside = np.eye(d ** (N + 1)) - embedded_pair_projector(label, N, d).entries
            assert abs(np.trace(effective @ outside)) <= 1e-10


class TestSpectralDecomposition:
    def test_two_port_qubit_blocks(self):
        dec = spectral_decompose_rho(2, 2)
        summary = [(b.exact, b.dimension, b.label) for b in dec.blocks]
        assert summary == [
            (Fraction(3, 4), 2, ((1,), (2,))),
            (Fraction(1, 4), 2, ((1,), (1, 1))),
        ]
        assert dec.support_dimension == 4

    @pytest.mark.parametrize("N", [2, 3, 4])
    def test_qubit_support_dimension(self, N):
        dec = spectral_decompose_rho(N, 2)
        assert dec.support_dimension == 2 ** (N + 1) - N - 2

    def test_qutrit_blocks(self):
        dec = spectral_decompose_rho(2, 3)
        assert [(b.exact, b.dimension) for b in dec.blocks] == [
            (Fraction(4, 9), 3),
            (Fraction(2, 9), 3),
        ]

    def test_blocks_reassemble_rho(self):
        for N, d in SMALL_POINTS:
            dec = spectral_decompose_rho(N, d)
            rho = rho_operator(N, d).entries
            rebuilt = sum(b.eigenvalue * b.projector.entries for b in dec.blocks)
            assert np.max(np.abs(rebuilt - rho)) <= 1e-9
            for i, a in enumerate(dec.blocks):
                for b in dec.blocks[i + 1 :]:
                    cross = a.projector.entries @ b.projector.entries
                    assert np.max(np.abs(cross)) <= 1e-9

    def test_support_counts_against_failure_trace(self):
        # two counting routes: labeled blocks vs dimension minus failure trace
        N, d = 3, 2
        dec = spectral_decompose_rho(N, d)
        delta = build_povms(V.MPBT, N, d).failure_element().entries
        assert dec.support_dimension == pytest.approx(
            d ** (N + 1) - np.trace(delta), abs=1e-8
        )


class TestStateOverlap:
    @pytest.mark.parametrize("pair", ["optP_vs_optD", "nonopt_vs_optD", "nonopt_vs_optP"])
    @pytest.mark.parametrize("N", [1, 2, 3, 4, 5])
    def test_numeric_matches_analytic(self, pair, N):
        numeric = state_overlap_numeric(pair, N, 2)
        analytic = merits.resource_overlap_analytic(pair, N, 2)
        assert numeric == pytest.approx(analytic, abs=1e-8)

    def test_same_state_pairs(self):
        for name in ("nonopt", "optP", "optD"):
            assert state_overlap_numeric((name, name), 3, 2) == pytest.approx(
                1.0, abs=1e-10
            )

    def test_unknown_names_rejected(self):
        with pytest.raises(DomainError):
            state_overlap_numeric("nonopt_vs_everything", 2, 2)
        with pytest.raises(DomainError):
            state_overlap_numeric(("nonopt", "everything"), 2, 2)

    def test_qutrit_requires_vector_only_when_needed(self):
        with pytest.raises(UnsupportedVariantError):
            state_overlap_numeric("nonopt_vs_optD", 2, 3)
        value = state_overlap_numeric("nonopt_vs_optP", 2, 3)
        assert value == pytest.approx(
            merits.resource_overlap_analytic("nonopt_vs_optP", 2, 3), abs=1e-8
        )

    @pytest.mark.parametrize("N", [2, 3])
    def test_against_materialized_resource_states(self, N):
        # at tiny sizes the full 2N-system vectors fit in memory: amplitudes
        # of (O x 1)|pairs> form O itself as a d^N x d^N table, row index
        # running over ports, column index over their partners
        d = 2
        for pair in ("optP_vs_optD", "nonopt_vs_optD", "nonopt_vs_optP"):
            ops = {
                "nonopt": np.eye(d**N),
                "optP": optimizer_operator(V.PPBT_OPT, N, d).entries,
                "optD": optimizer_operator(V.DPBT_OPT, N, d).entries,
            }
            first, second = pair.split("_vs_")
            psi1 = (ops[first] / d ** (N / 2)).reshape(-1)
            psi2 = (ops[second] / d ** (N / 2)).reshape(-1)
            assert np.vdot(psi1, psi1) == pytest.approx(1.0, abs=1e-10)
            assert np.vdot(psi2, psi2) == pytest.approx(1.0, abs=1e-10)
            assert state_overlap_numeric(pair, N, d) == pytest.approx(
                float(np.vdot(psi1, psi2).real), abs=1e-10
            )
