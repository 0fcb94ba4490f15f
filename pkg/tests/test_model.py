import numpy as np
import pytest

from spinone.errors import ResourceLimitError
from spinone.model import (
    build_hamiltonian,
    ground_state,
    low_spectrum,
    reduced_pair_state,
    spin_operators,
    thermal_state,
)
from spinone.qalgebra import DensityMatrix, StateVector, partial_trace, von_neumann_entropy

from conftest import singlet_vector

LOG2_3 = np.log2(3.0)


def independent_dense_h(L: int, U: float, periodic: bool) -> np.ndarray:
    """Oracle: per-site embedded operators, built without any kron tricks
    shared with the implementation."""
    ops = spin_operators()

    def embed(op, site):
        return np.kron(np.kron(np.eye(3**site), op), np.eye(3 ** (L - 1 - site)))

    dim = 3**L
    h = np.zeros((dim, dim), dtype=complex)
    bonds = [(i, i + 1) for i in range(L - 1)] + ([(L - 1, 0)] if periodic else [])
    for i, j in bonds:
        for op in (ops.sx, ops.sy, ops.sz):
            h += embed(op.astype(complex), i) @ embed(op.astype(complex), j)
    for i in range(L):
        h += U * embed((ops.sz @ ops.sz).astype(complex), i)
    assert np.abs(h.imag).max() < 1e-12
    return h.real


class TestSpinOperators:
    def test_commutation_relations(self):
        ops = spin_operators()
        pairs = [(ops.sx, ops.sy, ops.sz), (ops.sy, ops.sz, ops.sx), (ops.sz, ops.sx, ops.sy)]
        for a, b, c in pairs:
            comm = a @ b - b @ a
            assert np.abs(comm - 1j * c).max() < 1e-14

    def test_casimir(self):
        ops = spin_operators()
        total = ops.sx @ ops.sx + ops.sy @ ops.sy + ops.sz @ ops.sz
        assert np.abs(total - 2.0 * np.eye(3)).max() < 1e-14


class TestBuildHamiltonian:
    def test_two_site_heisenberg_spectrum(self):
        # brute-force 9x9 oracle: S.S eigenvalues are -2 (x1), -1 (x3), +1 (x5)
        h = build_hamiltonian(2, 0.0, "open")
        got = np.linalg.eigvalsh(h.dense())
        expected = np.array([-2.0] + [-1.0] * 3 + [1.0] * 5)
        assert np.abs(got - expected).max() < 1e-12

    def test_matches_independent_construction(self):
        for L, U, bc in ((3, -1.5, "open"), (4, 0.7, "periodic"), (5, 0.3, "periodic")):
            h = build_hamiltonian(L, U, bc)
            oracle = independent_dense_h(L, U, bc == "periodic")
            assert np.abs(h.nonzeros.toarray() - oracle).max() < 1e-12

    def test_matvec_matches_matrix(self):
        rng = np.random.default_rng(5)
        h = build_hamiltonian(5, -0.4, "periodic")
        v = rng.standard_normal(3**5)
        assert np.abs(h.matvec(v) - h.nonzeros @ v).max() < 1e-11

    def test_real_symmetric(self):
        h = build_hamiltonian(4, 1.3, "periodic").nonzeros
        assert (h != h.T).nnz == 0

    def test_all_zero_state_has_zero_diagonal(self):
        # the (Sz)^2 and SzSz terms annihilate |00...0>; XY terms are
        # purely off-diagonal, so the diagonal element vanishes exactly
        h = build_hamiltonian(6, 123.0, "periodic")
        idx = sum(1 * 3**s for s in range(6))  # digit 1 on every site
        e = np.zeros(3**6)
        e[idx] = 1.0
        assert h.matvec(e)[idx] == 0.0

    def test_bond_count(self):
        assert len(build_hamiltonian(6, 0.0, "open").bonds) == 5
        assert len(build_hamiltonian(6, 0.0, "periodic").bonds) == 6

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            build_hamiltonian(1, 0.0, "open")
        with pytest.raises(ValueError):
            build_hamiltonian(2, 0.0, "periodic")
        with pytest.raises(ValueError):
            build_hamiltonian(4, 0.0, "moebius")


class TestGroundState:
    def test_two_site_singlet(self):
        h = build_hamiltonian(2, 0.0, "open")
        energy, state, degenerate = ground_state(h)
        assert abs(energy + 2.0) < 1e-10
        assert abs(abs(state.amplitudes @ singlet_vector()) - 1.0) < 1e-8
        assert not degenerate

    def test_large_positive_anisotropy_polarizes(self):
        # dense 81x81 oracle; at U=10 the oracle overlap with |0000> is
        # 0.97753, converging to 1 as U grows
        h = build_hamiltonian(4, 10.0, "periodic")
        energy, state, _ = ground_state(h)
        w, v = np.linalg.eigh(h.dense())
        assert abs(energy - w[0]) < 1e-9
        zero_idx = sum(1 * 3**s for s in range(4))
        dense_overlap = abs(v[zero_idx, 0]) ** 2
        assert abs(abs(state.amplitudes[zero_idx]) ** 2 - dense_overlap) < 1e-9
        assert dense_overlap > 0.95
        h50 = build_hamiltonian(4, 50.0, "periodic")
        _, state50, _ = ground_state(h50)
        assert abs(state50.amplitudes[zero_idx]) ** 2 > 0.99

    def test_residual(self):
        h = build_hamiltonian(7, -0.8, "open")
        energy, state, _ = ground_state(h)
        r = np.linalg.norm(h.matvec(state.amplitudes) - energy * state.amplitudes)
        assert r <= 1e-9 * h.norm_bound()

    @pytest.mark.parametrize("U", [-2.0, -1.8, -1.0, 0.0, 0.95, 1.2])
    def test_sector_solver_matches_dense_on_odd_ring(self, U):
        # L=5 rings cross levels between magnetization sectors; the sparse
        # path must track the true global minimum through the crossings
        h = build_hamiltonian(5, U, "periodic")
        energy, state, _ = ground_state(h)
        dense = np.linalg.eigvalsh(h.dense())[0]
        assert abs(energy - dense) < 1e-9

    def test_even_open_chain_matches_dense(self):
        h = build_hamiltonian(6, -0.3, "open")
        energy, state, _ = ground_state(h)
        dense = np.linalg.eigvalsh(h.dense())[0]
        assert abs(energy - dense) < 1e-9

    def test_state_is_real_and_phase_fixed(self):
        h = build_hamiltonian(8, 0.2, "open")
        _, state, _ = ground_state(h)
        assert np.isrealobj(state.amplitudes)
        assert state.amplitudes[np.argmax(np.abs(state.amplitudes))] > 0

    def test_degenerate_flag_on_easy_axis_odd_ring(self):
        _, _, degenerate = ground_state(build_hamiltonian(5, -2.0, "periodic"))
        assert degenerate
        _, _, degenerate = ground_state(build_hamiltonian(5, 0.0, "periodic"))
        assert not degenerate

    def test_per_site_energy_converges(self):
        # per-site ring energies approach each other as L grows
        es = {}
        for L in (4, 6, 8, 10):
            e, _, _ = ground_state(build_hamiltonian(L, 0.0, "periodic"))
            es[L] = e / L
        assert abs(es[10] - es[8]) < abs(es[6] - es[4])

    def test_site_cap(self):
        with pytest.raises(ResourceLimitError):
            ground_state(build_hamiltonian(17, 0.0, "open"))


class TestLowSpectrum:
    def test_two_site_levels(self):
        out = low_spectrum(build_hamiltonian(2, 0.0, "open"), 3)
        assert np.abs(out.energies - np.array([-2.0, -1.0, -1.0])).max() < 1e-10
        assert not out.degeneracy_flags[0]
        assert out.degeneracy_flags[1]

    def test_consistent_with_ground_state(self):
        h = build_hamiltonian(6, -0.7, "periodic")
        e_gs, _, _ = ground_state(h)
        out = low_spectrum(h, 1)
        assert abs(out.energies[0] - e_gs) < 1e-9

    def test_sparse_tier_matches_dense(self):
        h = build_hamiltonian(8, 0.4, "periodic")
        out = low_spectrum(h, 4)
        dense = np.linalg.eigvalsh(build_hamiltonian(8, 0.4, "periodic").dense())[:4]
        assert np.abs(out.energies - dense).max() < 1e-8

    def test_rejects_bad_k(self):
        h = build_hamiltonian(2, 0.0, "open")
        with pytest.raises(ValueError):
            low_spectrum(h, 0)
        with pytest.raises(ValueError):
            low_spectrum(h, 9)


class TestThermalState:
    def test_infinite_temperature_limit(self):
        h = build_hamiltonian(3, 0.5, "periodic")
        rho = thermal_state(h, 1e6)
        assert abs(von_neumann_entropy(rho) - 3 * LOG2_3) < 1e-3

    def test_zero_temperature_limit(self):
        h = build_hamiltonian(4, 0.5, "open")
        rho = thermal_state(h, 1e-6)
        assert von_neumann_entropy(rho) < 1e-6
        e_gs, state, _ = ground_state(h)
        proj = np.outer(state.amplitudes, state.amplitudes)
        assert np.abs(rho.data - proj).max() < 1e-8

    def test_commutes_with_hamiltonian(self):
        h = build_hamiltonian(4, -0.9, "periodic")
        rho = thermal_state(h, 0.7)
        hm = h.dense()
        comm = rho.data @ hm - hm @ rho.data
        assert np.abs(comm).max() < 1e-9

    def test_trace_one(self):
        rho = thermal_state(build_hamiltonian(5, 2.0, "periodic"), 0.3)
        assert abs(np.trace(rho.data) - 1.0) < 1e-10

    def test_rejects_bad_input(self):
        h = build_hamiltonian(4, 0.0, "open")
        with pytest.raises(ValueError):
            thermal_state(h, 0.0)
        with pytest.raises(ResourceLimitError):
            thermal_state(build_hamiltonian(9, 0.0, "open"), 1.0)

    def test_low_temperature_entropy_jump_in_neel_region(self):
        # near-degenerate ground doublet on easy-axis rings drives a fast
        # initial entropy rise
        h = build_hamiltonian(6, -2.0, "periodic")
        s_cold = von_neumann_entropy(thermal_state(h, 0.02))
        assert s_cold > 0.5


class TestReducedPairState:
    def test_product_state(self):
        amp = np.zeros(3**4)
        amp[sum(1 * 3**s for s in range(4))] = 1.0  # |0000>
        rho = reduced_pair_state(StateVector(amp, 4), 1, 2)
        expected = np.zeros((9, 9))
        expected[4, 4] = 1.0  # |00><00|
        assert np.abs(rho.data - expected).max() < 1e-14

    def test_two_site_state_is_identity_case(self):
        state = StateVector(singlet_vector(), 2)
        rho = reduced_pair_state(state, 0, 1)
        assert np.abs(rho.data - np.outer(singlet_vector(), singlet_vector())).max() < 1e-14

    def test_pure_path_matches_partial_trace(self):
        rng = np.random.default_rng(11)
        amp = rng.standard_normal(3**4) + 1j * rng.standard_normal(3**4)
        amp /= np.linalg.norm(amp)
        state = StateVector(amp, 4)
        full = DensityMatrix(np.outer(amp, amp.conj()), 4)
        for (i, j) in ((0, 1), (1, 3), (0, 3)):
            direct = reduced_pair_state(state, i, j)
            oracle = partial_trace(full, {i, j})
            assert np.abs(direct.data - oracle.data).max() < 1e-12

    def test_mixed_input(self):
        h = build_hamiltonian(4, 0.5, "periodic")
        rho = thermal_state(h, 0.5)
        pair = reduced_pair_state(rho, 0, 2)
        assert pair.site_count == 2
        assert abs(np.trace(pair.data) - 1.0) < 1e-10

    def test_rejects_bad_indices(self):
        state = StateVector(singlet_vector(), 2)
        with pytest.raises(ValueError):
            reduced_pair_state(state, 0, 2)
        with pytest.raises(ValueError):
            reduced_pair_state(state, 1, 1)
