import numpy as np
import pytest

from spinone.discord import (
    OptimizerConfig,
    asymmetric_discord,
    global_discord,
    global_objective,
    mutual_information,
    one_way_classical,
    symmetric_discord,
    symmetric_objective,
)
from spinone.errors import ResourceLimitError
from spinone.measure import MeasurementAngles, basis_from_angles, dephase, real_basis_from_angles
from spinone.model import build_hamiltonian, ground_state
from spinone.qalgebra import (
    DensityMatrix,
    StateVector,
    partial_trace,
    relative_entropy,
    von_neumann_entropy,
)

from conftest import random_density, singlet_vector

LOG2_3 = np.log2(3.0)
CFG = OptimizerConfig(seed=11)
FAST = OptimizerConfig(seed=11, max_coarse_evals=1500, restarts=3, max_refine_iters=800)


def classical_correlated() -> DensityMatrix:
    rho = np.zeros((9, 9))
    for k in (0, 4, 8):  # |mm><mm| on the diagonal
        rho[k, k] = 1.0 / 3.0
    return DensityMatrix(rho, 2)


def product_state(rng) -> DensityMatrix:
    a = random_density(rng, 1)
    b = random_density(rng, 1)
    return DensityMatrix(np.kron(a.data, b.data), 2)


def singlet_dm() -> DensityMatrix:
    return DensityMatrix(np.outer(singlet_vector(), singlet_vector()), 2)


class TestMutualInformation:
    def test_product_state(self, rng):
        assert abs(mutual_information(product_state(rng))) < 1e-10

    def test_singlet(self):
        # oracle: S_A = S_B = log2 3 (maximally mixed marginals), S_AB = 0
        assert abs(mutual_information(singlet_dm()) - 2 * LOG2_3) < 1e-10

    def test_classically_correlated(self):
        assert abs(mutual_information(classical_correlated()) - LOG2_3) < 1e-10

    def test_rejects_wrong_size(self, rng):
        with pytest.raises(ValueError):
            mutual_information(random_density(rng, 1))


class TestOneWayClassical:
    def test_product_state_any_basis(self, rng):
        basis = basis_from_angles(MeasurementAngles(*rng.uniform(0, 6.28, 7)))
        assert abs(one_way_classical(product_state(rng), basis)) < 1e-10

    def test_classical_state_in_its_own_basis(self):
        basis = basis_from_angles(MeasurementAngles())
        assert abs(one_way_classical(classical_correlated(), basis) - LOG2_3) < 1e-10

    def test_singlet_sz_basis(self):
        # conditional states are pure, so J = S_A = log2 3
        basis = basis_from_angles(MeasurementAngles())
        assert abs(one_way_classical(singlet_dm(), basis) - LOG2_3) < 1e-10

    def test_bounded_by_mutual_information(self, rng):
        for _ in range(20):
            rho = random_density(rng, 2, rank=4)
            basis = basis_from_angles(MeasurementAngles(*rng.uniform(0, 6.28, 7)))
            j = one_way_classical(rho, basis)
            assert -1e-10 <= j <= mutual_information(rho) + 1e-9


class TestAsymmetricDiscord:
    def test_product_state(self, rng):
        res = asymmetric_discord(product_state(rng), FAST)
        assert res.value < 1e-8

    def test_classical_state_has_zero_discord(self):
        res = asymmetric_discord(classical_correlated(), FAST)
        assert res.value < 1e-9
        assert res.converged

    def test_singlet(self):
        # J is basis independent for the singlet (conditional states stay
        # pure and the marginal is maximally mixed), so D = I - J = log2 3;
        # cross-checked by a coarse grid over the real angle family
        res = asymmetric_discord(singlet_dm(), FAST)
        assert abs(res.value - LOG2_3) < 1e-8
        grid = np.linspace(0, np.pi, 7)
        for theta in grid:
            for alpha in grid[:4]:
                basis = real_basis_from_angles(theta, alpha, 0.3)
                j = one_way_classical(singlet_dm(), basis)
                assert abs(j - LOG2_3) < 1e-10


class TestSymmetricObjective:
    def test_equals_direct_relative_entropy_route(self, rng):
        for _ in range(5):
            rho = random_density(rng, 2, rank=5)
            angles_a = MeasurementAngles(*rng.uniform(0, 6.28, 7))
            angles_b = MeasurementAngles(*rng.uniform(0, 6.28, 7))
            ba, bb = basis_from_angles(angles_a), basis_from_angles(angles_b)
            fast = symmetric_objective(rho, ba, bb)

            pi_rho = dephase(rho, [ba, bb])
            direct = relative_entropy(rho, pi_rho)
            for site, basis in ((0, ba), (1, bb)):
                marginal = partial_trace(rho, {site})
                direct -= relative_entropy(marginal, dephase(marginal, [basis]))
            assert abs(fast - direct) < 1e-10

    def test_nonnegative(self, rng):
        for _ in range(10):
            rho = random_density(rng, 2, rank=3)
            ba = basis_from_angles(MeasurementAngles(*rng.uniform(0, 6.28, 7)))
            bb = basis_from_angles(MeasurementAngles(*rng.uniform(0, 6.28, 7)))
            assert symmetric_objective(rho, ba, bb) > -1e-9


class TestSymmetricDiscord:
    def test_product_state(self, rng):
        res = symmetric_discord(product_state(rng), mode="real", cfg=FAST)
        assert res.value < 1e-8
        assert res.degenerate_minimum

    def test_swap_invariance(self, rng):
        rho = random_density(rng, 2, rank=4, real=True)
        swapped = rho.data.reshape(3, 3, 3, 3).transpose(1, 0, 3, 2).reshape(9, 9)
        r1 = symmetric_discord(rho, mode="real", cfg=FAST)
        r2 = symmetric_discord(DensityMatrix(swapped, 2), mode="real", cfg=FAST)
        assert abs(r1.value - r2.value) < 1e-8

    def test_refinement_not_worse_than_anchors(self, rng):
        rho = random_density(rng, 2, rank=4)
        res = symmetric_discord(rho, mode="real", cfg=FAST)
        for theta in (0.0, np.pi / 2):
            basis = real_basis_from_angles(theta, 0.0, 0.0)
            assert res.value <= symmetric_objective(rho, basis, basis) + 1e-12

    def test_value_floor(self, rng):
        for _ in range(3):
            rho = random_density(rng, 2, rank=2)
            res = symmetric_discord(rho, mode="real", cfg=FAST)
            assert res.value >= -1e-9

    def test_angle_reporting_on_known_state(self):
        # the L=4 open-chain central pair at U=-1 is minimized by the Sz
        # basis on both sites
        h = build_hamiltonian(4, -1.0, "open")
        _, state, _ = ground_state(h)
        from spinone.model import reduced_pair_state

        rho = reduced_pair_state(state, 1, 2)
        res = symmetric_discord(rho, mode="full", cfg=CFG)
        for a in res.angles:
            assert min(a.theta, 2 * np.pi - a.theta) < 1e-3
            assert min(a.alpha, 2 * np.pi - a.alpha) < 1e-3
            assert min(a.beta, 2 * np.pi - a.beta) < 1e-3

    def test_rejects_bad_mode(self, rng):
        with pytest.raises(ValueError):
            symmetric_discord(random_density(rng, 2), mode="imaginary", cfg=FAST)


class TestGlobalDiscord:
    def test_product_pure_state(self):
        amp = np.zeros(3**3)
        amp[sum(3**s for s in range(3))] = 1.0  # |000>
        res = global_discord(StateVector(amp, 3), cfg=FAST)
        assert res.value < 1e-8
        assert res.degenerate_minimum

    def test_two_site_matches_symmetric_discord(self):
        # for two sites the global measure is the symmetric one
        h = build_hamiltonian(2, -0.5, "open")
        _, state, _ = ground_state(h)
        rho = state.density_matrix()
        g = global_discord(state, shared=False, mode="real", cfg=CFG)
        s = symmetric_discord(rho, mode="real", cfg=CFG)
        assert abs(g.value - s.value) < 1e-7

    def test_easy_axis_angles_match_pair_result(self):
        # U<0: the shared optimizing angles are theta=alpha=beta=0
        h = build_hamiltonian(2, -0.5, "open")
        _, state, _ = ground_state(h)
        res = global_discord(state, shared=True, mode="real", cfg=CFG)
        a = res.angles[0]
        assert min(a.theta, 2 * np.pi - a.theta) < 1e-3
        assert min(a.alpha, 2 * np.pi - a.alpha) < 1e-3
        assert min(a.beta, 2 * np.pi - a.beta) < 1e-3

    def test_shared_bound_from_above(self, rng):
        # tying the angles can never improve the minimum
        amp = rng.standard_normal(3**3)
        amp /= np.linalg.norm(amp)
        state = StateVector(amp, 3)
        shared = global_discord(state, shared=True, mode="real", cfg=FAST)
        free = global_discord(state, shared=False, mode="real", cfg=FAST)
        assert shared.value >= free.value - 1e-8

    def test_mixed_state_route_matches_pure_route(self):
        h = build_hamiltonian(3, 0.6, "periodic")
        _, state, _ = ground_state(h)
        bases = [real_basis_from_angles(0.4, 0.1, 0.0)] * 3
        v_pure = global_objective(state, bases)
        v_mixed = global_objective(state.density_matrix(), bases)
        assert abs(v_pure - v_mixed) < 1e-9

    def test_site_cap(self, rng):
        amp = np.zeros(3**9)
        amp[0] = 1.0
        with pytest.raises(ResourceLimitError):
            global_discord(StateVector(amp, 9), cfg=FAST)

    def test_sites_argument_validated(self):
        state = StateVector(singlet_vector(), 2)
        with pytest.raises(ValueError):
            global_discord(state, sites=3, cfg=FAST)


class TestOptimizerConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            OptimizerConfig(coarse_grid=1)
        with pytest.raises(ValueError):
            OptimizerConfig(refine_tolerance=0.0)

    def test_determinism(self, rng):
        rho = random_density(rng, 2, rank=4)
        r1 = symmetric_discord(rho, mode="real", cfg=FAST)
        r2 = symmetric_discord(rho, mode="real", cfg=FAST)
        assert r1.value == r2.value
        assert r1.angles == r2.angles
        assert r1.optimizer_evals == r2.optimizer_evals
