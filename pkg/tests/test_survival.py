import math

import numpy as np
import pytest
import scipy.linalg

from resetwalk import (
    DeterministicPeriod,
    FiniteSupport,
    Geometric,
    RelocationVector,
    Sibuya,
    complete_graph,
    ergodicity_check,
    hitting_probability,
    kill,
    mfht,
    moments,
    propagate,
    sibuya_mfht_regularized,
    survival_propagator,
    survival_series,
    transition_matrix,
    watts_strogatz,
)
from resetwalk.survival import _awr_recursion

NO_RESET = Sibuya(1e-12)  # resets almost surely never happen


@pytest.fixture(scope="module")
def triangle_walk_module():
    return transition_matrix(complete_graph(3))


def triangle_killed_factory(w):
    rel = RelocationVector.uniform(3)
    return kill(w, rel, targets=[2])


class TestKill:
    def test_triangle_row_defects(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        assert np.allclose(ks.row_defects, [0.5, 0.5, 1.0])

    def test_target_columns_zero(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[3, 8])
        assert np.all(ks.w_killed[:, [3, 8]] == 0.0)
        assert np.all(ks.r_killed[[3, 8]] == 0.0)

    def test_disjoint_relocation_stays_stochastic(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 1, 2])
        ks = kill(small_ws_walk, rel, targets=[10, 11])
        assert ks.r_killed.sum() == pytest.approx(1.0)
        assert np.array_equal(ks.r_killed, rel.probabilities)

    def test_bad_target_sets(self, triangle_walk_module):
        rel = RelocationVector.uniform(3)
        with pytest.raises(ValueError):
            kill(triangle_walk_module, rel, targets=[])
        with pytest.raises(ValueError):
            kill(triangle_walk_module, rel, targets=[0, 1, 2])
        with pytest.raises(ValueError):
            kill(triangle_walk_module, rel, targets=[5])

    def test_spectral_radius_below_one(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        rng = np.random.default_rng(1)
        for _ in range(6):
            size = int(rng.integers(1, n - 1))
            targets = rng.choice(n, size=size, replace=False)
            ks = kill(small_ws_walk, rel, targets=targets.tolist())
            assert ks.spectral_radius < 1.0
            # power iteration is O(1/max_iter) accurate when the killed
            # matrix is defective (near-nilpotent), else machine precision
            oracle = np.max(np.abs(np.linalg.eigvals(ks.w_killed)))
            assert ks.spectral_radius == pytest.approx(oracle, abs=2e-5)


class TestSurvivalSeries:
    def test_no_reset_first_step(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        stats = survival_series(ks, NO_RESET, 5)
        assert stats.survival[0, 1] == pytest.approx(0.5, abs=1e-10)
        assert stats.fht_pdf[0, 1] == pytest.approx(0.5, abs=1e-10)

    def test_time_zero_alive(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        stats = survival_series(ks, Geometric(0.5), 3)
        assert np.all(stats.survival[:, 0] == 1.0)
        assert np.all(stats.fht_pdf[:, 0] == 0.0)

    def test_survival_monotone_and_mass_conserved(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[4])
        for law in (Geometric(0.3), Sibuya(0.5), FiniteSupport((0.4, 0.6))):
            stats = survival_series(ks, law, 80)
            assert np.all(np.diff(stats.survival, axis=1) <= 1e-15)
            assert np.all(stats.fht_pdf >= -1e-15)
            total = stats.fht_pdf.sum(axis=1) + stats.survival[:, -1]
            assert np.max(np.abs(total - 1.0)) < 1e-12

    def test_trapped_when_reset_every_tick(self, small_ws_walk):
        # relocation support disjoint from targets, reset at every step:
        # the walker never reaches a target
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 1])
        targets = [t for t in range(n) if t not in (0, 1)][:3]
        ks = kill(small_ws_walk, rel, targets=targets)
        stats = survival_series(ks, DeterministicPeriod(1), 30)
        assert np.allclose(stats.survival, 1.0, atol=1e-12)

    def test_matches_full_propagator_row_sums(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 5, 9])
        ks = kill(small_ws_walk, rel, targets=[12])
        for law in (Geometric(0.4), Sibuya(0.7)):
            stats = survival_series(ks, law, 40)
            full = survival_propagator(ks, law, 40)
            assert np.max(np.abs(full.sum(axis=2).T - stats.survival)) < 1e-12


class TestSurvivalPropagator:
    def test_bernoulli_closed_form(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[2, 17])
        p = 0.35
        series = survival_propagator(ks, Geometric(p), 25)
        one_step = (1.0 - p) * ks.w_killed + p * np.tile(ks.r_killed, (n, 1))
        for t in (1, 8, 25):
            closed = np.linalg.matrix_power(one_step, t)
            assert np.max(np.abs(series[t] - closed)) < 1e-12

    def test_undefective_inputs_reproduce_walk_with_resets(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[1, 6, 7])
        for law in (Geometric(0.3), Sibuya(0.6), FiniteSupport((0.5, 0.5))):
            awr = _awr_recursion(small_ws_walk, rel.probabilities, law, 30)
            walk = propagate(small_ws_walk, rel, law, 30)
            assert np.max(np.abs(awr - walk.matrices)) < 1e-12

    def test_heavy_tail_limits(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 1, 2, 3])
        ks = kill(small_ws_walk, rel, targets=[9])
        no_resets = survival_propagator(ks, Sibuya(1e-9), 20)
        always_reset = survival_propagator(ks, Sibuya(1.0 - 1e-9), 20)
        wk_power = np.eye(n)
        r_matrix = np.tile(ks.r_killed, (n, 1))
        r_power = np.eye(n)
        for t in range(1, 21):
            wk_power = wk_power @ ks.w_killed
            r_power = r_power @ r_matrix
            assert np.max(np.abs(no_resets[t] - wk_power)) < 1e-8
            assert np.max(np.abs(always_reset[t] - r_power)) < 1e-8


class TestMfht:
    def test_triangle_no_reset(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        result = mfht(ks, NO_RESET)
        assert result.per_start[:2] == pytest.approx([2.0, 2.0], rel=1e-8)
        assert result.per_start[2] == pytest.approx(3.0, rel=1e-8)

    def test_matches_direct_linear_solve_without_resets(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[3, 14])
        oracle = scipy.linalg.solve(np.eye(n) - ks.w_killed, np.ones(n))
        result = mfht(ks, NO_RESET)
        assert np.max(np.abs(result.per_start - oracle) / oracle) < 1e-8

    def test_matches_survival_curve_sum(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[5])
        for law in (Geometric(0.25), Sibuya(0.45), FiniteSupport((0.2, 0.8))):
            result = mfht(ks, law)
            stats = survival_series(ks, law, 3000)
            assert np.max(stats.survival[:, -1]) < 1e-13
            curve_sum = stats.survival.sum(axis=1)
            assert np.max(np.abs(result.per_start - curve_sum)) < 1e-8

    def test_global_mean(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        result = mfht(ks, Geometric(0.3))
        assert result.global_mean == pytest.approx(result.per_start.mean())

    def test_infinite_when_trapped(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 1])
        targets = [t for t in range(n) if t not in (0, 1)][:2]
        ks = kill(small_ws_walk, rel, targets=targets)
        result = mfht(ks, DeterministicPeriod(1))
        assert not result.finite
        assert np.all(np.isinf(result.per_start))
        assert result.spectral_radius == pytest.approx(1.0, abs=1e-8)

    def test_regularized_cross_check_off_targets(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        targets = [4, 11]
        ks = kill(small_ws_walk, rel, targets=targets)
        for alpha in (0.3, 0.7):
            production = mfht(ks, Sibuya(alpha)).per_start
            regularized = sibuya_mfht_regularized(ks, alpha)
            keep = [i for i in range(n) if i not in targets]
            rel_err = np.abs(production[keep] - regularized[keep]) / production[keep]
            assert np.max(rel_err) < 1e-5


class TestAppendixIdentities:
    def test_hit_with_probability_one(self, seven_node):
        # [(1 - Wk)^(-1) W]_ib = 1 for a single target, no resets
        w = transition_matrix(seven_node)
        n = seven_node.n
        rel = RelocationVector.uniform(n)
        for target in range(n):
            ks = kill(w, rel, targets=[target])
            total = scipy.linalg.solve(np.eye(n) - ks.w_killed, w[:, target])
            assert np.max(np.abs(total - 1.0)) < 1e-8

    def test_markov_deconvolution_equivalence(self, seven_node):
        # [W^t]_ib = sum_k chi_i(k) [W^(t-k)]_bb for the reset-free walk
        w = transition_matrix(seven_node)
        n = seven_node.n
        rel = RelocationVector.uniform(n)
        target = 5
        ks = kill(w, rel, targets=[target])
        t_max = 30
        wk_powers = [np.eye(n)]
        w_powers = [np.eye(n)]
        for _ in range(t_max):
            wk_powers.append(wk_powers[-1] @ ks.w_killed)
            w_powers.append(w_powers[-1] @ w)
        chi = np.zeros((n, t_max + 1))
        for t in range(1, t_max + 1):
            chi[:, t] = wk_powers[t - 1] @ w[:, target]
        for t in range(1, t_max + 1):
            lhs = w_powers[t][:, target]
            rhs = sum(chi[:, k] * w_powers[t - k][target, target] for k in range(1, t + 1))
            assert np.max(np.abs(lhs - rhs)) < 1e-10

    def test_survival_decays_geometrically(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[0])
        stats = survival_series(ks, NO_RESET, 400)
        tail = np.max(stats.survival[:, 200:], axis=0)
        slope = np.polyfit(np.arange(tail.size), np.log(tail), 1)[0]
        assert slope < 0.0


@pytest.fixture(scope="module")
def trapped():
    g = watts_strogatz(60, 2, 0.15, seed=77)
    w = transition_matrix(g)
    # relocation mass near node 0; target far around the ring
    support = [0, 1, 2]
    rel = RelocationVector.uniform(g.n, nodes=support)
    horizon = 3
    from resetwalk.survival import _distance_from_support

    ks = kill(w, rel, targets=[30])
    assert _distance_from_support(ks) > horizon
    return ks, FiniteSupport.uniform(horizon), horizon


class TestTrappedRegime:
    def test_spectral_radius_is_one(self, trapped):
        ks, law, _ = trapped
        report = ergodicity_check(ks, law)
        assert report.classification == "non-ergodic-hallmark"
        assert report.spectral_radius == pytest.approx(1.0, abs=1e-8)

    def test_survival_constant_after_support_horizon(self, trapped):
        ks, law, horizon = trapped
        stats = survival_series(ks, law, horizon + 50)
        window = stats.survival[:, horizon:]
        assert np.max(np.max(window, axis=1) - np.min(window, axis=1)) < 1e-10

    def test_plateau_values_and_hitting_probability(self, trapped):
        ks, law, horizon = trapped
        result = hitting_probability(ks, law, t_plateau=horizon + 50)
        assert result.regime == "trapped"
        for s in ks.relocation.support:
            assert result.values[s] == pytest.approx(0.0, abs=1e-12)
        stats = survival_series(ks, law, horizon + 50)
        assert np.max(np.abs((1.0 - stats.survival[:, -1]) - result.values)) < 1e-10

    def test_defective_fht_near_target(self, trapped):
        ks, law, horizon = trapped
        # a neighbor of the target can hit before the first reset, but not surely
        neighbor = int(np.flatnonzero(ks.w_full[:, 30] > 0)[0])
        stats = survival_series(ks, law, horizon + 50)
        mass = stats.fht_pdf[neighbor].sum()
        assert 0.0 < mass < 1.0

    def test_mfht_infinite_for_all_starts(self, trapped):
        ks, law, _ = trapped
        result = mfht(ks, law)
        assert np.all(np.isinf(result.per_start))


class TestErgodicity:
    def test_uniform_relocation_everywhere(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[7])
        report = ergodicity_check(ks, Geometric(0.4))
        assert report.classification == "ergodic-sufficient"
        assert report.relocation_positive
        assert report.coupled_positive

    def test_rank_one_radius_matches_eig(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 2, 4, 6])
        ks = kill(small_ws_walk, rel, targets=[11])
        law = Geometric(0.5)
        report = ergodicity_check(ks, law)
        # oracle: dense eigenvalues of g(Wk) . Rk
        from resetwalk.survival import _interval_matrix_series

        coupling = _interval_matrix_series(ks.w_killed, law) @ np.tile(
            ks.r_killed, (n, 1)
        )
        oracle = np.max(np.abs(np.linalg.eigvals(coupling)))
        assert report.spectral_radius == pytest.approx(oracle, abs=1e-10)
        assert report.spectral_radius < 1.0

    def test_interval_matrix_positivity_condition(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.single(0, n)
        ks = kill(small_ws_walk, rel, targets=[9])
        # geometric intervals reach every length, so g(W) is positive even
        # though the relocation support is a single node
        report = ergodicity_check(ks, Geometric(0.2))
        assert report.interval_matrix_positive
        assert not report.relocation_positive
        assert report.classification == "ergodic-sufficient"
        # a one-step period keeps g(W) = identity-like: condition (a) fails
        report1 = ergodicity_check(ks, DeterministicPeriod(1))
        assert not report1.interval_matrix_positive


class TestHittingProbability:
    def test_ergodic_is_one(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[3, 4])
        result = hitting_probability(ks, Geometric(0.3), 200)
        assert result.regime == "ergodic"
        assert np.all(result.values == 1.0)


class TestMoments:
    def test_first_moment_matches_mfht(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        law = Geometric(0.3)
        first = moments(ks, law, 1)
        assert np.max(np.abs(first - mfht(ks, law).per_start)) < 1e-6

    def test_second_moment_direct_sum_oracle(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        stats = survival_series(ks, NO_RESET, 200)
        t = np.arange(201)
        oracle = (stats.fht_pdf * t[None, :] ** 2).sum(axis=1)
        second = moments(ks, NO_RESET, 2)
        assert np.max(np.abs(second - oracle) / oracle) < 1e-5
        # analytic check for the 2x2 killed block: sum t^2 2^-t = 6
        assert oracle[0] == pytest.approx(6.0, abs=1e-10)

    def test_higher_moments_finite_and_ordered(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n)
        ks = kill(small_ws_walk, rel, targets=[8, 13])
        law = Geometric(0.35)
        values = [moments(ks, law, m) for m in (1, 2, 3, 4)]
        for m, vals in enumerate(values, start=1):
            assert np.all(np.isfinite(vals))
            assert np.all(vals > 0)
        # Jensen: <T^2> >= <T>^2 etc.
        assert np.all(values[1] >= values[0] ** 2 - 1e-9)

    def test_infinite_in_trapped_regime(self, small_ws_walk):
        n = small_ws_walk.shape[0]
        rel = RelocationVector.uniform(n, nodes=[0, 1])
        targets = [t for t in range(n) if t not in (0, 1)][:2]
        ks = kill(small_ws_walk, rel, targets=targets)
        assert np.all(np.isinf(moments(ks, DeterministicPeriod(1), 2)))

    def test_order_bounds(self, triangle_walk_module):
        ks = triangle_killed_factory(triangle_walk_module)
        with pytest.raises(ValueError):
            moments(ks, NO_RESET, 5)
        with pytest.raises(ValueError):
            moments(ks, NO_RESET, 0)
