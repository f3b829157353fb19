"""Q-factor estimation, rollout selection, multiagent, and episodes."""

import math

import numpy as np
import pytest

from beliefopt.beliefs import (
    CostSpec,
    GaussianBelief,
    ObservationModel,
    gaussian_update,
    terminal_cost,
)
from beliefopt.policies import BasePolicy, NoiseGrid, select_myopic
from beliefopt.problems import BOProblem
from beliefopt.rollout import (
    QFactorEstimate,
    RolloutConfig,
    multiagent_base_choices,
    q_factor,
    run_episode,
    select_multiagent,
    select_rollout,
)
from beliefopt import oracle

from conftest import random_bo_instance


@pytest.fixture
def small_problem():
    prior = GaussianBelief(np.array([0.3, -0.1]), np.array([[1.1, 0.2], [0.2, 0.8]]))
    model = ObservationModel.direct(2, [0.5, 0.7], [0.1, 0.3])
    return BOProblem(prior, model, CostSpec("trace-covariance"), 2, NoiseGrid.gauss_hermite(3))


GREEDY = BasePolicy.parse("greedy")


class TestQFactor:
    def test_last_stage_trace_terminal_closed_form(self, small_problem):
        """At the last stage the Q-factor is c(u) + tr of the rank-one update,
        independent of the observed value."""
        p = small_problem
        cfg = RolloutConfig(horizon=2, mode="exact-enumeration")
        for u in range(2):
            a = p.model.directions[u]
            sigma_a = p.prior.covariance @ a
            s = a @ sigma_a + p.model.noise_variances[u]
            expected_trace = np.trace(p.prior.covariance - np.outer(sigma_a, sigma_a) / s)
            est = q_factor(p.prior, p.model, p.costs, GREEDY, u, 1, cfg, p.noise_grid)
            assert abs(est.value - (p.model.costs[u] + expected_trace)) <= 1e-12
            assert est.stderr == 0.0

    def test_zero_costs_zero_terminal_gives_zero(self):
        """With free observations and a belief whose terminal cost is 0 on
        every branch, the Q-factor vanishes in every mode."""
        prior = GaussianBelief(np.zeros(2), np.zeros((2, 2)))
        model = ObservationModel.direct(2, 1.0)
        prob = BOProblem(prior, model, CostSpec("min-posterior-mean"), 2, NoiseGrid.gauss_hermite(2))
        for mode in ("exact-enumeration", "certainty-equivalent", "monte-carlo"):
            cfg = RolloutConfig(horizon=2, mode=mode, samples_per_candidate=8, seed=4)
            for u in range(2):
                est = q_factor(prior, model, prob.costs, GREEDY, u, 0, cfg, prob.noise_grid)
                assert est.value == 0.0

    def test_two_point_domain_hand_tree(self, small_problem):
        """Stage-0 Q-factor against an explicit two-level enumeration."""
        p = small_problem
        cfg = RolloutConfig(horizon=2, mode="exact-enumeration")
        grid = p.noise_grid
        for cand in range(2):
            a = p.model.directions[cand]
            pm = float(a @ p.prior.mean)
            sd = math.sqrt(float(a @ p.prior.covariance @ a) + p.model.noise_variances[cand])
            expected = float(p.model.costs[cand])
            for xi, prob_xi in zip(grid.points, grid.probs):
                b1 = gaussian_update(p.prior, p.model, cand, pm + sd * xi)
                u2 = select_myopic(b1, p.model, GREEDY.kind)
                a2 = p.model.directions[u2]
                pm2 = float(a2 @ b1.mean)
                sd2 = math.sqrt(float(a2 @ b1.covariance @ a2) + p.model.noise_variances[u2])
                inner = float(p.model.costs[u2])
                for xj, prob_xj in zip(grid.points, grid.probs):
                    b2 = gaussian_update(b1, p.model, u2, pm2 + sd2 * xj)
                    inner += prob_xj * terminal_cost(b2, p.costs)
                expected += prob_xi * inner
            est = q_factor(p.prior, p.model, p.costs, GREEDY, cand, 0, cfg, p.noise_grid)
            assert abs(est.value - expected) <= 1e-12

    def test_estimate_invariants(self):
        with pytest.raises(ValueError):
            QFactorEstimate(0, 1.0, 0.5, 4, "exact-enumeration")
        with pytest.raises(ValueError):
            QFactorEstimate(0, 1.0, 0.1, 0, "monte-carlo")

    def test_bad_candidate_and_stage(self, small_problem):
        p = small_problem
        cfg = RolloutConfig(horizon=2)
        with pytest.raises(IndexError):
            q_factor(p.prior, p.model, p.costs, GREEDY, 7, 0, cfg, p.noise_grid)
        with pytest.raises(ValueError):
            q_factor(p.prior, p.model, p.costs, GREEDY, 0, 2, cfg, p.noise_grid)
        with pytest.raises(ValueError):
            RolloutConfig(horizon=2, samples_per_candidate=0)


class TestSelectRollout:
    def test_prune_one_equals_myopic(self, small_problem):
        p = small_problem
        cfg = RolloutConfig(horizon=2, prune_limit=1)
        choice, ests = select_rollout(p.prior, p.model, p.costs, GREEDY, 0, cfg, p.noise_grid)
        assert choice == GREEDY(p.prior, p.model, 0)
        assert len(ests) == 1

    def test_pruning_soundness_full_limit(self, small_problem):
        p = small_problem
        cfg_full = RolloutConfig(horizon=2)
        cfg_pruned = RolloutConfig(horizon=2, prune_limit=p.model.n_obs)
        c1, e1 = select_rollout(p.prior, p.model, p.costs, GREEDY, 0, cfg_full, p.noise_grid)
        c2, e2 = select_rollout(p.prior, p.model, p.costs, GREEDY, 0, cfg_pruned, p.noise_grid)
        assert c1 == c2
        assert sorted((e.candidate, e.value) for e in e1) == sorted(
            (e.candidate, e.value) for e in e2
        )

    def test_oracle_hook_reproduces_dp_choice(self):
        """With the exact J* as tail, rollout's argmin set equals the DP set."""
        for seed in range(5):
            prob = random_bo_instance(seed, grid_size=3)
            jstar, optimal = oracle.exact_dp_value(prob)

            def tail(belief, k, prob=prob):
                sub = BOProblem(belief, prob.model, prob.costs, prob.horizon - k, prob.noise_grid)
                return oracle.exact_dp_value(sub)[0]

            cfg = RolloutConfig(horizon=prob.horizon, mode="exact-enumeration")
            choice, ests = select_rollout(
                prob.prior, prob.model, prob.costs, GREEDY, 0, cfg, prob.noise_grid, tail_value=tail
            )
            assert choice in optimal
            best = min(e.value for e in ests)
            argmin_set = {e.candidate for e in ests if e.value <= best + 1e-12}
            assert argmin_set == optimal
            assert abs(best - jstar) <= 1e-12

    def test_symmetric_instance_breaks_ties_low(self):
        prior = GaussianBelief(np.zeros(3), np.eye(3))
        model = ObservationModel.direct(3, 0.5, 0.1)
        prob = BOProblem(prior, model, CostSpec("trace-covariance"), 2, NoiseGrid.gauss_hermite(2))
        cfg = RolloutConfig(horizon=2)
        choice, ests = select_rollout(prob.prior, model, prob.costs, GREEDY, 0, cfg, prob.noise_grid)
        assert choice == 0
        assert len({round(e.value, 12) for e in ests}) == 1  # exchangeable components

    def test_crn_ranking_deterministic(self, small_problem):
        p = small_problem
        cfg = RolloutConfig(horizon=2, mode="monte-carlo", samples_per_candidate=32, seed=9)
        runs = [
            select_rollout(p.prior, p.model, p.costs, GREEDY, 0, cfg, p.noise_grid)
            for _ in range(2)
        ]
        assert runs[0][0] == runs[1][0]
        assert [e.value for e in runs[0][1]] == [e.value for e in runs[1][1]]

    def test_crn_shares_draws_at_matched_positions(self, small_problem, monkeypatch):
        """Every candidate's Q-factor sees the same uniform matrix under CRN
        and candidate-specific draws without it."""
        import beliefopt.rollout as rollout_mod

        p = small_problem
        captured = []
        real_q_factor = rollout_mod.q_factor

        def recording_q_factor(*args, **kwargs):
            uniforms = kwargs.get("uniforms", args[9] if len(args) > 9 else None)
            captured.append(uniforms)
            return real_q_factor(*args, **kwargs)

        monkeypatch.setattr(rollout_mod, "q_factor", recording_q_factor)
        crn = RolloutConfig(horizon=2, mode="monte-carlo", samples_per_candidate=16, seed=5)
        select_rollout(p.prior, p.model, p.costs, GREEDY, 0, crn, p.noise_grid)
        assert len(captured) == 2
        assert captured[0] is not None
        assert np.array_equal(captured[0], captured[1])

        captured.clear()
        no_crn = RolloutConfig(
            horizon=2, mode="monte-carlo", samples_per_candidate=16, seed=5,
            common_random_numbers=False,
        )
        select_rollout(p.prior, p.model, p.costs, GREEDY, 0, no_crn, p.noise_grid)
        assert captured == [None, None]  # each estimate derives its own stream

    def test_truncation_at_full_depth_matches_untruncated(self, small_problem):
        p = small_problem
        full = RolloutConfig(horizon=2)
        trunc = RolloutConfig(horizon=2, truncation_depth=1)  # = remaining after stage 1
        e_full = q_factor(p.prior, p.model, p.costs, GREEDY, 0, 0, full, p.noise_grid)
        e_trunc = q_factor(p.prior, p.model, p.costs, GREEDY, 0, 0, trunc, p.noise_grid)
        assert abs(e_full.value - e_trunc.value) <= 1e-12
        with pytest.raises(ValueError):
            q_factor(p.prior, p.model, p.costs, GREEDY, 0, 0, RolloutConfig(horizon=2, truncation_depth=3), p.noise_grid)

    def test_truncated_tail_charges_terminal_at_cut(self, small_problem):
        """Depth 0 cuts the tail immediately: q = c(u) + E[G(b')]."""
        p = small_problem
        cfg = RolloutConfig(horizon=2, truncation_depth=0)
        grid = p.noise_grid
        for u in range(2):
            a = p.model.directions[u]
            pm = float(a @ p.prior.mean)
            sd = math.sqrt(float(a @ p.prior.covariance @ a) + p.model.noise_variances[u])
            expected = float(p.model.costs[u])
            for xi, prob_xi in zip(grid.points, grid.probs):
                b1 = gaussian_update(p.prior, p.model, u, pm + sd * xi)
                expected += prob_xi * terminal_cost(b1, p.costs)
            est = q_factor(p.prior, p.model, p.costs, GREEDY, u, 0, cfg, p.noise_grid)
            assert abs(est.value - expected) <= 1e-12


class TestMultiagent:
    def test_single_agent_degenerates_to_select_rollout(self, small_problem):
        p = small_problem
        cfg = RolloutConfig(horizon=2)
        ma_choice, ma_ests = select_multiagent(
            p.prior, p.model, p.costs, GREEDY, 0, cfg, 1, p.noise_grid
        )
        sr_choice, sr_ests = select_rollout(p.prior, p.model, p.costs, GREEDY, 0, cfg, p.noise_grid)
        assert ma_choice == (sr_choice,)
        for ma, sr in zip(ma_ests[0], sr_ests):
            assert ma.candidate == sr.candidate
            assert abs(ma.value - sr.value) <= 1e-12

    def test_evaluation_count_is_agents_times_candidates(self):
        prior = GaussianBelief(np.array([0.1, -0.2, 0.3]), np.diag([1.0, 1.5, 0.7]))
        model = ObservationModel.direct(3, 0.5, 0.1)
        prob = BOProblem(prior, model, CostSpec("trace-covariance"), 2, NoiseGrid.gauss_hermite(2))
        cfg = RolloutConfig(horizon=2)
        _, ests = select_multiagent(prob.prior, model, prob.costs, GREEDY, 0, cfg, 2, prob.noise_grid)
        assert [len(agent) for agent in ests] == [3, 3]

    def test_pruned_count(self):
        prior = GaussianBelief(np.array([0.1, -0.2, 0.3, 0.4]), np.diag([1.0, 1.5, 0.7, 1.2]))
        model = ObservationModel.direct(4, 0.5, 0.1)
        prob = BOProblem(prior, model, CostSpec("trace-covariance"), 2, NoiseGrid.gauss_hermite(2))
        cfg = RolloutConfig(horizon=2, prune_limit=2)
        _, ests = select_multiagent(prob.prior, model, prob.costs, GREEDY, 0, cfg, 2, prob.noise_grid)
        assert [len(agent) for agent in ests] == [2, 2]

    def test_multiagent_not_worse_than_base_exact(self):
        prior = GaussianBelief(np.array([0.4, -0.6, 0.2]), np.diag([1.4, 1.0, 0.9]))
        model = ObservationModel.direct(3, [0.4, 0.9, 0.6], 0.05)
        prob = BOProblem(prior, model, CostSpec("min-posterior-mean"), 2, NoiseGrid.gauss_hermite(2))
        cfg = RolloutConfig(horizon=2)
        base = BasePolicy.parse("variance")

        def ma_policy(belief, k):
            choice, _ = select_multiagent(belief, model, prob.costs, base, k, cfg, 2, prob.noise_grid)
            return choice

        def base_policy(belief, k):
            return multiagent_base_choices(belief, model, base, 2)

        v_roll = oracle.policy_value(prob, ma_policy)
        v_base = oracle.policy_value(prob, base_policy)
        assert v_roll <= v_base + 1e-9


class TestRunEpisode:
    def test_zero_noise_collapses_onto_truth(self):
        prior = GaussianBelief(np.array([0.5, 0.5, 0.5]), np.eye(3))
        model = ObservationModel.direct(3, 0.0)
        prob = BOProblem(prior, model, CostSpec("min-posterior-mean"), 3, NoiseGrid.gauss_hermite(2))
        truth = np.array([0.9, -0.7, 0.1])
        base = BasePolicy.parse("variance")
        ep = run_episode(prob, base, RolloutConfig(horizon=3, seed=2), truth, controller="base")
        assert sorted(ep.chosen) == [0, 1, 2]  # variance-greedy visits each once
        np.testing.assert_allclose(ep.beliefs[-1].mean, truth, atol=1e-9)
        assert ep.final_best_point == int(np.argmin(truth))
        # terminal min-posterior-mean equals min theta
        assert abs((ep.realized_cost) - truth.min()) <= 1e-9

    def test_same_seed_identical_trajectory(self, small_problem):
        p = small_problem
        cfg = RolloutConfig(horizon=2, seed=31)
        truth = np.array([0.2, -0.4])
        eps = [run_episode(p, GREEDY, cfg, truth) for _ in range(2)]
        assert eps[0].chosen == eps[1].chosen
        assert eps[0].observed == eps[1].observed
        assert eps[0].realized_cost == eps[1].realized_cost

    def test_truth_dimension_checked(self, small_problem):
        with pytest.raises(ValueError):
            run_episode(small_problem, GREEDY, RolloutConfig(horizon=2), np.zeros(5))


class TestCostImprovement:
    @pytest.mark.parametrize("seed", range(4))
    def test_rollout_beats_base_exactly(self, seed):
        prob = random_bo_instance(seed, grid_size=2)
        cfg = RolloutConfig(horizon=prob.horizon, mode="exact-enumeration")

        def rollout_policy(belief, k):
            choice, _ = select_rollout(
                belief, prob.model, prob.costs, GREEDY, k, cfg, prob.noise_grid
            )
            return choice

        v_base = oracle.policy_value(prob, lambda b, k: GREEDY(b, prob.model, k))
        v_roll = oracle.policy_value(prob, rollout_policy)
        assert v_roll <= v_base + 1e-9
