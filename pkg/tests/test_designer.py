import numpy as np
import pytest

from recgame.broadcast import BroadcastParams, build_broadcast_game, point_initial
from recgame.designer import (
    MessagingStrategy,
    build_stage_lp,
    solve_designer,
    strategy_marginal,
)
from recgame.errors import InputError
from recgame.lp import Status, solve_lp
from recgame.verifier import check_obedience, evaluate

from gen import (
    ce_optimum_scipy,
    pd_game,
    random_feasible_strategy,
    random_game,
    random_messaging,
    zero_reward_game,
)


class TestBuildStageLp:
    def test_single_joint_action_stage(self):
        spec = random_game(np.random.default_rng(0), max_states=1, max_actions=1)
        T = spec.horizon
        zeros = np.zeros(spec.n_states(T + 1))
        lp, layout = build_stage_lp(T, 0, zeros, zeros, zeros, spec)
        assert lp.n_vars == 1
        assert lp.ub_rhs.size == 0
        assert np.array_equal(lp.eq_matrix, [[1.0]])
        sol = solve_lp(lp)
        assert sol.x == pytest.approx([1.0], abs=1e-12)
        assert layout.rows == ()

    def test_layout_column_map_is_bijective(self):
        spec = random_game(np.random.default_rng(1), max_states=2, max_actions=3)
        zeros = np.zeros(spec.n_states(2))
        _, layout = build_stage_lp(1, 0, zeros, zeros, zeros, spec)
        cols = {
            layout.column(m1, m2)
            for m1 in range(layout.n1)
            for m2 in range(layout.n2)
        }
        assert cols == set(range(layout.n1 * layout.n2))

    def test_dilemma_feasible_set_is_mutual_defection(self):
        # Any objective over the obedience polytope lands on the same point.
        spec = pd_game()
        zeros = np.zeros(1)
        lp, layout = build_stage_lp(1, 0, zeros, zeros, zeros, spec)
        assert lp.ub_rhs.size == 4
        rng = np.random.default_rng(2)
        target = np.array([0.0, 0.0, 0.0, 1.0])
        for _ in range(12):
            probe = lp.__class__.build(
                rng.normal(size=4),
                eq=(lp.eq_matrix, lp.eq_rhs),
                ub=(lp.ub_matrix, lp.ub_rhs),
            )
            sol = solve_lp(probe)
            assert sol.status is Status.OPTIMAL
            assert sol.x == pytest.approx(target, abs=1e-9)

    def test_congested_state_prefers_unequal_split(self):
        params = BroadcastParams(horizon=1, initial=point_initial(3, 2, 1))
        spec = build_broadcast_game(params)
        x = spec.state_index(1, "(2,1)")
        zeros = np.zeros(spec.n_states(2))
        lp, layout = build_stage_lp(1, x, zeros, zeros, zeros, spec)
        sol = solve_lp(lp)
        g = np.array(sol.x).reshape(layout.n1, layout.n2)
        assert g[2, 1] == pytest.approx(1.0, abs=1e-9)


class TestSolveDesigner:
    def test_zero_rewards_give_zero_tables(self):
        spec = zero_reward_game(np.random.default_rng(3))
        strategy, values = solve_designer(spec)
        for t in range(spec.horizon + 1):
            assert np.allclose(values.designer[t], 0.0, atol=1e-12)
            assert np.allclose(values.agent1[t], 0.0, atol=1e-12)
            assert np.allclose(values.agent2[t], 0.0, atol=1e-12)
        assert strategy.dist(1, 0).sum() == pytest.approx(1.0, abs=1e-12)

    def test_dilemma_value_and_selection(self):
        spec = pd_game()
        strategy, values = solve_designer(spec)
        assert strategy.dist(1, 0)[1, 1] == pytest.approx(1.0, abs=1e-9)
        assert values.designer[0][0] == pytest.approx(2.0, abs=1e-9)
        assert values.agent1[0][0] == pytest.approx(1.0, abs=1e-9)

    def test_one_step_congested_start(self):
        params = BroadcastParams(horizon=1, initial=point_initial(3, 2, 1))
        spec = build_broadcast_game(params)
        strategy, values = solve_designer(spec)
        x = spec.state_index(1, "(2,1)")
        assert strategy.dist(1, x)[2, 1] == pytest.approx(1.0, abs=1e-9)
        start = float(spec.initial @ values.designer[0])
        assert start == pytest.approx(4.6, abs=1e-9)

    def test_terminal_layer_is_zero(self):
        spec = random_game(np.random.default_rng(4))
        _, values = solve_designer(spec)
        T = spec.horizon
        assert np.array_equal(values.designer[T], np.zeros(spec.n_states(T + 1)))
        assert np.array_equal(values.agent(1)[T], np.zeros(spec.n_states(T + 1)))

    def test_stage_consistency(self):
        # Stored tables equal the one-step recursion of the stored strategy.
        rng = np.random.default_rng(5)
        for _ in range(8):
            spec = random_game(rng)
            strategy, values = solve_designer(spec)
            for t in range(spec.horizon, 0, -1):
                for x in range(spec.n_states(t)):
                    g = strategy.dist(t, x)
                    kernel = spec.kernel_at(t, x)
                    for who, table in (
                        (0, values.designer),
                        (1, values.agent1),
                        (2, values.agent2),
                    ):
                        togo = spec.reward_at(who, t, x) + kernel @ table[t]
                        assert table[t - 1][x] == pytest.approx(
                            float((g * togo).sum()), abs=1e-8
                        )

    def test_distributions_normalized_and_obedient(self):
        rng = np.random.default_rng(6)
        for _ in range(6):
            spec = random_game(rng)
            strategy, _ = solve_designer(spec)
            for t in range(1, spec.horizon + 1):
                for x in range(spec.n_states(t)):
                    g = strategy.dist(t, x)
                    assert g.min() >= 0.0
                    assert g.sum() == pytest.approx(1.0, abs=1e-9)
            assert check_obedience(spec, strategy).passed

    def test_one_step_matches_equilibrium_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            spec = random_game(rng, max_states=3, max_actions=3, max_horizon=1)
            _, values = solve_designer(spec)
            for x in range(spec.n_states(1)):
                want = ce_optimum_scipy(
                    spec.reward_at(0, 1, x),
                    spec.reward_at(1, 1, x),
                    spec.reward_at(2, 1, x),
                )
                assert values.designer[0][x] == pytest.approx(want, abs=1e-9)

    def test_value_dominates_constructed_strategies(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            spec = random_game(rng, max_states=3, max_actions=2, max_horizon=4)
            _, values = solve_designer(spec)
            opt = float(spec.initial @ values.designer[0])
            strategy, start = random_feasible_strategy(rng, spec)
            assert check_obedience(spec, strategy).passed
            assert start <= opt + 1e-7
            assert evaluate(spec, strategy).designer_total <= opt + 1e-7

    def test_value_dominates_rejection_sampled_strategies(self):
        rng = np.random.default_rng(42)
        accepted = 0
        for _ in range(12):
            spec = random_game(rng, max_states=2, max_actions=2, max_horizon=2)
            _, values = solve_designer(spec)
            opt = float(spec.initial @ values.designer[0])
            for _ in range(40):
                strategy = random_messaging(rng, spec)
                if check_obedience(spec, strategy).passed:
                    accepted += 1
                    assert evaluate(spec, strategy).designer_total <= opt + 1e-7
        assert accepted >= 10

    def test_thread_count_does_not_change_bits(self):
        spec = build_broadcast_game(BroadcastParams(horizon=3, buffer_cap=2))
        s1, v1 = solve_designer(spec, threads=1)
        s4, v4 = solve_designer(spec, threads=4)
        for t in range(spec.horizon + 1):
            assert np.array_equal(v1.designer[t], v4.designer[t])
            assert np.array_equal(v1.agent1[t], v4.agent1[t])
        for t in range(1, spec.horizon + 1):
            for x in range(spec.n_states(t)):
                assert np.array_equal(s1.dist(t, x), s4.dist(t, x))

    def test_reachable_only_matches_full_solve(self):
        params = BroadcastParams(
            horizon=2, buffer_cap=2, initial=point_initial(2, 0, 0)
        )
        spec = build_broadcast_game(params)
        full_s, full_v = solve_designer(spec)
        part_s, part_v = solve_designer(spec, reachable_only=True)
        from recgame.game import reachable_states

        layers = reachable_states(spec)
        for t in range(1, spec.horizon + 1):
            for x in range(spec.n_states(t)):
                if x in layers[t - 1]:
                    assert np.array_equal(part_s.dist(t, x), full_s.dist(t, x))
                    assert part_v.designer[t - 1][x] == full_v.designer[t - 1][x]
                else:
                    with pytest.raises(InputError):
                        part_s.dist(t, x)

    def test_metadata_records_solve_shape(self):
        spec = zero_reward_game(np.random.default_rng(9), nx=2, horizon=2)
        strategy, _ = solve_designer(spec)
        md = strategy.metadata
        assert md["stage_lps_solved"] == 4
        assert md["reachable_only"] is False
        assert md["support_threshold"] == 1e-9
        assert md["total_pivots"] >= 0

    def test_invalid_spec_is_rejected(self):
        rows = [np.full((1, 1, 2), 0.4), np.full((1, 1, 2), 0.5)]
        from recgame.game import GameSpec

        spec = GameSpec.from_tables(
            horizon=1,
            states=["s0", "s1"],
            actions=[(["a"], ["b"])] * 2,
            kernel=rows,
            rewards=tuple([np.zeros((1, 1))] * 2 for _ in range(3)),
            initial=[1.0, 0.0],
        )
        with pytest.raises(InputError, match="validation"):
            solve_designer(spec)


class TestStrategyMarginal:
    def payoff_free_strategy(self, dist):
        dist = np.asarray(dist, dtype=float)
        dist.flags.writeable = False
        return MessagingStrategy(horizon=1, table=((dist,),), metadata={})

    def test_point_mass(self):
        strategy = self.payoff_free_strategy(
            [[0.0, 0.0], [0.0, 0.0], [0.0, 1.0]]
        )
        assert np.array_equal(strategy_marginal(strategy, 1, 0, 1), [0, 0, 1])
        assert np.array_equal(strategy_marginal(strategy, 1, 0, 2), [0, 1])

    def test_uniform_marginals(self):
        strategy = self.payoff_free_strategy(np.full((2, 2), 0.25))
        for agent in (1, 2):
            assert strategy_marginal(strategy, 1, 0, agent) == pytest.approx(
                [0.5, 0.5]
            )

    def test_mixed_support(self):
        strategy = self.payoff_free_strategy(
            [[0.98, 0.01], [0.01, 0.0]]
        )
        m1 = strategy_marginal(strategy, 1, 0, 1)
        assert m1 == pytest.approx([0.99, 0.01], abs=1e-12)

    def test_index_errors(self):
        strategy = self.payoff_free_strategy([[1.0]])
        with pytest.raises(InputError):
            strategy_marginal(strategy, 2, 0, 1)
        with pytest.raises(InputError):
            strategy_marginal(strategy, 1, 5, 1)
        with pytest.raises(InputError):
            strategy_marginal(strategy, 1, 0, 3)
