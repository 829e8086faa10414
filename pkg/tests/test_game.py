import numpy as np
import pytest

from recgame.broadcast import BroadcastParams, build_broadcast_game, point_initial
from recgame.errors import InputError
from recgame.game import (
    GameSpec,
    NoiseModel,
    RewardTables,
    TransitionKernel,
    compile_kernel,
    reachable_states,
    validate_spec,
)

LAYOUT_2 = [(["a0", "a1"], ["b0"]), (["a0"], ["b0", "b1"])]


def two_state_game(kernel_rows, initial=(1.0, 0.0)):
    rewards = tuple(
        [np.zeros((2, 1)), np.zeros((1, 2))] for _ in range(3)
    )
    return GameSpec.from_tables(
        horizon=2,
        states=["s0", "s1"],
        actions=LAYOUT_2,
        kernel=kernel_rows,
        rewards=rewards,
        initial=initial,
    )


class TestCompileKernel:
    def test_single_atom_gives_point_masses(self):
        noise = NoiseModel(
            atom_probs=(np.array([1.0]),),
            transition=lambda t, x, u1, u2, atom: (x + u1) % 2,
        )
        kern = compile_kernel(
            noise, [["s0", "s1"]] * 2, [[(["a0", "a1"], ["b0"]), (["a0"], ["b0"])]]
        )
        assert np.array_equal(kern.block(1, 0)[0, 0], [1.0, 0.0])
        assert np.array_equal(kern.block(1, 0)[1, 0], [0.0, 1.0])
        assert np.array_equal(kern.block(1, 1)[0, 0], [0.0, 1.0])

    def test_broadcast_idle_row_from_empty_buffers(self):
        spec = build_broadcast_game(BroadcastParams(horizon=1))
        row = spec.kernel_at(1, 0)[0, 0]
        expected = np.zeros(16)
        expected[[0, 1, 4, 5]] = [0.04, 0.16, 0.16, 0.64]
        assert row == pytest.approx(expected, abs=1e-15)

    def test_atoms_landing_together_merge(self):
        noise = NoiseModel(
            atom_probs=(np.array([0.3, 0.45, 0.25]),),
            transition=lambda t, x, u1, u2, atom: 0 if atom < 2 else 1,
        )
        kern = compile_kernel(noise, [["s0", "s1"]] * 2, [[(["a"], ["b"])] * 2])
        assert kern.block(1, 0)[0, 0] == pytest.approx([0.75, 0.25], abs=1e-15)

    def test_atom_relabeling_is_invisible(self):
        probs = np.array([0.1, 0.2, 0.3, 0.4])
        dest = [1, 0, 2, 1]
        perm = [2, 0, 3, 1]
        states = [["s0", "s1", "s2"]] * 2
        actions = [[(["a"], ["b"])] * 3]
        base = compile_kernel(
            NoiseModel(
                atom_probs=(probs,),
                transition=lambda t, x, u1, u2, atom: dest[atom],
            ),
            states,
            actions,
        )
        shuffled = compile_kernel(
            NoiseModel(
                atom_probs=(probs[perm],),
                transition=lambda t, x, u1, u2, atom: dest[perm[atom]],
            ),
            states,
            actions,
        )
        for x in range(3):
            assert np.array_equal(base.block(1, x), shuffled.block(1, x))

    def test_out_of_range_transition_names_location(self):
        noise = NoiseModel(
            atom_probs=(np.array([1.0]),),
            transition=lambda t, x, u1, u2, atom: 7,
        )
        with pytest.raises(InputError, match=r"t=1.*x=0.*atom=0"):
            compile_kernel(noise, [["s0"]] * 2, [[(["a"], ["b"])]])

    def test_layer_count_mismatch(self):
        noise = NoiseModel(
            atom_probs=(np.array([1.0]),),
            transition=lambda t, x, u1, u2, atom: 0,
        )
        with pytest.raises(InputError):
            compile_kernel(noise, [["s0"]], [[(["a"], ["b"])]])

    def test_rows_are_distributions(self):
        spec = build_broadcast_game(BroadcastParams(horizon=2, buffer_cap=2))
        for t in (1, 2):
            for x in range(spec.n_states(t)):
                block = spec.kernel_at(t, x)
                assert np.all(block >= 0.0)
                assert np.max(np.abs(block.sum(axis=2) - 1.0)) <= 1e-12


class TestValidateSpec:
    def test_clean_broadcast_spec(self):
        spec = build_broadcast_game(BroadcastParams(horizon=2, buffer_cap=2))
        assert validate_spec(spec) == []

    def test_short_kernel_row_is_cited(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        rows[0] = rows[0].copy()
        rows[0][1, 0] = [0.4, 0.5]
        spec = two_state_game(rows)
        problems = validate_spec(spec)
        hits = [p for p in problems if "sums to" in p and "kernel" in p]
        assert hits
        assert "state 's0'" in hits[0] and "(a1,b0)" in hits[0]

    def test_negative_kernel_entry_flagged(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        rows[0] = rows[0].copy()
        rows[0][0, 0] = [-0.2, 1.2]
        problems = validate_spec(two_state_game(rows))
        assert any("negative" in p and "kernel" in p for p in problems)

    def test_empty_action_set_names_state(self):
        kern = TransitionKernel(rows=((np.ones((0, 1, 1)),),))
        empty = np.zeros((0, 1))
        rewards = RewardTables(
            designer=((empty,),), agent1=((empty,),), agent2=((empty,),)
        )
        spec = GameSpec(
            horizon=1,
            states=(("lone",), ("lone",)),
            actions=((((), ("b",)),),),
            kernel=kern,
            rewards=rewards,
            initial=np.array([1.0]),
        )
        problems = validate_spec(spec)
        assert any("empty action set" in p and "'lone'" in p for p in problems)

    def test_bad_initial_distribution(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        spec = two_state_game(rows, initial=(1.2, -0.2))
        problems = validate_spec(spec)
        assert any("negative" in p and "initial" in p for p in problems)

    def test_unnormalized_initial(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        problems = validate_spec(two_state_game(rows, initial=(0.4, 0.4)))
        assert any("initial" in p and "expected 1" in p for p in problems)

    def test_nonfinite_reward_flagged(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        spec = two_state_game(rows)
        bad_r1 = [np.array([[np.inf], [0.0]]), np.zeros((1, 2))]
        spec = GameSpec.from_tables(
            horizon=2,
            states=["s0", "s1"],
            actions=LAYOUT_2,
            kernel=rows,
            rewards=(
                [np.zeros((2, 1)), np.zeros((1, 2))],
                bad_r1,
                [np.zeros((2, 1)), np.zeros((1, 2))],
            ),
            initial=(1.0, 0.0),
        )
        problems = validate_spec(spec)
        assert any("agent-1 reward" in p and "not finite" in p for p in problems)


class TestAccessors:
    def test_label_lookup_and_errors(self):
        spec = build_broadcast_game(BroadcastParams(horizon=1, buffer_cap=2))
        assert spec.n_states(1) == 9
        assert spec.state_index(1, "(2,1)") == 7
        assert spec.action_counts(1, 7) == (3, 2)
        assert spec.action_labels(1, 7, 1) == ("0", "1", "2")
        with pytest.raises(InputError):
            spec.state_index(1, "(5,5)")
        with pytest.raises(InputError):
            spec.action_labels(1, 7, 3)

    def test_tables_are_frozen(self):
        spec = build_broadcast_game(BroadcastParams(horizon=1, buffer_cap=1))
        with pytest.raises(ValueError):
            spec.kernel_at(1, 0)[0, 0, 0] = 0.5
        with pytest.raises(ValueError):
            spec.reward_at(0, 1, 0)[0, 0] = 9.9

    def test_horizon_must_be_positive(self):
        with pytest.raises(InputError):
            build_broadcast_game(BroadcastParams(horizon=0))


class TestReachableStates:
    def test_absorbing_chain_stays_put(self):
        rows = [np.zeros((2, 1, 2)), np.zeros((1, 2, 2))]
        rows[0][:, :, 0] = 1.0
        rows[1][:, :, 1] = 1.0
        spec = two_state_game(rows, initial=(1.0, 0.0))
        assert reachable_states(spec) == [(0,), (0,)]

    def test_full_support_initial_covers_everything(self):
        rows = [np.full((2, 1, 2), 0.5), np.full((1, 2, 2), 0.5)]
        spec = two_state_game(rows, initial=(0.5, 0.5))
        assert reachable_states(spec) == [(0, 1), (0, 1)]

    def test_broadcast_one_step_closure_from_empty(self):
        params = BroadcastParams(horizon=2, initial=point_initial(3, 0, 0))
        layers = reachable_states(build_broadcast_game(params))
        assert layers[0] == (0,)
        assert layers[1] == (0, 1, 4, 5)

    def test_monotone_in_initial_support(self):
        wide = build_broadcast_game(BroadcastParams(horizon=3, buffer_cap=2))
        narrow = build_broadcast_game(
            BroadcastParams(
                horizon=3, buffer_cap=2, initial=point_initial(2, 0, 0)
            )
        )
        for small, big in zip(reachable_states(narrow), reachable_states(wide)):
            assert set(small) <= set(big)
