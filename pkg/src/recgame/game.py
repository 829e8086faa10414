"""Tabular model of a finite-horizon stochastic game with two acting agents.

A game runs over decision times t = 1..T. Each time has a finite state set
(one extra layer at T+1 receives the final transition), each state has its
own finite action set per agent, and transitions/rewards are dense tables
indexed by integer state and action indices. Human-readable labels ride
along as side tables; all computation uses the indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InputError

# Mass bookkeeping below this size is treated as rounding noise.
PROB_TOL = 1e-12

LabelPair = tuple[tuple[str, ...], tuple[str, ...]]


def _frozen(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != tuple(shape):
        raise InputError(f"array shape {arr.shape} does not match expected {tuple(shape)}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TransitionKernel:
    """Next-state distributions, one (n1, n2, next_states) block per (t, state).

    ``rows[t - 1][x][u1, u2]`` is the distribution over states at t + 1 after
    joint action (u1, u2) in state x at time t. Blocks are read-only.
    """

    rows: tuple[tuple[np.ndarray, ...], ...]

    @property
    def horizon(self) -> int:
        return len(self.rows)

    def block(self, t: int, x: int) -> np.ndarray:
        return self.rows[t - 1][x]


@dataclass(frozen=True)
class RewardTables:
    """Stage rewards for the designer and both agents.

    Each field is indexed like the kernel: ``table[t - 1][x]`` is an
    (n1, n2) array over joint actions at that state.
    """

    designer: tuple[tuple[np.ndarray, ...], ...]
    agent1: tuple[tuple[np.ndarray, ...], ...]
    agent2: tuple[tuple[np.ndarray, ...], ...]

    def table(self, who: int) -> tuple[tuple[np.ndarray, ...], ...]:
        """0 selects the designer, 1 and 2 the agents."""
        if who == 0:
            return self.designer
        if who == 1:
            return self.agent1
        if who == 2:
            return self.agent2
        raise InputError(f"reward selector must be 0, 1, or 2, got {who!r}")


@dataclass(frozen=True)
class NoiseModel:
    """Functional dynamics: a finite noise draw plus a deterministic map.

    ``atom_probs[t - 1]`` is the distribution over noise atoms at time t and
    ``transition(t, x, u1, u2, atom)`` returns the next state index. The
    noise draw is independent of states and actions, so one atom drives all
    state/action pairs at a given time.
    """

    atom_probs: tuple[np.ndarray, ...]
    transition: Callable[[int, int, int, int, int], int]


def _as_label_tuple(labels: Sequence[str]) -> tuple[str, ...]:
    out = tuple(str(s) for s in labels)
    if not out:
        raise InputError("empty label list")
    return out


@dataclass(frozen=True)
class GameSpec:
    """Complete game description.

    states
        Label tuples for t = 1..T+1 (length horizon + 1).
    actions
        For t = 1..T and each state index, a pair of per-agent label tuples.
        An action's integer index is its position in that tuple.
    kernel, rewards
        Dense tables aligned with the state/action layout.
    initial
        Distribution over states at t = 1.

    Instances are immutable; build them with :meth:`from_tables` (shared
    layout repeated every period) or :meth:`from_time_varying`.
    """

    horizon: int
    states: tuple[tuple[str, ...], ...]
    actions: tuple[tuple[LabelPair, ...], ...]
    kernel: TransitionKernel
    rewards: RewardTables
    initial: np.ndarray

    def __post_init__(self):
        T = self.horizon
        if T < 1:
            raise InputError(f"horizon must be at least 1, got {T}")
        if len(self.states) != T + 1:
            raise InputError(f"need {T + 1} state layers for horizon {T}, got {len(self.states)}")
        if len(self.actions) != T:
            raise InputError(f"need {T} action layers for horizon {T}, got {len(self.actions)}")
        if len(self.kernel.rows) != T:
            raise InputError(f"need {T} kernel layers for horizon {T}, got {len(self.kernel.rows)}")
        for tbl in (self.rewards.designer, self.rewards.agent1, self.rewards.agent2):
            if len(tbl) != T:
                raise InputError(f"need {T} reward layers for horizon {T}, got {len(tbl)}")
        for t in range(1, T + 1):
            n_states = len(self.states[t - 1])
            for part, name in (
                (self.actions[t - 1], "actions"),
                (self.kernel.rows[t - 1], "kernel"),
                (self.rewards.designer[t - 1], "designer rewards"),
                (self.rewards.agent1[t - 1], "agent-1 rewards"),
                (self.rewards.agent2[t - 1], "agent-2 rewards"),
            ):
                if len(part) != n_states:
                    raise InputError(
                        f"{name} at t={t} cover {len(part)} states, expected {n_states}"
                    )
        if self.initial.shape != (len(self.states[0]),):
            raise InputError(
                f"initial distribution has shape {self.initial.shape}, "
                f"expected ({len(self.states[0])},)"
            )

    # -- constructors --------------------------------------------------

    @classmethod
    def from_tables(
        cls,
        *,
        horizon: int,
        states: Sequence[str],
        actions: Sequence[tuple[Sequence[str], Sequence[str]]],
        kernel: Sequence[np.ndarray],
        rewards: tuple[Sequence[np.ndarray], Sequence[np.ndarray], Sequence[np.ndarray]],
        initial: Sequence[float],
    ) -> "GameSpec":
        """Build a game whose layout repeats every period.

        ``states`` is one flat label list; ``actions``, ``kernel``, and the
        three ``rewards`` sequences give one entry per state, reused at every
        t. The kernel entries map into the same state set.
        """
        layer = _as_label_tuple(states)
        return cls.from_time_varying(
            horizon=horizon,
            states=[layer] * (horizon + 1),
            actions=[list(actions)] * horizon,
            kernel=[list(kernel)] * horizon,
            rewards=tuple([list(tbl)] * horizon for tbl in rewards),
            initial=initial,
        )

    @classmethod
    def from_time_varying(
        cls,
        *,
        horizon: int,
        states: Sequence[Sequence[str]],
        actions: Sequence[Sequence[tuple[Sequence[str], Sequence[str]]]],
        kernel: Sequence[Sequence[np.ndarray]],
        rewards: tuple[Sequence[Sequence[np.ndarray]], ...],
        initial: Sequence[float],
    ) -> "GameSpec":
        """Build a game with explicit per-time layers (states need T+1)."""
        state_layers = tuple(_as_label_tuple(layer) for layer in states)
        action_layers: list[tuple[LabelPair, ...]] = []
        for t_actions in actions:
            layer = []
            for pair in t_actions:
                a1, a2 = pair
                layer.append((_as_label_tuple(a1), _as_label_tuple(a2)))
            action_layers.append(tuple(layer))

        def freeze_layers(source, next_sizes=None):
            out = []
            for ti, per_state in enumerate(source):
                blocks = []
                for x, block in enumerate(per_state):
                    n1 = len(action_layers[ti][x][0])
                    n2 = len(action_layers[ti][x][1])
                    if next_sizes is None:
                        blocks.append(_frozen(block, (n1, n2)))
                    else:
                        blocks.append(_frozen(block, (n1, n2, next_sizes[ti])))
                out.append(tuple(blocks))
            return tuple(out)

        next_sizes = [len(state_layers[t]) for t in range(1, horizon + 1)]
        kern = TransitionKernel(rows=freeze_layers(kernel, next_sizes))
        r0, r1, r2 = rewards
        rew = RewardTables(
            designer=freeze_layers(r0),
            agent1=freeze_layers(r1),
            agent2=freeze_layers(r2),
        )
        return cls(
            horizon=horizon,
            states=state_layers,
            actions=tuple(action_layers),
            kernel=kern,
            rewards=rew,
            initial=_frozen(initial),
        )

    # -- accessors -----------------------------------------------------

    def n_states(self, t: int) -> int:
        """Number of states at time t (valid for t = 1..T+1)."""
        return len(self.states[t - 1])

    def state_labels(self, t: int) -> tuple[str, ...]:
        return self.states[t - 1]

    def state_index(self, t: int, label: str) -> int:
        try:
            return self.states[t - 1].index(label)
        except ValueError:
            raise InputError(f"unknown state {label!r} at t={t}") from None

    def action_counts(self, t: int, x: int) -> tuple[int, int]:
        a1, a2 = self.actions[t - 1][x]
        return len(a1), len(a2)

    def action_labels(self, t: int, x: int, agent: int) -> tuple[str, ...]:
        if agent not in (1, 2):
            raise InputError(f"agent must be 1 or 2, got {agent!r}")
        return self.actions[t - 1][x][agent - 1]

    def kernel_at(self, t: int, x: int) -> np.ndarray:
        return self.kernel.block(t, x)

    def reward_at(self, who: int, t: int, x: int) -> np.ndarray:
        return self.rewards.table(who)[t - 1][x]


def compile_kernel(
    noise: NoiseModel,
    states: Sequence[Sequence[str]],
    actions: Sequence[Sequence[tuple[Sequence[str], Sequence[str]]]],
) -> TransitionKernel:
    """Integrate functional dynamics into dense per-(t, state, action) rows.

    ``states`` must provide T+1 layers and ``actions`` T layers, in the same
    layout :class:`GameSpec` uses. Atoms mapping to the same next state merge
    their probability. A transition outside the declared next-state layer is
    a hard error naming the offending (t, x, u1, u2, atom).
    """
    T = len(noise.atom_probs)
    if len(states) != T + 1:
        raise InputError(f"need {T + 1} state layers for {T} noise layers, got {len(states)}")
    if len(actions) != T:
        raise InputError(f"need {T} action layers for {T} noise layers, got {len(actions)}")
    layers = []
    for t in range(1, T + 1):
        probs = np.asarray(noise.atom_probs[t - 1], dtype=float)
        n_next = len(states[t])
        blocks = []
        for x in range(len(states[t - 1])):
            n1 = len(actions[t - 1][x][0])
            n2 = len(actions[t - 1][x][1])
            block = np.zeros((n1, n2, n_next))
            for u1 in range(n1):
                for u2 in range(n2):
                    for atom, q in enumerate(probs):
                        nxt = noise.transition(t, x, u1, u2, atom)
                        if not 0 <= nxt < n_next:
                            raise InputError(
                                f"transition at t={t}, x={x}, u=({u1},{u2}), atom={atom} "
                                f"returned state {nxt}, outside 0..{n_next - 1}"
                            )
                        block[u1, u2, nxt] += q
            block.flags.writeable = False
            blocks.append(block)
        layers.append(tuple(blocks))
    return TransitionKernel(rows=tuple(layers))


def validate_spec(spec: GameSpec) -> list[str]:
    """Check the numeric invariants; return one diagnostic per violation.

    Structural shape problems already fail at construction, so this covers
    the probabilistic and finiteness contracts: kernel rows are
    distributions, rewards are finite, the initial distribution normalizes,
    and every state offers at least one action per agent (the solver visits
    every state, reachable or not).
    """
    problems: list[str] = []
    T = spec.horizon
    init = spec.initial
    if np.any(init < -PROB_TOL):
        problems.append("initial distribution has a negative entry")
    if abs(float(init.sum()) - 1.0) > 1e-9:
        problems.append(f"initial distribution sums to {float(init.sum())!r}, expected 1")
    for t in range(1, T + 1):
        for x, label in enumerate(spec.state_labels(t)):
            n1, n2 = spec.action_counts(t, x)
            if n1 < 1 or n2 < 1:
                problems.append(f"state {label!r} at t={t} has an empty action set")
                continue
            block = spec.kernel_at(t, x)
            if np.any(block < -PROB_TOL):
                problems.append(f"kernel at t={t}, state {label!r} has a negative entry")
            sums = block.sum(axis=2)
            bad = np.argwhere(np.abs(sums - 1.0) > 1e-9)
            for u1, u2 in bad:
                l1 = spec.action_labels(t, x, 1)[u1]
                l2 = spec.action_labels(t, x, 2)[u2]
                problems.append(
                    f"kernel row at t={t}, state {label!r}, actions ({l1},{l2}) "
                    f"sums to {float(sums[u1, u2])!r}"
                )
            for who, name in ((0, "designer"), (1, "agent-1"), (2, "agent-2")):
                if not np.all(np.isfinite(spec.reward_at(who, t, x))):
                    problems.append(f"{name} reward at t={t}, state {label!r} is not finite")
    return problems


def reachable_states(spec: GameSpec) -> list[tuple[int, ...]]:
    """Forward closure of positive-probability states, one tuple per t = 1..T.

    A state is reachable at t+1 if some reachable state at t puts positive
    kernel mass on it under some legal joint action; any recommendation
    scheme can realize exactly these states.
    """
    current = {int(x) for x in np.flatnonzero(spec.initial > 0.0)}
    layers = [tuple(sorted(current))]
    for t in range(1, spec.horizon):
        nxt: set[int] = set()
        for x in current:
            block = spec.kernel_at(t, x)
            nxt.update(int(i) for i in np.flatnonzero(block.sum(axis=(0, 1)) > 0.0))
        current = nxt
        layers.append(tuple(sorted(current)))
    return layers
