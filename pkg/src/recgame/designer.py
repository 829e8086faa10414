"""Backward-induction computation of an optimal recommendation strategy.

At each time and state the designer picks a joint distribution over action
recommendations. The stage problem is a small LP: maximize the designer's
expected reward-to-go subject to obedience, i.e. no agent can gain by
swapping a recommended action for another while the opponent stays
obedient. Continuation values are substituted into the stage LP as
constants, so the only variables are the recommendation probabilities.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import InputError, SolverFault
from .game import GameSpec, validate_spec, reachable_states
from .lp import LinearProgram, Status, solve_lp

SUPPORT_THRESHOLD = 1e-9


class StageLpFault(SolverFault):
    """A stage LP failed to come back Optimal (it always should)."""

    def __init__(self, t: int, x: int, status: Status, dump: str):
        super().__init__(f"stage LP at t={t}, state index {x} returned {status.value}\n{dump}")
        self.t = t
        self.x = x
        self.status = status
        self.dump = dump


@dataclass(frozen=True)
class ObedienceRow:
    """One inequality: ``agent`` told ``recommended`` must not prefer ``deviation``."""

    agent: int
    recommended: int
    deviation: int


@dataclass(frozen=True)
class StageLpLayout:
    """Column/row map for one stage LP.

    Columns enumerate joint recommendations row-major: column
    ``m1 * n2 + m2``. ``rows`` aligns one descriptor with each inequality
    row of the program, in order.
    """

    t: int
    x: int
    n1: int
    n2: int
    rows: tuple[ObedienceRow, ...]

    def column(self, m1: int, m2: int) -> int:
        return m1 * self.n2 + m2


@dataclass(frozen=True)
class MessagingStrategy:
    """Joint recommendation distributions, one (n1, n2) table per (t, state).

    Entries may be None for states a restricted solve skipped; every
    defined table sums to one. ``metadata`` records how the strategy was
    produced (solver tolerances, pivot counts) and is advisory only.
    """

    horizon: int
    table: tuple[tuple[np.ndarray | None, ...], ...]
    metadata: dict[str, Any] = field(default_factory=dict)

    def dist(self, t: int, x: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise InputError(f"time {t} outside 1..{self.horizon}")
        layer = self.table[t - 1]
        if not 0 <= x < len(layer):
            raise InputError(f"state index {x} outside 0..{len(layer) - 1} at t={t}")
        got = layer[x]
        if got is None:
            raise InputError(f"strategy has no distribution at t={t}, state index {x}")
        return got


@dataclass(frozen=True)
class ValueTables:
    """Designer and agent values per (t, state), t = 1..T+1 (last layer 0)."""

    designer: tuple[np.ndarray, ...]
    agent1: tuple[np.ndarray, ...]
    agent2: tuple[np.ndarray, ...]

    def agent(self, i: int) -> tuple[np.ndarray, ...]:
        if i == 1:
            return self.agent1
        if i == 2:
            return self.agent2
        raise InputError(f"agent must be 1 or 2, got {i!r}")


def stage_payoffs(
    spec: GameSpec,
    t: int,
    x: int,
    w1_next: np.ndarray,
    w2_next: np.ndarray,
    v_next: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Reward-to-go per joint action: stage reward plus expected continuation.

    Returns (designer, agent1, agent2) tables of shape (n1, n2).
    """
    kernel = spec.kernel_at(t, x)
    ev = spec.reward_at(0, t, x) + kernel @ v_next
    ew1 = spec.reward_at(1, t, x) + kernel @ w1_next
    ew2 = spec.reward_at(2, t, x) + kernel @ w2_next
    return ev, ew1, ew2


def build_stage_lp(
    t: int,
    x: int,
    w1_next: np.ndarray,
    w2_next: np.ndarray,
    v_next: np.ndarray,
    spec: GameSpec,
) -> tuple[LinearProgram, StageLpLayout]:
    """Assemble the stage LP at (t, x) given next-period value tables.

    Variables are the joint recommendation probabilities. Each obedience
    inequality says the recommended action's conditional reward-to-go
    weakly beats one fixed deviation; rewritten as a <= 0 row.
    """
    n1, n2 = spec.action_counts(t, x)
    ev, ew1, ew2 = stage_payoffs(spec, t, x, w1_next, w2_next, v_next)
    n_cols = n1 * n2
    rows: list[ObedienceRow] = []
    mat: list[np.ndarray] = []
    for m1 in range(n1):
        for u in range(n1):
            if u == m1:
                continue
            row = np.zeros((n1, n2))
            row[m1, :] = ew1[u, :] - ew1[m1, :]
            mat.append(row.ravel())
            rows.append(ObedienceRow(agent=1, recommended=m1, deviation=u))
    for m2 in range(n2):
        for u in range(n2):
            if u == m2:
                continue
            row = np.zeros((n1, n2))
            row[:, m2] = ew2[:, u] - ew2[:, m2]
            mat.append(row.ravel())
            rows.append(ObedienceRow(agent=2, recommended=m2, deviation=u))
    ub = (np.array(mat).reshape(len(mat), n_cols), np.zeros(len(mat))) if mat else None
    lp = LinearProgram.build(
        ev.ravel(),
        eq=(np.ones((1, n_cols)), np.ones(1)),
        ub=ub,
    )
    layout = StageLpLayout(t=t, x=x, n1=n1, n2=n2, rows=tuple(rows))
    return lp, layout


def solve_designer(
    spec: GameSpec,
    *,
    reachable_only: bool = False,
    threads: int = 1,
    support_threshold: float = SUPPORT_THRESHOLD,
    entering: str = "bland",
) -> tuple[MessagingStrategy, ValueTables]:
    """Solve every stage LP backward from the horizon.

    All states are solved by default so the result is well-defined
    everywhere; ``reachable_only`` restricts work to the forward-reachable
    sets and leaves other entries undefined. Stage results below
    ``support_threshold`` are truncated and the distribution renormalized
    before values are recorded, so the stored tables and stored strategy
    are exactly consistent.

    Raises StageLpFault if any stage LP is not Optimal (with obedience
    always satisfiable by some distribution, that indicates a broken
    model or solver, not a property of the game).
    """
    problems = validate_spec(spec)
    if problems:
        raise InputError(
            f"game failed validation with {len(problems)} problem(s): " + "; ".join(problems)
        )
    T = spec.horizon
    v_tables: list[np.ndarray | None] = [None] * (T + 1)
    w1_tables: list[np.ndarray | None] = [None] * (T + 1)
    w2_tables: list[np.ndarray | None] = [None] * (T + 1)
    for tables in (v_tables, w1_tables, w2_tables):
        tables[T] = np.zeros(spec.n_states(T + 1))
    dists: list[list[np.ndarray | None]] = [
        [None] * spec.n_states(t) for t in range(1, T + 1)
    ]
    reach = reachable_states(spec) if reachable_only else None
    total_pivots = 0
    stage_count = 0

    for t in range(T, 0, -1):
        n_states = spec.n_states(t)
        v_t = np.zeros(n_states)
        w1_t = np.zeros(n_states)
        w2_t = np.zeros(n_states)
        xs = list(reach[t - 1]) if reach is not None else list(range(n_states))

        def solve_one(x: int):
            lp, layout = build_stage_lp(t, x, w1_tables[t], w2_tables[t], v_tables[t], spec)
            return x, lp, layout, solve_lp(lp, entering=entering)

        if threads > 1 and len(xs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(solve_one, xs))
        else:
            results = [solve_one(x) for x in xs]

        for x, lp, layout, sol in results:
            if sol.status is not Status.OPTIMAL:
                raise StageLpFault(t, x, sol.status, lp.format_dump())
            total_pivots += sol.iterations
            stage_count += 1
            g = np.array(sol.x).reshape(layout.n1, layout.n2)
            g[g < support_threshold] = 0.0
            g /= g.sum()
            ev, ew1, ew2 = stage_payoffs(spec, t, x, w1_tables[t], w2_tables[t], v_tables[t])
            v_t[x] = float((g * ev).sum())
            w1_t[x] = float((g * ew1).sum())
            w2_t[x] = float((g * ew2).sum())
            g.flags.writeable = False
            dists[t - 1][x] = g
        v_tables[t - 1] = v_t
        w1_tables[t - 1] = w1_t
        w2_tables[t - 1] = w2_t

    strategy = MessagingStrategy(
        horizon=T,
        table=tuple(tuple(layer) for layer in dists),
        metadata={
            "support_threshold": support_threshold,
            "stage_lps_solved": stage_count,
            "total_pivots": total_pivots,
            "reachable_only": reachable_only,
        },
    )
    values = ValueTables(
        designer=tuple(v_tables),
        agent1=tuple(w1_tables),
        agent2=tuple(w2_tables),
    )
    return strategy, values


def strategy_marginal(strategy: MessagingStrategy, t: int, x: int, agent: int) -> np.ndarray:
    """Marginal recommendation distribution one agent sees at (t, x)."""
    dist = strategy.dist(t, x)
    if agent == 1:
        return dist.sum(axis=1)
    if agent == 2:
        return dist.sum(axis=0)
    raise InputError(f"agent must be 1 or 2, got {agent!r}")
