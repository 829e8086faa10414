"""Dictation baselines.

When agents simply execute whatever the designer orders, obedience
constraints drop away. The unconstrained baseline is plain backward
induction on the designer reward; the constrained baseline solves one
occupation-measure LP that maximizes the designer total subject to floors
on each agent's expected total, then conditions the measure to recover a
per-state (possibly mixed) action choice.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .designer import MessagingStrategy
from .errors import InputError, SolverFault
from .game import GameSpec, validate_spec
from .lp import LinearProgram, Status, solve_lp

OCCUPATION_FLOOR = 1e-12


@dataclass(frozen=True)
class ActionStrategy:
    """Joint action choice per (t, state); pure for the unconstrained
    baseline, possibly mixed when recovered from an occupation measure."""

    horizon: int
    table: tuple[tuple[np.ndarray, ...], ...]
    kind: str

    def dist(self, t: int, x: int) -> np.ndarray:
        if not 1 <= t <= self.horizon:
            raise InputError(f"time {t} outside 1..{self.horizon}")
        return self.table[t - 1][x]

    def to_messaging(self) -> MessagingStrategy:
        """View the dictated actions as recommendations, e.g. to run the
        obedience checks or the forward evaluator against them."""
        return MessagingStrategy(
            horizon=self.horizon,
            table=self.table,
            metadata={"kind": self.kind},
        )


@dataclass(frozen=True)
class OccupationMeasure:
    """Joint state-action probabilities per time; each layer sums to one."""

    horizon: int
    table: tuple[tuple[np.ndarray, ...], ...]

    def layer_mass(self, t: int) -> float:
        return float(sum(block.sum() for block in self.table[t - 1]))


@dataclass(frozen=True)
class CmdpResult:
    status: Status
    occupation: OccupationMeasure | None
    strategy: ActionStrategy | None
    designer_total: float | None
    agent1_total: float | None
    agent2_total: float | None


def solve_unconstrained(
    spec: GameSpec,
) -> tuple[ActionStrategy, list[np.ndarray], float]:
    """Backward induction maximizing the designer total alone.

    Ties at a stage resolve to the smallest joint action index in
    row-major order, so results are reproducible. Returns the pure
    strategy, the per-(t, state) value tables (terminal layer zero), and
    the expected total from the initial distribution.
    """
    problems = validate_spec(spec)
    if problems:
        raise InputError(
            f"game failed validation with {len(problems)} problem(s): " + "; ".join(problems)
        )
    T = spec.horizon
    values: list[np.ndarray | None] = [None] * (T + 1)
    values[T] = np.zeros(spec.n_states(T + 1))
    dists: list[list[np.ndarray]] = []
    for t in range(T, 0, -1):
        layer = np.zeros(spec.n_states(t))
        tables: list[np.ndarray] = []
        for x in range(spec.n_states(t)):
            togo = spec.reward_at(0, t, x) + spec.kernel_at(t, x) @ values[t]
            flat = int(np.argmax(togo))
            layer[x] = float(togo.ravel()[flat])
            choice = np.zeros_like(togo)
            choice.ravel()[flat] = 1.0
            choice.flags.writeable = False
            tables.append(choice)
        values[t - 1] = layer
        dists.insert(0, tables)
    strategy = ActionStrategy(
        horizon=T, table=tuple(tuple(row) for row in dists), kind="ud"
    )
    j0 = float(spec.initial @ values[0])
    return strategy, values, j0  # type: ignore[return-value]


def solve_cmdp(spec: GameSpec, eps1: float, eps2: float) -> CmdpResult:
    """Maximize the designer total subject to agent-total floors.

    One LP over per-time state-action occupation probabilities: layer
    one matches the initial distribution, later layers conserve flow
    through the kernel, and each agent's expected total must reach its
    floor. Infeasibility (floors outside the achievable set) is reported
    in the result status, not raised.
    """
    problems = validate_spec(spec)
    if problems:
        raise InputError(
            f"game failed validation with {len(problems)} problem(s): " + "; ".join(problems)
        )
    if not (np.isfinite(eps1) and np.isfinite(eps2)):
        raise InputError("agent floors must be finite")
    T = spec.horizon

    offsets: dict[tuple[int, int], int] = {}
    ncols = 0
    for t in range(1, T + 1):
        for x in range(spec.n_states(t)):
            n1, n2 = spec.action_counts(t, x)
            offsets[(t, x)] = ncols
            ncols += n1 * n2

    def fill(vec: np.ndarray, who: int) -> None:
        for t in range(1, T + 1):
            for x in range(spec.n_states(t)):
                start = offsets[(t, x)]
                block = spec.reward_at(who, t, x).ravel()
                vec[start : start + block.size] = block

    objective = np.zeros(ncols)
    r1_vec = np.zeros(ncols)
    r2_vec = np.zeros(ncols)
    fill(objective, 0)
    fill(r1_vec, 1)
    fill(r2_vec, 2)

    n_eq = sum(spec.n_states(t) for t in range(1, T + 1))
    a_eq = np.zeros((n_eq, ncols))
    b_eq = np.zeros(n_eq)
    row = 0
    for x in range(spec.n_states(1)):
        start = offsets[(1, x)]
        n1, n2 = spec.action_counts(1, x)
        a_eq[row, start : start + n1 * n2] = 1.0
        b_eq[row] = spec.initial[x]
        row += 1
    for t in range(2, T + 1):
        for x_next in range(spec.n_states(t)):
            start = offsets[(t, x_next)]
            n1, n2 = spec.action_counts(t, x_next)
            a_eq[row, start : start + n1 * n2] = 1.0
            for x in range(spec.n_states(t - 1)):
                kernel = spec.kernel_at(t - 1, x)
                prev = offsets[(t - 1, x)]
                a_eq[row, prev : prev + kernel.shape[0] * kernel.shape[1]] -= kernel[
                    :, :, x_next
                ].ravel()
            row += 1

    a_ub = np.vstack([-r1_vec, -r2_vec])
    b_ub = np.array([-eps1, -eps2])
    lp = LinearProgram.build(objective, eq=(a_eq, b_eq), ub=(a_ub, b_ub))
    sol = solve_lp(lp)
    if sol.status is Status.INFEASIBLE:
        return CmdpResult(Status.INFEASIBLE, None, None, None, None, None)
    if sol.status is not Status.OPTIMAL:
        raise SolverFault(f"occupation LP returned {sol.status.value}")

    rho = np.maximum(np.array(sol.x), 0.0)
    occ_layers: list[tuple[np.ndarray, ...]] = []
    pol_layers: list[tuple[np.ndarray, ...]] = []
    for t in range(1, T + 1):
        occ_row = []
        pol_row = []
        for x in range(spec.n_states(t)):
            n1, n2 = spec.action_counts(t, x)
            start = offsets[(t, x)]
            block = rho[start : start + n1 * n2].reshape(n1, n2).copy()
            mass = float(block.sum())
            if mass > OCCUPATION_FLOOR:
                policy = block / mass
            else:
                # Never-visited state: any choice works; pick uniform.
                policy = np.full((n1, n2), 1.0 / (n1 * n2))
            block.flags.writeable = False
            policy.flags.writeable = False
            occ_row.append(block)
            pol_row.append(policy)
        occ_layers.append(tuple(occ_row))
        pol_layers.append(tuple(pol_row))

    return CmdpResult(
        status=Status.OPTIMAL,
        occupation=OccupationMeasure(horizon=T, table=tuple(occ_layers)),
        strategy=ActionStrategy(horizon=T, table=tuple(pol_layers), kind="cmdp"),
        designer_total=float(objective @ rho),
        agent1_total=float(r1_vec @ rho),
        agent2_total=float(r2_vec @ rho),
    )
