"""Strategy evaluation and sequential-rationality verification.

Three independent routes check whether obedient play is individually
optimal under a recommendation strategy:

* ``check_obedience`` evaluates the linear obedience inequalities directly.
* ``best_response`` recomputes each agent's optimal deviation play by
  backward induction over (time, state, received recommendation) nodes
  using conditional beliefs about the opponent's recommendation.
* ``history_expanded_optimum`` re-solves tiny games on the full history
  tree, where recommendations may condition on everything ever seen, and
  returns the designer optimum for comparison with the compact solver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .designer import MessagingStrategy, SUPPORT_THRESHOLD
from .game import GameSpec, validate_spec
from .lp import LinearProgram, Status, solve_lp

SR_TOL = 1e-6


class StrategyCoverageError(InputError):
    """The strategy has no distribution at a state that is actually reached."""

    def __init__(self, t: int, x: int):
        super().__init__(f"strategy undefined at reached node t={t}, state index {x}")
        self.t = t
        self.x = x


class InstanceTooLargeError(InputError):
    """The history tree would exceed the configured node budget."""


@dataclass(frozen=True)
class EvalReport:
    """Expected totals under obedient play, plus the state distribution path."""

    designer_total: float
    agent1_total: float
    agent2_total: float
    trace: tuple[np.ndarray, ...]

    def totals(self) -> tuple[float, float, float]:
        return self.designer_total, self.agent1_total, self.agent2_total


@dataclass(frozen=True)
class SrViolation:
    agent: int
    t: int
    state: str
    recommended: str
    deviation: str
    gap: float


@dataclass(frozen=True)
class SrReport:
    """Outcome of the obedience-inequality check.

    ``max_gap`` is the largest deviation advantage found anywhere
    (recommendation weighted by its probability); a strategy passes
    exactly when no gap exceeds the tolerance, so an empty violation
    list and ``passed`` agree by construction.
    """

    tolerance: float
    max_gap: float
    violations: tuple[SrViolation, ...]

    @property
    def passed(self) -> bool:
        return not self.violations


@dataclass(frozen=True)
class ConditionalBelief:
    """What one agent believes about the other's recommendation.

    Conditioning on being at (t, x) and receiving ``message``, the
    opponent's recommendation is distributed as ``opponent`` (the joint
    table's slice renormalized by the message marginal). Transition noise
    is independent of the recommendations, so its contribution enters
    through the kernel rows rather than this table.
    """

    t: int
    x: int
    agent: int
    message: int
    opponent: np.ndarray


@dataclass(frozen=True)
class BestResponseReport:
    """Best deviating play for one agent against an obedient opponent.

    ``values[t - 1][x]`` is the agent's optimal expected reward-to-go when
    free to deviate from t on (terminal layer zero). ``policy[t - 1][x]``
    maps each received recommendation to the best action (-1 where the
    recommendation never occurs). ``max_value_gap`` is the worst excess of
    deviation value over obedient value; obedience is sequentially
    rational when it is within tolerance. ``oneshot_max_gap`` restates the
    single-swap advantage through beliefs and matches the inequality
    route's max gap.
    """

    agent: int
    values: tuple[np.ndarray, ...]
    policy: tuple[tuple[np.ndarray | None, ...], ...]
    max_value_gap: float
    oneshot_max_gap: float
    oneshot_worst: tuple[int, str, str] | None

    def passes(self, tol: float = SR_TOL) -> bool:
        return self.max_value_gap <= tol


def evaluate(spec: GameSpec, strategy: MessagingStrategy) -> EvalReport:
    """Push the initial distribution forward under obedient play.

    Returns expected totals for the designer and both agents along with
    the per-time state distributions. Raises StrategyCoverageError if a
    positively reached state has no distribution.
    """
    if strategy.horizon != spec.horizon:
        raise InputError(
            f"strategy horizon {strategy.horizon} does not match game horizon {spec.horizon}"
        )
    totals = np.zeros(3)
    dist = np.array(spec.initial)
    trace = []
    for t in range(1, spec.horizon + 1):
        snap = dist.copy()
        snap.flags.writeable = False
        trace.append(snap)
        nxt = np.zeros(spec.n_states(t + 1))
        for x in np.flatnonzero(dist > 0.0):
            x = int(x)
            g = strategy.table[t - 1][x]
            if g is None:
                raise StrategyCoverageError(t, x)
            for who in range(3):
                totals[who] += dist[x] * float((g * spec.reward_at(who, t, x)).sum())
            nxt += dist[x] * np.einsum("ij,ijk->k", g, spec.kernel_at(t, x))
        dist = nxt
    return EvalReport(
        designer_total=float(totals[0]),
        agent1_total=float(totals[1]),
        agent2_total=float(totals[2]),
        trace=tuple(trace),
    )


def _values_backward(
    spec: GameSpec, strategy: MessagingStrategy, who: int
) -> list[np.ndarray]:
    tables: list[np.ndarray | None] = [None] * (spec.horizon + 1)
    tables[spec.horizon] = np.zeros(spec.n_states(spec.horizon + 1))
    for t in range(spec.horizon, 0, -1):
        layer = np.zeros(spec.n_states(t))
        for x in range(spec.n_states(t)):
            g = strategy.table[t - 1][x]
            if g is None:
                continue
            togo = spec.reward_at(who, t, x) + spec.kernel_at(t, x) @ tables[t]
            layer[x] = float((g * togo).sum())
        tables[t - 1] = layer
    return tables  # type: ignore[return-value]


def agent_values(
    spec: GameSpec, strategy: MessagingStrategy
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Per-(t, state) expected reward-to-go for each agent under obedience.

    States the strategy leaves undefined keep value zero; the terminal
    layer is identically zero.
    """
    return _values_backward(spec, strategy, 1), _values_backward(spec, strategy, 2)


def designer_values(spec: GameSpec, strategy: MessagingStrategy) -> list[np.ndarray]:
    """Designer analogue of :func:`agent_values`."""
    return _values_backward(spec, strategy, 0)


def check_obedience(
    spec: GameSpec,
    strategy: MessagingStrategy,
    tol: float = SR_TOL,
    *,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> SrReport:
    """Test every obedience inequality against the strategy's own values.

    For each time, state, agent, recommendation with marginal above the
    support threshold, and deviation, the recommended action's expected
    reward-to-go (joint-probability weighted) must weakly beat the
    deviation's. Gaps are reported as deviation minus obedient.
    """
    w1, w2 = agent_values(spec, strategy)
    max_gap = 0.0
    violations: list[SrViolation] = []
    for t in range(1, spec.horizon + 1):
        for x in range(spec.n_states(t)):
            g = strategy.table[t - 1][x]
            if g is None:
                continue
            togo1 = spec.reward_at(1, t, x) + spec.kernel_at(t, x) @ w1[t]
            togo2 = spec.reward_at(2, t, x) + spec.kernel_at(t, x) @ w2[t]
            labels1 = spec.action_labels(t, x, 1)
            labels2 = spec.action_labels(t, x, 2)
            state = spec.state_labels(t)[x]
            for m1 in range(g.shape[0]):
                if g[m1, :].sum() <= support_threshold:
                    continue
                obey = float(g[m1, :] @ togo1[m1, :])
                for u in range(g.shape[0]):
                    gap = float(g[m1, :] @ togo1[u, :]) - obey
                    max_gap = max(max_gap, gap)
                    if u != m1 and gap > tol:
                        violations.append(
                            SrViolation(1, t, state, labels1[m1], labels1[u], gap)
                        )
            for m2 in range(g.shape[1]):
                if g[:, m2].sum() <= support_threshold:
                    continue
                obey = float(g[:, m2] @ togo2[:, m2])
                for u in range(g.shape[1]):
                    gap = float(g[:, m2] @ togo2[:, u]) - obey
                    max_gap = max(max_gap, gap)
                    if u != m2 and gap > tol:
                        violations.append(
                            SrViolation(2, t, state, labels2[m2], labels2[u], gap)
                        )
    violations.sort(key=lambda v: -v.gap)
    return SrReport(tolerance=tol, max_gap=max_gap, violations=tuple(violations))


def conditional_belief(
    spec: GameSpec,
    strategy: MessagingStrategy,
    t: int,
    x: int,
    agent: int,
    message: int,
    *,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> ConditionalBelief:
    """Build the opponent-recommendation belief at one information node."""
    g = strategy.dist(t, x)
    if agent == 1:
        slice_ = g[message, :]
    elif agent == 2:
        slice_ = g[:, message]
    else:
        raise InputError(f"agent must be 1 or 2, got {agent!r}")
    marginal = float(slice_.sum())
    if marginal <= support_threshold:
        raise InputError(
            f"recommendation {message} has no support at t={t}, state index {x} "
            f"(marginal {marginal!r}); the information node does not occur"
        )
    return ConditionalBelief(t=t, x=x, agent=agent, message=message, opponent=slice_ / marginal)


def best_response(
    spec: GameSpec,
    strategy: MessagingStrategy,
    agent: int,
    *,
    support_threshold: float = SUPPORT_THRESHOLD,
) -> BestResponseReport:
    """Backward induction over the agent's information nodes.

    At each (t, state, received recommendation) the agent holds the
    conditional belief about the opponent's recommendation, the opponent
    obeys, and the agent picks the action maximizing expected reward plus
    its own continuation value (ties to the smallest action index). The
    result is compared against obedient values node by node.
    """
    if agent not in (1, 2):
        raise InputError(f"agent must be 1 or 2, got {agent!r}")
    if strategy.horizon != spec.horizon:
        raise InputError(
            f"strategy horizon {strategy.horizon} does not match game horizon {spec.horizon}"
        )
    w_self = _values_backward(spec, strategy, agent)
    T = spec.horizon
    dev: list[np.ndarray | None] = [None] * (T + 1)
    dev[T] = np.zeros(spec.n_states(T + 1))
    policy: list[list[np.ndarray | None]] = [
        [None] * spec.n_states(t) for t in range(1, T + 1)
    ]
    oneshot_max = 0.0
    oneshot_worst: tuple[int, str, str] | None = None
    max_value_gap = 0.0

    for t in range(T, 0, -1):
        layer = np.zeros(spec.n_states(t))
        for x in range(spec.n_states(t)):
            g = strategy.table[t - 1][x]
            if g is None:
                continue
            kernel = spec.kernel_at(t, x)
            reward = spec.reward_at(agent, t, x)
            togo_dev = reward + kernel @ dev[t]
            togo_obey = reward + kernel @ w_self[t]
            n_own = g.shape[0] if agent == 1 else g.shape[1]
            choices = np.full(n_own, -1, dtype=int)
            for m in range(n_own):
                try:
                    belief = conditional_belief(
                        spec, strategy, t, x, agent, m, support_threshold=support_threshold
                    )
                except InputError:
                    continue
                marginal = float(
                    (g[m, :] if agent == 1 else g[:, m]).sum()
                )
                if agent == 1:
                    action_dev = togo_dev @ belief.opponent
                    action_obey = togo_obey @ belief.opponent
                else:
                    action_dev = belief.opponent @ togo_dev
                    action_obey = belief.opponent @ togo_obey
                best = int(np.argmax(action_dev))
                choices[m] = best
                layer[x] += marginal * float(action_dev[best])
                gap = marginal * float(action_obey.max() - action_obey[m])
                if gap > oneshot_max:
                    oneshot_max = gap
                    own_labels = spec.action_labels(t, x, agent)
                    oneshot_worst = (t, spec.state_labels(t)[x], own_labels[m])
            policy[t - 1][x] = choices
            max_value_gap = max(max_value_gap, float(layer[x] - w_self[t - 1][x]))
        dev[t - 1] = layer

    for arr in dev:
        arr.flags.writeable = False
    return BestResponseReport(
        agent=agent,
        values=tuple(dev),  # type: ignore[arg-type]
        policy=tuple(tuple(row) for row in policy),
        max_value_gap=max_value_gap,
        oneshot_max_gap=oneshot_max,
        oneshot_worst=oneshot_worst,
    )


def _expanded_counts(spec: GameSpec, max_nodes: int) -> list[int]:
    """Number of histories per time; refuse before enumerating a large tree."""
    counts = [1]
    nodes = spec.n_states(1)
    for t in range(1, spec.horizon):
        branch = 0
        for x in range(spec.n_states(t)):
            n1, n2 = spec.action_counts(t, x)
            branch += (n1 * n2) ** 2
        counts.append(counts[-1] * branch)
        nodes += counts[-1] * spec.n_states(t + 1)
        if nodes > max_nodes:
            raise InstanceTooLargeError(
                f"history tree needs more than {max_nodes} stage solves; refusing"
            )
    if nodes > max_nodes:
        raise InstanceTooLargeError(
            f"history tree needs more than {max_nodes} stage solves; refusing"
        )
    return counts


def history_expanded_optimum(spec: GameSpec, *, max_nodes: int = 10_000) -> float:
    """Designer optimum when recommendations may condition on full histories.

    Expands the state to (state, every past state/action/recommendation),
    solves one stage LP per realization backward in time, and returns the
    expected first-period value. Intended for tiny instances; anything
    whose history tree exceeds ``max_nodes`` stage solves is refused
    outright rather than truncated.
    """
    problems = validate_spec(spec)
    if problems:
        raise InputError(
            f"game failed validation with {len(problems)} problem(s): " + "; ".join(problems)
        )
    _expanded_counts(spec, max_nodes)
    T = spec.horizon

    histories: list[list[tuple]] = [[()]]
    for t in range(1, T):
        layer = []
        for h in histories[t - 1]:
            for x in range(spec.n_states(t)):
                n1, n2 = spec.action_counts(t, x)
                for u1 in range(n1):
                    for u2 in range(n2):
                        for m1 in range(n1):
                            for m2 in range(n2):
                                layer.append(h + ((x, u1, u2, m1, m2),))
        histories.append(layer)

    values: dict[tuple[int, tuple, int], tuple[float, float, float]] = {}

    def continuation(t: int, key: tuple, x_next: int) -> tuple[float, float, float]:
        if t == T:
            return 0.0, 0.0, 0.0
        return values[(t + 1, key, x_next)]

    for t in range(T, 0, -1):
        for h in histories[t - 1]:
            for x in range(spec.n_states(t)):
                n1, n2 = spec.action_counts(t, x)
                kernel = spec.kernel_at(t, x)
                r0 = spec.reward_at(0, t, x)
                r1 = spec.reward_at(1, t, x)
                r2 = spec.reward_at(2, t, x)
                ev = np.array(r0)
                ew1 = np.array(r1)
                ew2 = np.array(r2)
                if t < T:
                    for a1 in range(n1):
                        for a2 in range(n2):
                            key = h + ((x, a1, a2, a1, a2),)
                            for x_next in np.flatnonzero(kernel[a1, a2] > 0.0):
                                p = kernel[a1, a2, x_next]
                                nv, nw1, nw2 = continuation(t, key, int(x_next))
                                ev[a1, a2] += p * nv
                                ew1[a1, a2] += p * nw1
                                ew2[a1, a2] += p * nw2
                rows = []
                mat = []
                for m1 in range(n1):
                    for u in range(n1):
                        if u == m1:
                            continue
                        row = np.zeros((n1, n2))
                        for a2 in range(n2):
                            deviated = float(r1[u, a2])
                            if t < T:
                                key = h + ((x, u, a2, m1, a2),)
                                for x_next in np.flatnonzero(kernel[u, a2] > 0.0):
                                    p = kernel[u, a2, x_next]
                                    deviated += p * continuation(t, key, int(x_next))[1]
                            row[m1, a2] = deviated - ew1[m1, a2]
                        mat.append(row.ravel())
                for m2 in range(n2):
                    for u in range(n2):
                        if u == m2:
                            continue
                        row = np.zeros((n1, n2))
                        for a1 in range(n1):
                            deviated = float(r2[a1, u])
                            if t < T:
                                key = h + ((x, a1, u, a1, m2),)
                                for x_next in np.flatnonzero(kernel[a1, u] > 0.0):
                                    p = kernel[a1, u, x_next]
                                    deviated += p * continuation(t, key, int(x_next))[2]
                            row[a1, m2] = deviated - ew2[a1, m2]
                        mat.append(row.ravel())
                ub = (np.array(mat), np.zeros(len(mat))) if mat else None
                lp = LinearProgram.build(
                    ev.ravel(), eq=(np.ones((1, n1 * n2)), np.ones(1)), ub=ub
                )
                # Same entering rule as the per-state solver, so both
                # routes select the same vertex among alternate optima.
                sol = solve_lp(lp, entering="bland")
                if sol.status is not Status.OPTIMAL:
                    raise InputError(
                        f"expanded stage LP at t={t}, state index {x} returned {sol.status.value}"
                    )
                g = np.array(sol.x).reshape(n1, n2)
                g[g < SUPPORT_THRESHOLD] = 0.0
                g /= g.sum()
                values[(t, h, x)] = (
                    float((g * ev).sum()),
                    float((g * ew1).sum()),
                    float((g * ew2).sum()),
                )

    return float(
        sum(
            spec.initial[x] * values[(1, (), x)][0]
            for x in range(spec.n_states(1))
        )
    )
