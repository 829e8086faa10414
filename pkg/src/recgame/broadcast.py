"""Two-transmitter broadcast benchmark.

Each agent holds a buffer of packets (0..buffer_cap); at most
``channel_capacity`` packets fit on the channel per slot. Transmitting
within capacity succeeds and drains the buffers; exceeding it wastes the
slot. New packets arrive independently per agent. The designer values
throughput plus a fairness bonus and everyone pays small penalties for
collisions and for sitting at a full buffer.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import solve_cmdp, solve_unconstrained, ActionStrategy, CmdpResult
from .designer import MessagingStrategy, ValueTables, solve_designer
from .errors import InputError
from .game import GameSpec, NoiseModel, compile_kernel
from .verifier import evaluate


def jain_fairness(u1: int, u2: int) -> float:
    """Jain index of the transmitted pair; the idle pair counts as fair."""
    if u1 == 0 and u2 == 0:
        return 1.0
    return (u1 + u2) ** 2 / (2.0 * (u1 * u1 + u2 * u2))


def state_label(b1: int, b2: int) -> str:
    return f"({b1},{b2})"


def state_index(buffer_cap: int, b1: int, b2: int) -> int:
    if not (0 <= b1 <= buffer_cap and 0 <= b2 <= buffer_cap):
        raise InputError(f"buffer pair ({b1},{b2}) outside 0..{buffer_cap}")
    return b1 * (buffer_cap + 1) + b2


def uniform_initial(buffer_cap: int) -> np.ndarray:
    n = (buffer_cap + 1) ** 2
    return np.full(n, 1.0 / n)


def point_initial(buffer_cap: int, b1: int, b2: int) -> np.ndarray:
    out = np.zeros((buffer_cap + 1) ** 2)
    out[state_index(buffer_cap, b1, b2)] = 1.0
    return out


@dataclass(frozen=True)
class BroadcastParams:
    """Benchmark parameters; ``initial`` defaults to uniform over buffers."""

    horizon: int
    buffer_cap: int = 3
    channel_capacity: int = 3
    arrival_probs: tuple[float, float] = (0.8, 0.8)
    fairness_weight: float = 4.0
    collision_penalty: float = 0.1
    full_buffer_penalties: tuple[float, float, float] = (0.1, 0.1, 0.1)
    initial: np.ndarray | None = None

    def __post_init__(self):
        if self.horizon < 1:
            raise InputError(f"horizon must be at least 1, got {self.horizon}")
        if self.buffer_cap < 1:
            raise InputError(f"buffer capacity must be at least 1, got {self.buffer_cap}")
        if self.channel_capacity < 1:
            raise InputError(
                f"channel capacity must be at least 1, got {self.channel_capacity}"
            )
        for p in self.arrival_probs:
            if not 0.0 <= p <= 1.0:
                raise InputError(f"arrival probability {p!r} outside [0, 1]")
        if self.initial is not None and self.initial.shape != ((self.buffer_cap + 1) ** 2,):
            raise InputError(
                f"initial distribution needs {(self.buffer_cap + 1) ** 2} entries"
            )

    def initial_distribution(self) -> np.ndarray:
        if self.initial is None:
            return uniform_initial(self.buffer_cap)
        return np.asarray(self.initial, dtype=float)


def build_broadcast_game(params: BroadcastParams) -> GameSpec:
    """Compile the buffer dynamics and rewards into a dense game.

    States enumerate buffer pairs row-major; each agent's action set at a
    state is how many packets to send, 0 up to the buffer content. The
    two Bernoulli arrivals become one four-atom noise draw.
    """
    beta = params.buffer_cap
    cap = params.channel_capacity
    p1, p2 = params.arrival_probs
    states = [state_label(b1, b2) for b1 in range(beta + 1) for b2 in range(beta + 1)]
    actions = []
    for b1 in range(beta + 1):
        for b2 in range(beta + 1):
            actions.append(
                (
                    tuple(str(u) for u in range(b1 + 1)),
                    tuple(str(u) for u in range(b2 + 1)),
                )
            )

    atom_probs = np.array(
        [
            (1 - p1) * (1 - p2),
            (1 - p1) * p2,
            p1 * (1 - p2),
            p1 * p2,
        ]
    )

    def transition(t: int, x: int, u1: int, u2: int, atom: int) -> int:
        b1, b2 = divmod(x, beta + 1)
        a1, a2 = divmod(atom, 2)
        success = (u1 + u2) <= cap
        served1 = u1 if success else 0
        served2 = u2 if success else 0
        n1 = min(max(b1 - served1, 0) + a1, beta)
        n2 = min(max(b2 - served2, 0) + a2, beta)
        return n1 * (beta + 1) + n2

    noise = NoiseModel(
        atom_probs=tuple([atom_probs] * params.horizon),
        transition=transition,
    )
    state_layers = [states] * (params.horizon + 1)
    action_layers = [actions] * params.horizon
    kernel = compile_kernel(noise, state_layers, action_layers)

    lam0, lam1, lam2 = params.full_buffer_penalties
    kappa = params.collision_penalty
    alpha = params.fairness_weight
    r0_blocks, r1_blocks, r2_blocks = [], [], []
    for b1 in range(beta + 1):
        for b2 in range(beta + 1):
            full1 = 1.0 if b1 == beta else 0.0
            full2 = 1.0 if b2 == beta else 0.0
            r0 = np.zeros((b1 + 1, b2 + 1))
            r1 = np.zeros((b1 + 1, b2 + 1))
            r2 = np.zeros((b1 + 1, b2 + 1))
            for u1 in range(b1 + 1):
                for u2 in range(b2 + 1):
                    if u1 + u2 <= cap:
                        r0[u1, u2] = (u1 + u2) / cap + alpha * jain_fairness(u1, u2)
                        r1[u1, u2] = u1
                        r2[u1, u2] = u2
                    else:
                        r0[u1, u2] = -kappa
                        r1[u1, u2] = -kappa
                        r2[u1, u2] = -kappa
                    r0[u1, u2] -= lam0 * (full1 + full2)
                    r1[u1, u2] -= lam1 * full1
                    r2[u1, u2] -= lam2 * full2
            r0_blocks.append(r0)
            r1_blocks.append(r1)
            r2_blocks.append(r2)

    return GameSpec.from_time_varying(
        horizon=params.horizon,
        states=state_layers,
        actions=action_layers,
        kernel=[list(layer) for layer in kernel.rows],
        rewards=(
            [r0_blocks] * params.horizon,
            [r1_blocks] * params.horizon,
            [r2_blocks] * params.horizon,
        ),
        initial=params.initial_distribution(),
    )


# -- probes ------------------------------------------------------------


@dataclass(frozen=True)
class ProbeEntry:
    u1: int
    u2: int
    probability: float
    fair: bool
    over_capacity: bool


@dataclass(frozen=True)
class StrategyProbe:
    """Mass split of one stage distribution into behavior classes.

    Fair pairs send equal counts; asymmetric pairs differ; over-capacity
    pairs exceed the channel (and may also be fair, so the fair and
    over-capacity masses can overlap). Fair plus asymmetric is one.
    """

    t: int
    x: int
    capacity: int
    fair_mass: float
    asymmetric_mass: float
    over_capacity_mass: float
    support: tuple[ProbeEntry, ...]


def probe_strategy(
    strategy: MessagingStrategy | ActionStrategy, t: int, x: int, capacity: int
) -> StrategyProbe:
    """Classify the supported joint sends of a broadcast-game strategy."""
    dist = strategy.dist(t, x)
    fair = asym = over = 0.0
    entries = []
    for u1 in range(dist.shape[0]):
        for u2 in range(dist.shape[1]):
            p = float(dist[u1, u2])
            if p <= 0.0:
                continue
            is_fair = u1 == u2
            is_over = (u1 + u2) > capacity
            entries.append(ProbeEntry(u1, u2, p, is_fair, is_over))
            if is_fair:
                fair += p
            else:
                asym += p
            if is_over:
                over += p
    return StrategyProbe(
        t=t,
        x=x,
        capacity=capacity,
        fair_mass=fair,
        asymmetric_mass=asym,
        over_capacity_mass=over,
        support=tuple(entries),
    )


# -- static single-slot comparison ------------------------------------


@dataclass(frozen=True)
class StaticCaseReport:
    """One-slot comparison between recommendation and dictation optima."""

    alpha: float
    start: tuple[int, int]
    threshold: float
    condition_holds: bool
    recommendation_support: tuple[tuple[str, str, float], ...]
    recommendation_value: float
    dictation_support: tuple[tuple[str, str, float], ...]
    dictation_value: float

    @property
    def supports_differ(self) -> bool:
        rec = {(a, b) for a, b, _ in self.recommendation_support}
        dic = {(a, b) for a, b, _ in self.dictation_support}
        return rec != dic


def _support(dist: np.ndarray, labels1, labels2) -> tuple[tuple[str, str, float], ...]:
    out = []
    for u1 in range(dist.shape[0]):
        for u2 in range(dist.shape[1]):
            if dist[u1, u2] > 0.0:
                out.append((labels1[u1], labels2[u2], float(dist[u1, u2])))
    return tuple(out)


def run_static_case(
    params: BroadcastParams, x1: tuple[int, int], alpha: float
) -> StaticCaseReport:
    """Solve the one-slot game from a fixed buffer pair at a given
    fairness weight and report both optima next to the weight threshold
    that separates their supports.

    Requires 0 <= b2 < b1 < buffer_cap and b1 + b2 <= channel_capacity,
    the regime where the threshold formula applies.
    """
    b1, b2 = x1
    beta = params.buffer_cap
    if not (0 <= b2 < b1 < beta):
        raise InputError(
            f"start pair ({b1},{b2}) must satisfy 0 <= b2 < b1 < {beta}"
        )
    if b1 + b2 > params.channel_capacity:
        raise InputError(
            f"start pair ({b1},{b2}) exceeds channel capacity {params.channel_capacity}"
        )
    one_shot = replace(
        params,
        horizon=1,
        fairness_weight=alpha,
        initial=point_initial(beta, b1, b2),
    )
    spec = build_broadcast_game(one_shot)
    x = state_index(beta, b1, b2)
    labels1 = spec.action_labels(1, x, 1)
    labels2 = spec.action_labels(1, x, 2)

    strategy, values = solve_designer(spec)
    ud_strategy, ud_values, _ = solve_unconstrained(spec)

    phi = jain_fairness(b1, b2)
    threshold = (b1 - b2) / (params.channel_capacity * (1.0 - phi))
    return StaticCaseReport(
        alpha=alpha,
        start=(b1, b2),
        threshold=threshold,
        condition_holds=alpha > threshold,
        recommendation_support=_support(strategy.dist(1, x), labels1, labels2),
        recommendation_value=float(values.designer[0][x]),
        dictation_support=_support(ud_strategy.dist(1, x), labels1, labels2),
        dictation_value=float(ud_values[0][x]),
    )


# -- full benchmark ----------------------------------------------------


@dataclass(frozen=True)
class BenchmarkResult:
    """Designer/agent totals for the three solution concepts, columns in
    the order (unconstrained dictation, constrained dictation,
    recommendation), plus the solved objects for further probing."""

    designer: tuple[float, float, float]
    agent1: tuple[float, float, float]
    agent2: tuple[float, float, float]
    spec: GameSpec = field(repr=False)
    messaging: MessagingStrategy = field(repr=False)
    messaging_values: ValueTables = field(repr=False)
    ud_strategy: ActionStrategy = field(repr=False)
    cmdp: CmdpResult = field(repr=False)


def reproduce_table1(params: BroadcastParams, *, threads: int = 1) -> BenchmarkResult:
    """Run all three solvers on one parameterization.

    The constrained dictation baseline receives the recommendation
    solution's agent totals as its floors, so its column answers: how
    much designer value would dictation achieve while promising the
    agents at least what the recommendation strategy delivers.
    """
    spec = build_broadcast_game(params)
    strategy, values = solve_designer(spec, threads=threads)
    rec = evaluate(spec, strategy)

    ud_strategy, _, ud_j0 = solve_unconstrained(spec)
    ud = evaluate(spec, ud_strategy.to_messaging())

    cmdp = solve_cmdp(spec, eps1=rec.agent1_total, eps2=rec.agent2_total)
    if cmdp.status.value != "optimal":
        raise InputError(
            "constrained dictation is infeasible at the recommendation agent totals"
        )

    return BenchmarkResult(
        designer=(ud_j0, cmdp.designer_total, rec.designer_total),
        agent1=(ud.agent1_total, cmdp.agent1_total, rec.agent1_total),
        agent2=(ud.agent2_total, cmdp.agent2_total, rec.agent2_total),
        spec=spec,
        messaging=strategy,
        messaging_values=values,
        ud_strategy=ud_strategy,
        cmdp=cmdp,
    )
