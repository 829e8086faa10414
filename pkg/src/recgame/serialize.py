"""File formats: JSON game specs, JSON strategies/reports, CSV tables.

The JSON layouts are documented in docs/file-formats.md. Game files may
describe time-invariant layers once (shared form) or per time; strategy
files are keyed by time then state with sparse probability entries. All
writers emit sorted keys and fixed field names so artifacts diff cleanly.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any

import numpy as np

from .baselines import ActionStrategy
from .broadcast import BenchmarkResult, StrategyProbe
from .designer import MessagingStrategy, ValueTables
from .errors import InputError
from .game import GameSpec
from .verifier import EvalReport, SrReport

BENCH_COLUMNS = ("unconstrained", "constrained", "recommendation")


def write_json(path: str | Path, doc: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: str | Path) -> dict:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"no such file: {path}") from None
    except json.JSONDecodeError as err:
        raise InputError(f"{path} is not valid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path} must hold a JSON object at top level")
    return doc


# -- game specs --------------------------------------------------------


def _layers_equal(layers) -> bool:
    first = layers[0]
    return all(layer == first for layer in layers[1:])


def _block_layers_equal(layers) -> bool:
    first = layers[0]
    for layer in layers[1:]:
        if len(layer) != len(first):
            return False
        for a, b in zip(layer, first):
            if a.shape != b.shape or not np.array_equal(a, b):
                return False
    return True


def game_to_json(spec: GameSpec) -> dict:
    """Render a game to its JSON document (shared form when layers repeat)."""
    T = spec.horizon

    def action_rows(t: int) -> list[dict]:
        rows = []
        for x, label in enumerate(spec.state_labels(t)):
            rows.append(
                {
                    "state": label,
                    "agent1": list(spec.action_labels(t, x, 1)),
                    "agent2": list(spec.action_labels(t, x, 2)),
                }
            )
        return rows

    def kernel_rows(t: int) -> list[dict]:
        rows = []
        next_labels = spec.state_labels(t + 1)
        for x, label in enumerate(spec.state_labels(t)):
            block = spec.kernel_at(t, x)
            for u1, l1 in enumerate(spec.action_labels(t, x, 1)):
                for u2, l2 in enumerate(spec.action_labels(t, x, 2)):
                    nxt = {
                        next_labels[k]: float(block[u1, u2, k])
                        for k in np.flatnonzero(block[u1, u2] != 0.0)
                    }
                    rows.append({"state": label, "u1": l1, "u2": l2, "next": nxt})
        return rows

    def reward_rows(who: int, t: int) -> list[dict]:
        rows = []
        for x, label in enumerate(spec.state_labels(t)):
            block = spec.reward_at(who, t, x)
            for u1, l1 in enumerate(spec.action_labels(t, x, 1)):
                for u2, l2 in enumerate(spec.action_labels(t, x, 2)):
                    value = float(block[u1, u2])
                    if value != 0.0:
                        rows.append({"state": label, "u1": l1, "u2": l2, "value": value})
        return rows

    shared = (
        _layers_equal(list(spec.states))
        and _layers_equal([spec.actions[t] for t in range(T)])
        and _block_layers_equal([spec.kernel.rows[t] for t in range(T)])
        and all(
            _block_layers_equal([spec.rewards.table(who)[t] for t in range(T)])
            for who in (0, 1, 2)
        )
    )
    doc: dict[str, Any] = {"horizon": T}
    if shared:
        doc["states"] = list(spec.state_labels(1))
        doc["actions"] = action_rows(1)
        doc["kernel"] = kernel_rows(1)
        doc["rewards"] = {
            "designer": reward_rows(0, 1),
            "agent1": reward_rows(1, 1),
            "agent2": reward_rows(2, 1),
        }
    else:
        doc["states"] = {"per_time": [list(spec.state_labels(t)) for t in range(1, T + 2)]}
        doc["actions"] = {"per_time": [action_rows(t) for t in range(1, T + 1)]}
        doc["kernel"] = {"per_time": [kernel_rows(t) for t in range(1, T + 1)]}
        doc["rewards"] = {
            who_name: {"per_time": [reward_rows(who, t) for t in range(1, T + 1)]}
            for who, who_name in ((0, "designer"), (1, "agent1"), (2, "agent2"))
        }
    doc["initial"] = {
        spec.state_labels(1)[x]: float(spec.initial[x])
        for x in np.flatnonzero(spec.initial != 0.0)
    }
    return doc


def _expand(section, n_layers: int, what: str) -> list:
    """Accept shared form (a list) or {'per_time': [...]} with n_layers lists."""
    if isinstance(section, list):
        return [section] * n_layers
    if isinstance(section, dict) and "per_time" in section:
        layers = section["per_time"]
        if not isinstance(layers, list) or len(layers) != n_layers:
            raise InputError(f"{what}.per_time must hold exactly {n_layers} layers")
        return layers
    raise InputError(f"{what} must be a list (shared) or an object with per_time")


def game_from_json(doc: dict) -> GameSpec:
    """Parse a game document; label problems raise, numeric problems are
    left for validate_spec so its diagnostics can cite them."""
    try:
        T = int(doc["horizon"])
    except (KeyError, TypeError, ValueError):
        raise InputError("horizon must be a positive integer") from None
    if T < 1:
        raise InputError("horizon must be a positive integer")
    for key in ("states", "actions", "kernel", "rewards", "initial"):
        if key not in doc:
            raise InputError(f"game document is missing the {key} section")

    state_layers = _expand(doc["states"], T + 1, "states")
    state_layers = [[str(s) for s in layer] for layer in state_layers]
    index_of = [{label: i for i, label in enumerate(layer)} for layer in state_layers]

    action_layers_raw = _expand(doc["actions"], T, "actions")
    actions: list[list[tuple[list[str], list[str]]]] = []
    for ti, rows in enumerate(action_layers_raw):
        layer: list[tuple[list[str], list[str]] | None] = [None] * len(state_layers[ti])
        for row in rows:
            label = str(row.get("state"))
            if label not in index_of[ti]:
                raise InputError(f"actions at t={ti + 1} name unknown state {label!r}")
            layer[index_of[ti][label]] = (
                [str(a) for a in row.get("agent1", [])],
                [str(a) for a in row.get("agent2", [])],
            )
        for x, entry in enumerate(layer):
            if entry is None:
                raise InputError(
                    f"actions at t={ti + 1} missing state {state_layers[ti][x]!r}"
                )
        actions.append(layer)  # type: ignore[arg-type]

    def act_index(ti: int, x: int, side: int, label: str, what: str) -> int:
        try:
            return actions[ti][x][side].index(label)
        except ValueError:
            raise InputError(
                f"{what} at t={ti + 1}, state {state_layers[ti][x]!r} names "
                f"unknown agent-{side + 1} action {label!r}"
            ) from None

    kernel_layers_raw = _expand(doc["kernel"], T, "kernel")
    kernel: list[list[np.ndarray]] = []
    for ti, rows in enumerate(kernel_layers_raw):
        n_next = len(state_layers[ti + 1])
        blocks = [
            np.zeros((len(a1), len(a2), n_next)) for a1, a2 in actions[ti]
        ]
        for row in rows:
            label = str(row.get("state"))
            if label not in index_of[ti]:
                raise InputError(f"kernel at t={ti + 1} names unknown state {label!r}")
            x = index_of[ti][label]
            u1 = act_index(ti, x, 0, str(row.get("u1")), "kernel row")
            u2 = act_index(ti, x, 1, str(row.get("u2")), "kernel row")
            for nxt_label, prob in dict(row.get("next", {})).items():
                if str(nxt_label) not in index_of[ti + 1]:
                    raise InputError(
                        f"kernel row at t={ti + 1}, state {label!r} targets "
                        f"unknown state {nxt_label!r}"
                    )
                blocks[x][u1, u2, index_of[ti + 1][str(nxt_label)]] = float(prob)
        kernel.append(blocks)

    rewards_doc = doc["rewards"]
    if not isinstance(rewards_doc, dict):
        raise InputError("rewards must be an object with designer/agent1/agent2")
    reward_tables = []
    for who_name in ("designer", "agent1", "agent2"):
        if who_name not in rewards_doc:
            raise InputError(f"rewards section is missing {who_name}")
        layers_raw = _expand(rewards_doc[who_name], T, f"rewards.{who_name}")
        layers = []
        for ti, rows in enumerate(layers_raw):
            blocks = [np.zeros((len(a1), len(a2))) for a1, a2 in actions[ti]]
            for row in rows:
                label = str(row.get("state"))
                if label not in index_of[ti]:
                    raise InputError(
                        f"rewards.{who_name} at t={ti + 1} names unknown state {label!r}"
                    )
                x = index_of[ti][label]
                u1 = act_index(ti, x, 0, str(row.get("u1")), f"rewards.{who_name}")
                u2 = act_index(ti, x, 1, str(row.get("u2")), f"rewards.{who_name}")
                blocks[x][u1, u2] = float(row.get("value", 0.0))
            layers.append(blocks)
        reward_tables.append(layers)

    initial_doc = doc["initial"]
    if not isinstance(initial_doc, dict):
        raise InputError("initial must map state labels to probabilities")
    initial = np.zeros(len(state_layers[0]))
    for label, prob in initial_doc.items():
        if str(label) not in index_of[0]:
            raise InputError(f"initial names unknown state {label!r}")
        initial[index_of[0][str(label)]] = float(prob)

    return GameSpec.from_time_varying(
        horizon=T,
        states=state_layers,
        actions=actions,
        kernel=kernel,
        rewards=tuple(reward_tables),
        initial=initial,
    )


def load_game(path: str | Path) -> GameSpec:
    return game_from_json(read_json(path))


def dump_game(spec: GameSpec, path: str | Path) -> Path:
    return write_json(path, game_to_json(spec))


# -- strategies --------------------------------------------------------


def strategy_to_json(
    spec: GameSpec,
    strategy: MessagingStrategy | ActionStrategy,
    *,
    values: ValueTables | None = None,
    kind: str | None = None,
) -> dict:
    """Render a strategy against its game's labels.

    ``kind`` defaults to "messaging" for recommendation strategies and to
    the baseline's own tag otherwise. Value tables cover t = 1..T; the
    terminal layer is identically zero and not stored.
    """
    if kind is None:
        kind = getattr(strategy, "kind", None) or "messaging"
    entries: dict[str, dict[str, list[dict]]] = {}
    for t in range(1, strategy.horizon + 1):
        per_state: dict[str, list[dict]] = {}
        for x in range(spec.n_states(t)):
            dist = strategy.table[t - 1][x]
            if dist is None:
                continue
            labels1 = spec.action_labels(t, x, 1)
            labels2 = spec.action_labels(t, x, 2)
            rows = [
                {
                    "m1": labels1[m1],
                    "m2": labels2[m2],
                    "probability": float(dist[m1, m2]),
                }
                for m1 in range(dist.shape[0])
                for m2 in range(dist.shape[1])
                if dist[m1, m2] > 0.0
            ]
            per_state[spec.state_labels(t)[x]] = rows
        entries[str(t)] = per_state
    doc: dict[str, Any] = {
        "kind": kind,
        "horizon": strategy.horizon,
        "entries": entries,
    }
    if values is not None:
        doc["values"] = {
            name: {
                str(t): {
                    spec.state_labels(t)[x]: float(table[t - 1][x])
                    for x in range(spec.n_states(t))
                }
                for t in range(1, strategy.horizon + 1)
            }
            for name, table in (
                ("designer", values.designer),
                ("agent1", values.agent1),
                ("agent2", values.agent2),
            )
        }
    metadata = dict(getattr(strategy, "metadata", {}) or {})
    if metadata:
        doc["metadata"] = metadata
    return doc


def strategy_from_json(spec: GameSpec, doc: dict) -> MessagingStrategy:
    """Parse a strategy document against a game; any strategy kind loads
    as recommendation tables so it can be evaluated and verified."""
    try:
        horizon = int(doc["horizon"])
    except (KeyError, TypeError, ValueError):
        raise InputError("strategy horizon must be a positive integer") from None
    if horizon != spec.horizon:
        raise InputError(
            f"strategy horizon {horizon} does not match game horizon {spec.horizon}"
        )
    entries = doc.get("entries")
    if not isinstance(entries, dict):
        raise InputError("strategy document is missing its entries section")
    table: list[list[np.ndarray | None]] = [
        [None] * spec.n_states(t) for t in range(1, horizon + 1)
    ]
    defined = 0
    for t_key, per_state in entries.items():
        try:
            t = int(t_key)
        except ValueError:
            raise InputError(f"strategy entry key {t_key!r} is not a time") from None
        if not 1 <= t <= horizon:
            raise InputError(f"strategy entry at t={t} outside 1..{horizon}")
        if not isinstance(per_state, dict):
            raise InputError(f"strategy entries at t={t} must map states to rows")
        for label, rows in per_state.items():
            if str(label) not in spec.state_labels(t):
                raise InputError(f"strategy at t={t} names unknown state {label!r}")
            x = spec.state_index(t, str(label))
            labels1 = spec.action_labels(t, x, 1)
            labels2 = spec.action_labels(t, x, 2)
            dist = np.zeros((len(labels1), len(labels2)))
            for row in rows:
                m1_label = str(row.get("m1"))
                m2_label = str(row.get("m2"))
                if m1_label not in labels1 or m2_label not in labels2:
                    raise InputError(
                        f"strategy at t={t}, state {label!r} names unknown "
                        f"actions ({m1_label!r}, {m2_label!r})"
                    )
                prob = float(row.get("probability", 0.0))
                if prob < 0.0:
                    raise InputError(
                        f"strategy at t={t}, state {label!r} has negative probability"
                    )
                dist[labels1.index(m1_label), labels2.index(m2_label)] += prob
            total = float(dist.sum())
            if abs(total - 1.0) > 1e-6:
                raise InputError(
                    f"strategy at t={t}, state {label!r} sums to {total!r}, expected 1"
                )
            dist.flags.writeable = False
            table[t - 1][x] = dist
            defined += 1
    if defined == 0:
        raise InputError("strategy document defines no distributions")
    metadata = dict(doc.get("metadata", {}) or {})
    metadata["kind"] = str(doc.get("kind", "messaging"))
    return MessagingStrategy(
        horizon=horizon,
        table=tuple(tuple(layer) for layer in table),
        metadata=metadata,
    )


def load_strategy(spec: GameSpec, path: str | Path) -> MessagingStrategy:
    return strategy_from_json(spec, read_json(path))


# -- reports -----------------------------------------------------------


def sr_report_to_json(report: SrReport) -> dict:
    return {
        "passed": report.passed,
        "tolerance": report.tolerance,
        "max_gap": report.max_gap,
        "violations": [
            {
                "agent": v.agent,
                "t": v.t,
                "state": v.state,
                "recommended": v.recommended,
                "deviation": v.deviation,
                "gap": v.gap,
            }
            for v in report.violations
        ],
    }


def eval_report_to_json(spec: GameSpec, report: EvalReport) -> dict:
    return {
        "totals": {
            "designer": report.designer_total,
            "agent1": report.agent1_total,
            "agent2": report.agent2_total,
        },
        "trace": {
            str(t): {
                spec.state_labels(t)[x]: float(dist[x])
                for x in np.flatnonzero(dist > 0.0)
            }
            for t, dist in enumerate(report.trace, start=1)
        },
    }


def probe_to_json(spec: GameSpec, probe: StrategyProbe) -> dict:
    return {
        "t": probe.t,
        "state": spec.state_labels(probe.t)[probe.x],
        "capacity": probe.capacity,
        "fair_mass": probe.fair_mass,
        "asymmetric_mass": probe.asymmetric_mass,
        "over_capacity_mass": probe.over_capacity_mass,
        "support": [
            {
                "u1": entry.u1,
                "u2": entry.u2,
                "probability": entry.probability,
                "fair": entry.fair,
                "over_capacity": entry.over_capacity,
            }
            for entry in probe.support
        ],
    }


# -- delimited tables --------------------------------------------------


def write_benchmark_csv(result: BenchmarkResult, path: str | Path) -> Path:
    """Three metric rows by three method columns, six decimals."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("metric",) + BENCH_COLUMNS)
        for name, row in (
            ("designer", result.designer),
            ("agent1", result.agent1),
            ("agent2", result.agent2),
        ):
            writer.writerow([name] + [f"{v:.6f}" for v in row])
    return path


def write_probe_csv(probes: list[StrategyProbe], path: str | Path) -> Path:
    """Per-time class masses for one probed state."""
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "fair", "asymmetric", "over_capacity"))
        for probe in probes:
            writer.writerow(
                [probe.t]
                + [
                    f"{v:.6f}"
                    for v in (
                        probe.fair_mass,
                        probe.asymmetric_mass,
                        probe.over_capacity_mass,
                    )
                ]
            )
    return path
