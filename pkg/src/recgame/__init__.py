"""Solver for action-recommendation strategies in two-agent Markov games.

A designer privately recommends a joint action each period; the solver
finds the designer-optimal recommendation scheme that every agent is
willing to follow at every reachable situation, by backward induction
over stage linear programs. Verifiers check that property two
independent ways, and dictation baselines bound it from above.
"""

from .baselines import (
    ActionStrategy,
    CmdpResult,
    OccupationMeasure,
    solve_cmdp,
    solve_unconstrained,
)
from .broadcast import (
    BenchmarkResult,
    BroadcastParams,
    StaticCaseReport,
    StrategyProbe,
    build_broadcast_game,
    jain_fairness,
    probe_strategy,
    reproduce_table1,
    run_static_case,
)
from .designer import (
    MessagingStrategy,
    StageLpFault,
    ValueTables,
    build_stage_lp,
    solve_designer,
    stage_payoffs,
    strategy_marginal,
)
from .errors import InputError, RecgameError, SolverFault
from .game import (
    GameSpec,
    NoiseModel,
    RewardTables,
    TransitionKernel,
    compile_kernel,
    reachable_states,
    validate_spec,
)
from .lp import LinearProgram, LpSolution, Status, solve_lp
from .serialize import (
    dump_game,
    game_from_json,
    game_to_json,
    load_game,
    load_strategy,
    strategy_from_json,
    strategy_to_json,
)
from .verifier import (
    BestResponseReport,
    ConditionalBelief,
    EvalReport,
    SrReport,
    SrViolation,
    agent_values,
    best_response,
    check_obedience,
    conditional_belief,
    designer_values,
    evaluate,
    history_expanded_optimum,
)

__version__ = "0.1.0"

__all__ = [
    "ActionStrategy",
    "BenchmarkResult",
    "BestResponseReport",
    "BroadcastParams",
    "CmdpResult",
    "ConditionalBelief",
    "EvalReport",
    "GameSpec",
    "InputError",
    "LinearProgram",
    "LpSolution",
    "MessagingStrategy",
    "NoiseModel",
    "OccupationMeasure",
    "RecgameError",
    "RewardTables",
    "SolverFault",
    "SrReport",
    "SrViolation",
    "StageLpFault",
    "StaticCaseReport",
    "Status",
    "StrategyProbe",
    "TransitionKernel",
    "ValueTables",
    "agent_values",
    "best_response",
    "build_broadcast_game",
    "build_stage_lp",
    "check_obedience",
    "compile_kernel",
    "conditional_belief",
    "designer_values",
    "dump_game",
    "evaluate",
    "game_from_json",
    "game_to_json",
    "history_expanded_optimum",
    "jain_fairness",
    "load_game",
    "load_strategy",
    "probe_strategy",
    "reachable_states",
    "reproduce_table1",
    "run_static_case",
    "solve_cmdp",
    "solve_designer",
    "solve_lp",
    "solve_unconstrained",
    "stage_payoffs",
    "strategy_from_json",
    "strategy_marginal",
    "strategy_to_json",
    "validate_spec",
]
