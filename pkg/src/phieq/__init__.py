"""Constrained Phi-equilibria in generalized games: reductions, verifiers and a QVI route."""

from .equilibrium import (
    DeviationPolytope,
    EquilibriumReport,
    PromiseViolation,
    cce_feasibility_lp,
    safe_best_response,
    verify_constrained_equilibrium,
)
from .game import (
    Factor,
    FactoredGame,
    MixtureStrategy,
    apply_deviation,
    expected_cost,
    expected_utility,
    marginalize,
)
from .lp import LinearProgram, LPNumericalError, lp_solve
from .polymatrix import (
    PolyMatrixGame,
    brute_force_nash,
    player_regret,
    random_instance,
    support_enumeration_nash,
    verify_eps_nash,
)
from .qvi import (
    QviConfig,
    QviInstance,
    QviSolveError,
    build_qvi,
    eval_correspondence,
    eval_F,
    flatten,
    lipschitz_probe,
    qvi_gap,
    renormalize,
    solve_qvi,
    unflatten,
)
from .reduction import ConstrainedInstance, extract_nash, reduce, team_utilities, witness_from_nash

__version__ = "0.1.0"
