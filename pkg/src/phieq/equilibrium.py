"""Constrained Phi-equilibrium verification through safe best-response LPs.

A deviation phi is an l x l row-stochastic matrix; ``phi[a, b]`` is the
probability of playing b when recommended a.  For a mixture of products,
player i's utility and every cost after the deviation are linear in the
entries of phi:

    u_i(phi o_i z) = sum_{a,b} phi[a, b] * sum_c w_c x_{c,i}[a] g_c[b],

with g_c the conditional payoff of player i against component c.  The safe
best response is the LP maximizing that objective over the deviation
polytope intersected with the (zero-slack by default) cost constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .game import FactoredGame, MixtureStrategy, conditional_payoff, expected_cost, expected_utility
from .lp import LP_TOL, LinearProgram, LPNumericalError, lp_solve


class PromiseViolation(RuntimeError):
    """No deviation in Phi keeps the player safe: Phi_i^S(z) is empty."""


@dataclass(frozen=True, eq=False)
class DeviationPolytope:
    """Linear description of a set of l x l row-stochastic matrices.

    Row-stochasticity (rows sum to one, entries nonnegative) is implicit.  The
    extra rows act on ``phi.ravel()`` (row-major).
    """

    n_actions: int
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    tag: str = "Custom"

    def __post_init__(self):
        l2 = self.n_actions**2
        for name, rhs, width in (("A_ub", "b_ub", l2), ("A_eq", "b_eq", l2)):
            A = getattr(self, name)
            b = getattr(self, rhs)
            A = np.zeros((0, width)) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
            b = np.zeros(0) if b is None else np.asarray(b, dtype=float).reshape(-1)
            if A.shape != (b.size, width):
                raise ValueError(f"{name} has shape {A.shape}, expected ({b.size}, {width})")
            object.__setattr__(self, name, A)
            object.__setattr__(self, rhs, b)

    @classmethod
    def ce(cls, n_actions: int) -> "DeviationPolytope":
        return cls(n_actions, tag="CE")

    @classmethod
    def cce(cls, n_actions: int) -> "DeviationPolytope":
        """All rows equal: phi[a, b] = phi[0, b] for every a."""
        l = n_actions
        rows = []
        for a in range(1, l):
            for b in range(l):
                r = np.zeros(l * l)
                r[b] = 1.0
                r[a * l + b] = -1.0
                rows.append(r)
        A = np.array(rows).reshape(-1, l * l)
        return cls(l, A_eq=A, b_eq=np.zeros(len(rows)), tag="CCE")

    def stochastic_rows(self) -> tuple[np.ndarray, np.ndarray]:
        l = self.n_actions
        return np.kron(np.eye(l), np.ones(l)), np.ones(l)

    def contains(self, phi, tol: float = 1e-9) -> bool:
        phi = np.asarray(phi, dtype=float)
        v = phi.ravel()
        S, s = self.stochastic_rows()
        return (
            phi.shape == (self.n_actions, self.n_actions)
            and bool((v >= -tol).all())
            and bool(np.abs(S @ v - s).max() <= tol)
            and bool((self.A_ub @ v <= self.b_ub + tol).all())
            and bool(np.abs(self.A_eq @ v - self.b_eq).max(initial=0.0) <= tol)
        )


def _deviation_coefficients(factors, i: int, z: MixtureStrategy) -> np.ndarray:
    coef = np.zeros((z.n_actions, z.n_actions))
    for w, x in z.components():
        coef += w * np.outer(x[i], conditional_payoff(factors, i, x))
    return coef


def deviation_lp(game: FactoredGame, i: int, z: MixtureStrategy, phi_set: DeviationPolytope, safety_slack: float = 0.0):
    """The LP behind :func:`safe_best_response`, over ``phi.ravel()``."""
    l = game.n_actions
    S, s = phi_set.stochastic_rows()
    obj = _deviation_coefficients(game.utilities[i], i, z).ravel()
    cost_rows = [_deviation_coefficients(c, i, z).ravel() for c in game.costs[i]]
    A_ub = np.vstack([phi_set.A_ub] + ([np.array(cost_rows)] if cost_rows else []))
    b_ub = np.concatenate([phi_set.b_ub, np.full(len(cost_rows), float(safety_slack))])
    A_eq = np.vstack([S, phi_set.A_eq])
    b_eq = np.concatenate([s, phi_set.b_eq])
    return LinearProgram(obj, A_ub, b_ub, A_eq, b_eq, lo=np.zeros(l * l), hi=np.ones(l * l), sense="max")


@dataclass
class BestResponse:
    phi: np.ndarray
    value: float


def safe_best_response(
    game: FactoredGame,
    i: int,
    z: MixtureStrategy,
    phi_set: DeviationPolytope,
    safety_slack: float = 0.0,
) -> BestResponse:
    """Maximize u_i(phi o_i z) over phi in Phi with every C_i^j(phi o_i z) <= safety_slack.

    ``safety_slack=0`` gives the safe deviation set of the problem statement.
    Raises :class:`PromiseViolation` when no deviation is safe.
    """
    if safety_slack < 0:
        raise ValueError("safety_slack must be nonnegative")
    res = lp_solve(deviation_lp(game, i, z, phi_set, safety_slack))
    if res.status == "infeasible":
        raise PromiseViolation(f"player {i} has no safe deviation")
    if not res.optimal:
        raise LPNumericalError(f"deviation LP for player {i} returned {res.status}")
    l = game.n_actions
    phi = np.clip(res.x.reshape(l, l), 0.0, None)
    phi /= phi.sum(axis=1, keepdims=True)
    return BestResponse(phi, res.value)


@dataclass
class PlayerReport:
    utility: float
    best_value: float | None
    regret: float | None
    deviation: np.ndarray | None  # None when no safe deviation exists
    costs: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "utility": self.utility,
            "best_value": self.best_value,
            "regret": self.regret,
            "deviation": None if self.deviation is None else self.deviation.tolist(),
            "costs": list(self.costs),
        }


@dataclass
class EquilibriumReport:
    players: list
    eps: float
    nu: float
    tol: float
    max_regret: float
    max_cost: float
    promise_violation: bool
    verdict: bool

    @property
    def status(self) -> str:
        if self.promise_violation:
            return "promise_violation"
        return "ok" if self.verdict else "fail"

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "status": self.status,
            "eps": self.eps,
            "nu": self.nu,
            "tol": self.tol,
            "max_regret": self.max_regret,
            "max_cost": self.max_cost,
            "promise_violation": self.promise_violation,
            "players": [p.to_dict() for p in self.players],
        }

    def table(self) -> str:
        lines = [f"{'player':>6} {'utility':>12} {'regret':>12} {'max cost':>12}"]
        for i, p in enumerate(self.players):
            reg = "n/a" if p.regret is None else f"{p.regret:12.3e}"
            mc = f"{max(p.costs):12.3e}" if p.costs else f"{'-':>12}"
            lines.append(f"{i:>6} {p.utility:12.6f} {reg:>12} {mc}")
        lines.append(
            f"verdict={self.verdict} status={self.status} max_regret={self.max_regret:.3e} "
            f"(eps={self.eps}) max_cost={self.max_cost:.3e} (nu={self.nu}) tol={self.tol:g}"
        )
        return "\n".join(lines)


def verify_constrained_equilibrium(
    game: FactoredGame,
    z: MixtureStrategy,
    phi_set: DeviationPolytope,
    eps: float,
    nu: float,
    tol: float = LP_TOL,
    safety_slack: float = 0.0,
) -> EquilibriumReport:
    """Check z is nu-safe and no player gains more than eps by a safe deviation."""
    players = []
    promise = False
    for i in range(game.n_players):
        u = expected_utility(game, i, z)
        costs = [expected_cost(game, i, j, z) for j in range(len(game.costs[i]))]
        try:
            br = safe_best_response(game, i, z, phi_set, safety_slack)
            players.append(PlayerReport(u, br.value, br.value - u, br.phi, costs))
        except PromiseViolation:
            promise = True
            players.append(PlayerReport(u, None, None, None, costs))
    regrets = [p.regret for p in players if p.regret is not None]
    all_costs = [c for p in players for c in p.costs]
    max_regret = max(regrets, default=0.0)
    max_cost = max(all_costs, default=-math.inf)
    verdict = (not promise) and max_regret <= eps + tol and max_cost <= nu + tol
    return EquilibriumReport(players, eps, nu, tol, max_regret, max_cost, promise, verdict)


def cce_feasibility_lp(game: FactoredGame) -> MixtureStrategy:
    """A coarse correlated equilibrium of a two-player game without costs.

    Solves the feasibility LP over joint distributions with one incentive
    constraint per pure deviation of each player and returns the solution as a
    mixture of point masses.
    """
    if game.n_players != 2:
        raise ValueError("the CCE feasibility LP is defined for two players")
    if any(game.n_costs):
        raise ValueError("the CCE feasibility LP takes a game without costs")
    k = game.n_actions
    dense = game.to_dense()
    A = dense.utilities[0][0].table
    B = dense.utilities[1][0].table
    rows = []
    for a in range(k):
        # deviating row player always plays a: E_z[A(a, c) - A(r, c)] <= 0
        rows.append((A[a][None, :] - A).ravel())
    for b in range(k):
        rows.append((B[:, b][:, None] - B).ravel())
    lp = LinearProgram(
        np.zeros(k * k),
        A_ub=np.array(rows),
        b_ub=np.zeros(2 * k),
        A_eq=np.ones((1, k * k)),
        b_eq=[1.0],
        lo=np.zeros(k * k),
        hi=np.ones(k * k),
    )
    res = lp_solve(lp)
    if not res.optimal:
        raise LPNumericalError(f"CCE feasibility LP returned {res.status}; a CCE always exists")
    zvec = np.clip(res.x, 0.0, None)
    zvec /= zvec.sum()
    comps = []
    for idx in np.flatnonzero(zvec > 1e-15):
        r, c = divmod(int(idx), k)
        x = np.zeros((2, k))
        x[0, r] = x[1, c] = 1.0
        comps.append((zvec[idx], x))
    total = sum(w for w, _ in comps)
    return MixtureStrategy.from_components([(w / total, x) for w, x in comps])
