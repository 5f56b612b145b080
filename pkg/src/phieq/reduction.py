"""Polymatrix game -> constrained CCE instance, and back.

Each node i of the polymatrix graph becomes a left player ``i`` and a right
player ``n + i``.  Right players play the original edge games against left
copies of their neighbours; left players receive the negated transposes, so
the two teams play a zero-sum game.  For every action t, two pair costs on
(left i, right i) pin the left marginal to the right marginal:

    C^{t}      = +1 if a_L = t != a_R, -1 if a_R = t != a_L, else 0
    C^{t + k}  = -C^{t}

so that E_z[C^{t}] = m_L(z | t) - m_R(z | t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .equilibrium import DeviationPolytope
from .game import DimensionError, Factor, FactoredGame, MixtureStrategy, marginalize
from .polymatrix import PolyMatrixGame, check_profile


@dataclass(frozen=True, eq=False)
class ConstrainedInstance:
    game: FactoredGame
    deviations: DeviationPolytope
    eps_prime: float
    nu: float
    mapping: tuple  # node i -> (left player index, right player index)
    source: PolyMatrixGame
    source_eps: float

    @property
    def n_nodes(self) -> int:
        return self.source.n

    def left(self, i: int) -> int:
        return self.mapping[i][0]

    def right(self, i: int) -> int:
        return self.mapping[i][1]


def coupling_cost(k: int, j: int) -> np.ndarray:
    """Table over (a_left, a_right) of the j-th coupling cost, j in 0..2k-1."""
    t = j % k
    table = np.zeros((k, k))
    table[t, :] = 1.0
    table[:, t] = -1.0
    table[t, t] = 0.0
    return table if j < k else -table


def reduce(g: PolyMatrixGame, eps: float) -> ConstrainedInstance:
    """Build the constrained instance with eps' = eps/(4n) and nu = eps/(2 n k deg(G)).

    A graph without edges gives nu = inf (the costs cannot matter).
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    n, k = g.n, g.k
    L = list(range(n))
    R = [n + i for i in range(n)]
    utilities = [None] * (2 * n)
    for i in range(n):
        utilities[L[i]] = tuple(Factor((L[i], R[j]), -g.edges[(j, i)].T) for j in g.neighbours(i))
        utilities[R[i]] = tuple(Factor((R[i], L[j]), g.edges[(i, j)]) for j in g.neighbours(i))
    costs = [()] * (2 * n)
    for i in range(n):
        costs[L[i]] = tuple((Factor((L[i], R[i]), coupling_cost(k, j)),) for j in range(2 * k))
    deg = g.degree
    bound = float(max(deg, 1))
    game = FactoredGame(2 * n, k, tuple(utilities), tuple(costs), utility_range=(-bound, bound))
    nu = eps / (2 * n * k * deg) if deg else math.inf
    return ConstrainedInstance(
        game=game,
        deviations=DeviationPolytope.cce(k),
        eps_prime=eps / (4 * n),
        nu=nu,
        mapping=tuple((L[i], R[i]) for i in range(n)),
        source=g,
        source_eps=float(eps),
    )


def team_utilities(inst: ConstrainedInstance, profile, exact: bool = False):
    """(u_L(a), u_R(a)), the summed utilities of the left and the right team.

    With ``exact=True`` every payoff entry is converted to a ``Fraction`` (an
    exact copy of the stored float) and the sums are rational.
    """
    profile = [int(a) for a in profile]
    if len(profile) != inst.game.n_players:
        raise DimensionError(f"profile has {len(profile)} actions for {inst.game.n_players} players")

    def team(players):
        total = Fraction(0) if exact else 0.0
        for p in players:
            for f in inst.game.utilities[p]:
                v = f.table[tuple(profile[q] for q in f.players)]
                total += Fraction(float(v)) if exact else float(v)
        return total

    lefts = [inst.left(i) for i in range(inst.n_nodes)]
    rights = [inst.right(i) for i in range(inst.n_nodes)]
    return team(lefts), team(rights)


def _exact_numerators(tables):
    """Each float table as Python-int numerators over one common power-of-two denominator."""
    fracs = [[Fraction(float(v)) for v in t.ravel()] for t in tables]
    shift = max((f.denominator.bit_length() - 1 for fs in fracs for f in fs), default=0)
    out = []
    for fs, t in zip(fracs, tables):
        nums = [f.numerator << (shift - f.denominator.bit_length() + 1) for f in fs]
        out.append(np.array(nums, dtype=object).reshape(t.shape))
    return out, 1 << shift


def team_utilities_batch(inst: ConstrainedInstance, profiles, exact: bool = False):
    """Vectorized :func:`team_utilities` over a ``(P, 2n)`` array of profiles.

    Float mode returns two float arrays.  Exact mode returns two object arrays
    of integer numerators and their common denominator ``2**s``: every stored
    payoff is a dyadic rational, so the sums are exact.
    """
    profiles = np.asarray(profiles, dtype=int)
    if profiles.ndim != 2 or profiles.shape[1] != inst.game.n_players:
        raise DimensionError(f"profiles must have shape (P, {inst.game.n_players})")
    lefts = {inst.left(i) for i in range(inst.n_nodes)}
    factors = [(p in lefts, f) for p in range(inst.game.n_players) for f in inst.game.utilities[p]]
    if exact:
        tables, denom = _exact_numerators([f.table for _, f in factors])
        zero = np.zeros(len(profiles), dtype=object)
    else:
        tables, denom = [f.table for _, f in factors], None
        zero = np.zeros(len(profiles))
    uL, uR = zero.copy(), zero.copy()
    for (is_left, f), t in zip(factors, tables):
        vals = t[tuple(profiles[:, q] for q in f.players)]
        if is_left:
            uL = uL + vals
        else:
            uR = uR + vals
    return (uL, uR, denom) if exact else (uL, uR)


def extract_nash(inst: ConstrainedInstance, z: MixtureStrategy) -> np.ndarray:
    """h_i = marginal of the right copy of node i."""
    if z.n_players != inst.game.n_players or z.n_actions != inst.game.n_actions:
        raise DimensionError("strategy does not fit the reduced instance")
    return np.array([marginalize(z, [inst.right(i)]) for i in range(inst.n_nodes)])


def witness_from_nash(inst: ConstrainedInstance, x) -> MixtureStrategy:
    """Product strategy with both copies of node i playing x_i.

    All coupling costs vanish, a left player's only safe deviation reproduces
    its current marginal, and a right player's regret equals its polymatrix
    regret under x.
    """
    x = check_profile(inst.source, x)
    marg = np.zeros((inst.game.n_players, inst.game.n_actions))
    for i in range(inst.n_nodes):
        marg[inst.left(i)] = x[i]
        marg[inst.right(i)] = x[i]
    return MixtureStrategy.product(marg)
