"""Generalized games over a uniform action set and mixtures of product distributions.

Every payoff or cost function is stored as a sum of :class:`Factor` objects.  A
factor depends on the actions of a subset of players only, so the same type
covers dense profile tensors (one factor over all players) and edge/pair
factored functions (many two-player factors).  All expectations are computed
through the multilinear extension

    f(x_1, ..., x_n) = sum_a f(a) prod_k x_k(a_k),

which is the usual expectation when every x_k is a distribution and stays well
defined for the sub-stochastic blocks produced by QVI iterates.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

ALGEBRA_TOL = 1e-12
PRUNE_WEIGHT = 1e-15
DENSE_BITS_CAP = 24
MARGINAL_PLAYER_CAP = 12


class DimensionError(ValueError):
    """Raised when shapes of games, strategies or deviations disagree."""


@dataclass(frozen=True, eq=False)
class Factor:
    """A function of the actions of ``players`` only.

    ``table`` has one axis per entry of ``players``; ``table[a_p, a_q, ...]``
    is the value of the factor at that partial profile.
    """

    players: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.asarray(self.table, dtype=float)
        players = tuple(int(p) for p in self.players)
        if table.ndim != len(players):
            raise DimensionError(f"factor over {len(players)} players has a {table.ndim}-d table")
        if len(set(players)) != len(players):
            raise DimensionError(f"repeated player in factor scope {players}")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "players", players)

    def value(self, profile: Sequence[int]) -> float:
        return float(self.table[tuple(profile[p] for p in self.players)])

    def bounds(self) -> tuple[float, float]:
        return float(self.table.min()), float(self.table.max())


def _scale(marginals: np.ndarray, skip: Iterable[int]) -> float:
    # mass of the players a factor does not touch; 1 for distributions
    skip = set(skip)
    out = 1.0
    for k in range(marginals.shape[0]):
        if k not in skip:
            out *= float(marginals[k].sum())
    return out


def _contract(table: np.ndarray, vectors: Sequence[np.ndarray], keep: int | None = None):
    letters = string.ascii_letters[: table.ndim]
    operands = [table]
    subs = [letters]
    for axis, vec in enumerate(vectors):
        if axis == keep:
            continue
        operands.append(vec)
        subs.append(letters[axis])
    out = letters[keep] if keep is not None else ""
    return np.einsum(",".join(subs) + "->" + out, *operands)


def multilinear_value(factors: Sequence[Factor], marginals: np.ndarray) -> float:
    """Expectation of ``sum(factors)`` under the product of ``marginals``."""
    total = 0.0
    for f in factors:
        vecs = [marginals[p] for p in f.players]
        total += float(_contract(f.table, vecs)) * _scale(marginals, f.players)
    return total


def conditional_payoff(factors: Sequence[Factor], i: int, marginals: np.ndarray) -> np.ndarray:
    """Vector ``g`` with ``g[b] = sum_{a: a_i = b} f(a) prod_{k != i} x_k(a_k)``.

    This is the partial derivative of the multilinear extension with respect to
    player ``i``'s block, so ``g @ marginals[i]`` recovers the expectation.
    """
    n_actions = marginals.shape[1]
    g = np.zeros(n_actions)
    for f in factors:
        if i in f.players:
            axis = f.players.index(i)
            vecs = [marginals[p] for p in f.players]
            g += _contract(f.table, vecs, keep=axis) * _scale(marginals, f.players)
        else:
            vecs = [marginals[p] for p in f.players]
            g += float(_contract(f.table, vecs)) * _scale(marginals, set(f.players) | {i})
    return g


def dense_table(factors: Sequence[Factor], n_players: int, n_actions: int) -> np.ndarray:
    """Materialize ``sum(factors)`` as a tensor of shape ``(l,) * n``."""
    _check_dense_size(n_players, n_actions)
    out = np.zeros((n_actions,) * n_players)
    for f in factors:
        shape = [1] * n_players
        order = np.argsort(f.players)
        t = np.transpose(f.table, order)
        for p in f.players:
            shape[p] = n_actions
        out = out + t.reshape(shape)
    return out


def _check_dense_size(n_players: int, n_actions: int):
    if n_players * math.log2(max(n_actions, 2)) > DENSE_BITS_CAP:
        raise DimensionError(
            f"dense tensor over {n_players} players with {n_actions} actions exceeds "
            f"{DENSE_BITS_CAP} bits of profile index; use factored terms"
        )


@dataclass(frozen=True, eq=False)
class FactoredGame:
    """An n-player game with ``n_actions`` actions per player.

    ``utilities[i]`` is the tuple of factors summing to player i's utility and
    ``costs[i][j]`` the factors summing to the j-th cost of player i.  Players
    may carry different numbers of costs.
    """

    n_players: int
    n_actions: int
    utilities: tuple[tuple[Factor, ...], ...]
    costs: tuple[tuple[tuple[Factor, ...], ...], ...] = ()
    utility_range: tuple[float, float] = (0.0, 1.0)
    cost_range: tuple[float, float] = (-1.0, 1.0)

    def __post_init__(self):
        n, l = self.n_players, self.n_actions
        if n < 1 or l < 1:
            raise DimensionError("need at least one player and one action")
        utilities = tuple(tuple(u) for u in self.utilities)
        costs = tuple(tuple(tuple(c) for c in ci) for ci in self.costs) or tuple(() for _ in range(n))
        if len(utilities) != n or len(costs) != n:
            raise DimensionError("one utility and one cost list per player required")
        object.__setattr__(self, "utilities", utilities)
        object.__setattr__(self, "costs", costs)
        for terms, rng in [(u, self.utility_range) for u in utilities] + [
            (c, self.cost_range) for ci in costs for c in ci
        ]:
            lo = hi = 0.0
            for f in terms:
                if any(p < 0 or p >= n for p in f.players):
                    raise DimensionError(f"factor scope {f.players} outside 0..{n - 1}")
                if any(s != l for s in f.table.shape):
                    raise DimensionError(f"factor table shape {f.table.shape} does not match {l} actions")
                flo, fhi = f.bounds()
                lo, hi = lo + flo, hi + fhi
            if lo < rng[0] - ALGEBRA_TOL or hi > rng[1] + ALGEBRA_TOL:
                raise ValueError(f"terms span [{lo}, {hi}], outside declared range {rng}")

    @classmethod
    def from_dense(cls, utility_tensors, cost_tensors=None) -> "FactoredGame":
        """Build from per-player payoff tensors of shape ``(l,) * n``."""
        utility_tensors = [np.asarray(t, dtype=float) for t in utility_tensors]
        n = len(utility_tensors)
        l = utility_tensors[0].shape[0]
        _check_dense_size(n, l)
        everyone = tuple(range(n))
        utilities = tuple((Factor(everyone, t),) for t in utility_tensors)
        if cost_tensors is None:
            cost_tensors = [[] for _ in range(n)]
        costs = tuple(tuple((Factor(everyone, np.asarray(c, dtype=float)),) for c in ci) for ci in cost_tensors)
        return cls(n, l, utilities, costs)

    @property
    def n_costs(self) -> tuple[int, ...]:
        return tuple(len(ci) for ci in self.costs)

    def utility(self, i: int, profile: Sequence[int]) -> float:
        return sum(f.value(profile) for f in self.utilities[i])

    def cost(self, i: int, j: int, profile: Sequence[int]) -> float:
        return sum(f.value(profile) for f in self.costs[i][j])

    def to_dense(self) -> "FactoredGame":
        """Same game with every function collapsed into a single dense factor."""
        n, l = self.n_players, self.n_actions
        everyone = tuple(range(n))
        utilities = tuple((Factor(everyone, dense_table(u, n, l)),) for u in self.utilities)
        costs = tuple(tuple((Factor(everyone, dense_table(c, n, l)),) for c in ci) for ci in self.costs)
        return FactoredGame(n, l, utilities, costs, self.utility_range, self.cost_range)

    def without_costs(self) -> "FactoredGame":
        return FactoredGame(self.n_players, self.n_actions, self.utilities, (), self.utility_range, self.cost_range)


@dataclass(frozen=True, eq=False)
class MixtureStrategy:
    """A correlated strategy given as a weighted mixture of product distributions.

    ``marginals`` has shape ``(components, players, actions)``.
    """

    weights: np.ndarray
    marginals: np.ndarray
    tol: float = field(default=ALGEBRA_TOL, repr=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        x = np.asarray(self.marginals, dtype=float)
        if x.ndim != 3 or x.shape[0] != w.shape[0]:
            raise DimensionError(f"weights {w.shape} do not match marginals {x.shape}")
        if w.size == 0:
            raise ValueError("a mixture needs at least one component")
        if (w < -self.tol).any() or abs(w.sum() - 1.0) > self.tol:
            raise ValueError(f"mixture weights must be a distribution (sum={w.sum()!r})")
        if (x < -self.tol).any() or np.abs(x.sum(axis=2) - 1.0).max() > self.tol:
            raise ValueError("every marginal must lie in the simplex")
        w.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "marginals", x)

    @classmethod
    def product(cls, marginals) -> "MixtureStrategy":
        x = np.asarray(marginals, dtype=float)
        return cls(np.ones(1), x[None])

    @classmethod
    def point_mass(cls, profile: Sequence[int], n_actions: int) -> "MixtureStrategy":
        x = np.zeros((len(profile), n_actions))
        x[np.arange(len(profile)), list(profile)] = 1.0
        return cls.product(x)

    @classmethod
    def from_components(cls, components) -> "MixtureStrategy":
        """``components`` is an iterable of ``(weight, marginals)`` pairs."""
        ws, xs = zip(*[(w, np.asarray(x, dtype=float)) for w, x in components])
        return cls(np.array(ws, dtype=float), np.stack(xs))

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def n_players(self) -> int:
        return self.marginals.shape[1]

    @property
    def n_actions(self) -> int:
        return self.marginals.shape[2]

    def components(self):
        return list(zip(self.weights, self.marginals))

    def to_dense(self) -> np.ndarray:
        """Joint distribution as a tensor of shape ``(l,) * n`` (small games only)."""
        _check_dense_size(self.n_players, self.n_actions)
        out = np.zeros((self.n_actions,) * self.n_players)
        for w, x in self.components():
            t = np.array(w)
            for vec in x:
                t = np.multiply.outer(t, vec)
            out += t
        return out


def _check(game: FactoredGame, z: MixtureStrategy):
    if z.n_players != game.n_players or z.n_actions != game.n_actions:
        raise DimensionError(
            f"strategy over {z.n_players}x{z.n_actions} does not fit game over "
            f"{game.n_players}x{game.n_actions}"
        )


def expected_value(factors: Sequence[Factor], z: MixtureStrategy) -> float:
    return float(sum(w * multilinear_value(factors, x) for w, x in z.components()))


def expected_utility(game: FactoredGame, i: int, z: MixtureStrategy) -> float:
    """u_i(z), computed component by component without enumerating profiles."""
    _check(game, z)
    return expected_value(game.utilities[i], z)


def expected_cost(game: FactoredGame, i: int, j: int, z: MixtureStrategy) -> float:
    _check(game, z)
    if not 0 <= j < len(game.costs[i]):
        raise IndexError(f"player {i} has {len(game.costs[i])} costs, asked for index {j}")
    return expected_value(game.costs[i][j], z)


def is_row_stochastic(phi: np.ndarray, tol: float = 1e-10) -> bool:
    phi = np.asarray(phi, dtype=float)
    return (
        phi.ndim == 2
        and phi.shape[0] == phi.shape[1]
        and bool((phi >= -tol).all())
        and bool(np.abs(phi.sum(axis=1) - 1.0).max() <= tol)
    )


def apply_deviation(phi, i: int, z: MixtureStrategy) -> MixtureStrategy:
    """Distribution induced when player ``i`` passes its recommendation through ``phi``.

    For a product component the result is again a product: player i's marginal
    x becomes ``phi.T @ x``.  Components whose weight drops below 1e-15 are
    pruned and the remaining weights renormalized.
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != (z.n_actions, z.n_actions):
        raise DimensionError(f"deviation of shape {phi.shape} for {z.n_actions} actions")
    if not is_row_stochastic(phi):
        raise ValueError("deviation matrix must be row-stochastic")
    if not 0 <= i < z.n_players:
        raise IndexError(f"no player {i}")
    x = np.array(z.marginals)
    x[:, i, :] = x[:, i, :] @ phi
    keep = z.weights >= PRUNE_WEIGHT
    w = z.weights[keep]
    return MixtureStrategy(w / w.sum(), x[keep])


def marginalize(z: MixtureStrategy, subset: Iterable[int], cap: int = MARGINAL_PLAYER_CAP) -> np.ndarray:
    """Marginal of ``z`` on ``subset``, as a tensor indexed by the subset's actions.

    Axes follow the order of ``subset``.  A single player gives a vector.
    """
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be nonempty")
    if len(subset) > cap:
        raise ValueError(f"marginal over {len(subset)} players exceeds the cap of {cap}")
    if any(p < 0 or p >= z.n_players for p in subset):
        raise IndexError(f"subset {subset} outside 0..{z.n_players - 1}")
    out = np.zeros((z.n_actions,) * len(subset))
    for w, x in z.components():
        t = np.array(w)
        for p in subset:
            t = np.multiply.outer(t, x[p])
        out += t
    return out


def pad_actions(game: FactoredGame, n_actions: int) -> FactoredGame:
    """Embed ``game`` into a larger action set.

    Each new action is dominated: its utility is the lower end of the utility
    range and every cost is -1 there.  Only dense games are supported.
    """
    if n_actions < game.n_actions:
        raise ValueError("cannot shrink the action set")
    dense = game.to_dense()
    n, l = game.n_players, game.n_actions
    lo = game.utility_range[0]
    utils, costs = [], []
    for i in range(n):
        u = np.full((n_actions,) * n, lo)
        u[(slice(0, l),) * n] = dense.utilities[i][0].table
        utils.append(u)
        ci = []
        for c in dense.costs[i]:
            t = np.full((n_actions,) * n, -1.0)
            t[(slice(0, l),) * n] = c[0].table
            ci.append(t)
        costs.append(ci)
    out = FactoredGame.from_dense(utils, costs)
    return FactoredGame(out.n_players, out.n_actions, out.utilities, out.costs, game.utility_range, game.cost_range)
