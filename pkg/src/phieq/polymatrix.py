"""Polymatrix games: regret, epsilon-Nash verification, generators and desk-scale oracles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .game import ALGEBRA_TOL, DimensionError, Factor, FactoredGame

GRID_BUDGET = 2_000_000


@dataclass(frozen=True, eq=False)
class PolyMatrixGame:
    """Graph game with one ``k x k`` payoff matrix per directed edge.

    ``edges[(i, j)]`` is A^{i,j}: player i's payoff is ``A^{i,j}[a_i, a_j]``
    summed over its neighbours j.  The edge set must be closed under reversal.
    """

    n: int
    k: int
    edges: dict = field(default_factory=dict)

    def __post_init__(self):
        edges = {}
        for (i, j), mat in self.edges.items():
            mat = np.array(mat, dtype=float)
            mat.setflags(write=False)
            edges[(int(i), int(j))] = mat
        object.__setattr__(self, "edges", edges)
        for (i, j), mat in edges.items():
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge {(i, j)} outside 0..{self.n - 1}")
            if (j, i) not in edges:
                raise ValueError(f"edge {(i, j)} has no reverse edge")
            if mat.shape != (self.k, self.k):
                raise DimensionError(f"matrix on {(i, j)} has shape {mat.shape}, expected {(self.k, self.k)}")
            if mat.min() < 0.0 or mat.max() > 1.0:
                raise ValueError(f"matrix on {(i, j)} has entries outside [0, 1]")
        nbrs = [[] for _ in range(self.n)]
        for i, j in sorted(edges):
            nbrs[i].append(j)
        object.__setattr__(self, "_neighbours", tuple(tuple(v) for v in nbrs))
        object.__setattr__(self, "_degree", max((len(v) for v in nbrs), default=0))

    @property
    def degree(self) -> int:
        """Maximum undirected degree deg(G)."""
        return self._degree

    def neighbours(self, i: int) -> tuple[int, ...]:
        return self._neighbours[i]

    def payoff_vector(self, i: int, x) -> np.ndarray:
        """Payoff of each pure action of player i against the profile ``x``."""
        out = np.zeros(self.k)
        for j in self._neighbours[i]:
            out += self.edges[(i, j)] @ x[j]
        return out

    def to_game(self) -> FactoredGame:
        """The same polymatrix game as an edge-factored :class:`FactoredGame`."""
        utilities = tuple(
            tuple(Factor((i, j), self.edges[(i, j)]) for j in self._neighbours[i]) for i in range(self.n)
        )
        return FactoredGame(self.n, self.k, utilities, utility_range=(0.0, float(max(self.degree, 1))))


def check_profile(g: PolyMatrixGame, x, tol: float = ALGEBRA_TOL) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n, g.k):
        raise DimensionError(f"profile of shape {x.shape} for {g.n} players with {g.k} actions")
    if (x < -tol).any() or np.abs(x.sum(axis=1) - 1).max(initial=0.0) > tol:
        raise ValueError("every x_i must lie in the simplex")
    return x


def player_regret(g: PolyMatrixGame, x, i: int) -> float:
    """Best pure-deviation gain of player i; pure deviations suffice by linearity."""
    x = check_profile(g, x)
    v = g.payoff_vector(i, x)
    return float(v.max() - x[i] @ v)


@dataclass
class NashReport:
    ok: bool
    regrets: list
    eps: float

    @property
    def max_regret(self) -> float:
        return max(self.regrets, default=0.0)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "eps": self.eps, "max_regret": self.max_regret, "regrets": list(self.regrets)}


def verify_eps_nash(g: PolyMatrixGame, x, eps: float, tol: float = 1e-9) -> NashReport:
    regrets = [player_regret(g, x, i) for i in range(g.n)]
    return NashReport(max(regrets, default=0.0) <= eps + tol, regrets, eps)


def random_instance(n: int, k: int, max_degree: int, seed: int) -> PolyMatrixGame:
    """Random polymatrix game with uniform [0, 1] entries and degree at most ``max_degree``.

    Candidate edges are visited in a seeded random order and kept while both
    endpoints have spare degree, so the same arguments always give the same game.
    """
    if n < 2 or k < 1:
        raise ValueError("need n >= 2 players and k >= 1 actions")
    if not 1 <= max_degree < n:
        raise ValueError(f"max_degree must be in [1, {n - 1}], got {max_degree}")
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    order = rng.permutation(len(pairs))
    deg = np.zeros(n, dtype=int)
    edges = {}
    for idx in order:
        i, j = pairs[idx]
        if deg[i] < max_degree and deg[j] < max_degree:
            deg[i] += 1
            deg[j] += 1
            edges[(i, j)] = rng.random((k, k))
            edges[(j, i)] = rng.random((k, k))
    return PolyMatrixGame(n, k, edges)


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    """All points of the k-simplex with coordinates in multiples of 1/resolution."""
    pts = []
    for bars in itertools.combinations(range(resolution + k - 1), k - 1):
        parts = np.diff((-1,) + bars + (resolution + k - 1,)) - 1
        pts.append(parts / resolution)
    return np.array(pts, dtype=float)


def brute_force_nash(g: PolyMatrixGame, grid_resolution: int = 20, budget: int = GRID_BUDGET):
    """Grid profile minimizing the maximum player regret.

    Every profile whose marginals are multiples of ``1/grid_resolution`` is
    scored.  Rounding an exact Nash equilibrium to the grid moves each x_j by at
    most k/r in l1 (r the resolution), which changes a regret by at most
    3 * deg(G) * k / r; the returned profile is therefore a
    (3 deg(G) k / r)-Nash equilibrium.

    Returns ``(profile, max_regret)``.
    """
    pts = simplex_grid(g.k, grid_resolution)
    total = len(pts) ** g.n
    if total > budget:
        raise ValueError(f"grid has {total} profiles, over the budget of {budget}")
    best, best_val = None, np.inf
    chunk = max(1, 200_000 // max(1, g.n))
    combos = itertools.product(range(len(pts)), repeat=g.n)
    while True:
        idx = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if idx.size == 0:
            break
        X = pts[idx]  # (P, n, k)
        worst = np.zeros(len(X))
        for i in range(g.n):
            v = np.zeros((len(X), g.k))
            for j in g.neighbours(i):
                v += X[:, j, :] @ g.edges[(i, j)].T
            reg = v.max(axis=1) - np.einsum("pk,pk->p", X[:, i, :], v)
            worst = np.maximum(worst, reg)
        pos = int(worst.argmin())
        if worst[pos] < best_val - 1e-15:
            best_val, best = float(worst[pos]), X[pos].copy()
    return best, best_val


def support_enumeration_nash(g: PolyMatrixGame, tol: float = 1e-9):
    """Exact Nash equilibria by enumerating support profiles.

    Polymatrix payoffs are linear in each neighbour separately, so for fixed
    supports the indifference conditions form one square linear system in the
    strategies and the values.  Yields every equilibrium found, smallest
    supports first.
    """
    n, k = g.n, g.k
    supports = [s for size in range(1, k + 1) for s in itertools.combinations(range(k), size)]
    for choice in sorted(itertools.product(supports, repeat=n), key=lambda c: sum(map(len, c))):
        offs = np.cumsum([0] + [len(s) for s in choice])
        nx = offs[-1]
        size = nx + n
        M = np.zeros((size, size))
        rhs = np.zeros(size)
        row = 0
        for i, s in enumerate(choice):
            for a in s:
                for j in g.neighbours(i):
                    A = g.edges[(i, j)]
                    M[row, offs[j] : offs[j + 1]] += A[a, list(choice[j])]
                M[row, nx + i] = -1.0
                row += 1
        for i in range(n):
            M[row, offs[i] : offs[i + 1]] = 1.0
            rhs[row] = 1.0
            row += 1
        sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
        if np.abs(M @ sol - rhs).max() > tol:
            continue
        x = np.zeros((n, k))
        for i, s in enumerate(choice):
            x[i, list(s)] = sol[offs[i] : offs[i + 1]]
        if (x < -tol).any():
            continue
        x = np.clip(x, 0.0, None)
        x /= x.sum(axis=1, keepdims=True)
        if max(player_regret(g, x, i) for i in range(n)) <= tol:
            yield x


def matching_pennies() -> PolyMatrixGame:
    """Two players, one edge: player 0 wants to match, player 1 to mismatch."""
    return PolyMatrixGame(2, 2, {(0, 1): [[1, 0], [0, 1]], (1, 0): [[0, 1], [1, 0]]})
