"""Quasi-variational inequality route to product-distribution equilibria.

A product strategy p = (p_1, ..., p_n) is flattened into z in [0, 1]^(l n).
The operator stacks negative utility gradients, F(z)_i = -d u_i / d p_i, and
the moving feasible set is

    Q_nu(zt) = {z in [0, 1]^d : A(zt) z <= b + nu},

where A is block diagonal with per-player blocks [D_i(zt); 1^T; -1^T] and
b_i = [0_m; 1; -1].  Row j of D_i(zt) is the conditional cost vector
c_i^j(zt), so D_i(zt) z^i <= 0 says that player i's costs are met against the
other players' blocks of zt.  The relaxation never touches the hypercube.

A point z in Q_nu'(z) whose gap min_{y in Q_nu'(z)} F(z)^T (y - z) is at least
-eps' renormalizes (p_i = z^i / |z^i|_1) to a nu-safe product distribution
from which no safe deviation gains more than eps, when
nu' = min(eps/2, nu^2/(2n)) and eps' = (eps/2)(1 - n nu').
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .equilibrium import PromiseViolation
from .game import DimensionError, FactoredGame, conditional_payoff
from .lp import LinearProgram, lp_solve
from .polymatrix import simplex_grid
from .qp import InfeasiblePolytope, project

FEAS_TOL = 1e-9


class QviSolveError(RuntimeError):
    """The solver exhausted its budget without a gap-certified point."""

    def __init__(self, message, best_z=None, best_gap=-math.inf, trace=None):
        super().__init__(message)
        self.best_z = best_z
        self.best_gap = best_gap
        self.trace = trace or []


def flatten(p) -> np.ndarray:
    """Stack per-player marginals (shape (n, l)) into one vector."""
    return np.asarray(p, dtype=float).reshape(-1).copy()


def unflatten(z, n_players: int) -> np.ndarray:
    """Split z into ``n_players`` blocks; blocks need not sum to one."""
    z = np.asarray(z, dtype=float)
    if z.size % n_players:
        raise DimensionError(f"vector of length {z.size} does not split into {n_players} blocks")
    return z.reshape(n_players, -1).copy()


def membership_parameters(eps: float, nu: float, n_players: int) -> tuple[float, float]:
    """(nu', eps') = (min(eps/2, nu^2/(2n)), (eps/2)(1 - n nu'))."""
    nu_prime = min(eps / 2, nu * nu / (2 * n_players))
    return nu_prime, eps / 2 * (1 - n_players * nu_prime)


@dataclass(frozen=True, eq=False)
class QviInstance:
    game: FactoredGame
    eps: float  # target accuracy of the recovered equilibrium
    nu: float  # target safety slack of the recovered equilibrium
    nu_prime: float
    eps_prime: float
    use_costs: bool = True

    @property
    def n(self) -> int:
        return self.game.n_players

    @property
    def l(self) -> int:
        return self.game.n_actions

    @property
    def d(self) -> int:
        return self.n * self.l

    @property
    def m(self) -> int:
        """Rows per D_i block: the largest cost count, shorter lists padded with zeros."""
        return max(self.game.n_costs, default=0) if self.use_costs else 0

    @property
    def G(self) -> float:
        """Declared Lipschitz constant of F: n l^(n+1)."""
        return float(self.n * self.l ** (self.n + 1))

    @property
    def L(self) -> float:
        """Declared Lipschitz constant of the correspondence: 2 l^(n+2) n^2 sqrt(m)."""
        return float(2 * self.l ** (self.n + 2) * self.n**2 * math.sqrt(self.m))

    def blocks(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.d,):
            raise DimensionError(f"expected a vector of length {self.d}, got shape {z.shape}")
        return z.reshape(self.n, self.l)


def build_qvi(game: FactoredGame, eps: float, nu: float) -> QviInstance:
    """QVI instance whose certified solutions renormalize to (eps, nu) equilibria.

    For ``nu >= 1`` the cost rows are dropped: no cost can exceed 1.
    """
    if eps <= 0 or nu <= 0:
        raise ValueError("eps and nu must be positive")
    nu_prime, eps_prime = membership_parameters(eps, nu, game.n_players)
    return QviInstance(game, float(eps), float(nu), nu_prime, eps_prime, use_costs=nu < 1)


def eval_F(inst: QviInstance, z) -> np.ndarray:
    x = inst.blocks(z)
    return -np.concatenate([conditional_payoff(inst.game.utilities[i], i, x) for i in range(inst.n)])


def cost_block(inst: QviInstance, i: int, zt) -> np.ndarray:
    """D_i(zt), shape (m, l)."""
    x = inst.blocks(zt)
    D = np.zeros((inst.m, inst.l))
    if inst.use_costs:
        for j, c in enumerate(inst.game.costs[i]):
            D[j] = conditional_payoff(c, i, x)
    return D


def player_block(inst: QviInstance, i: int, zt) -> tuple[np.ndarray, np.ndarray]:
    """A_i(zt) and b_i, the (m + 2) rows acting on block i."""
    ones = np.ones((1, inst.l))
    A_i = np.vstack([cost_block(inst, i, zt), ones, -ones])
    b_i = np.concatenate([np.zeros(inst.m), [1.0, -1.0]])
    return A_i, b_i


def eval_correspondence(inst: QviInstance, zt) -> tuple[np.ndarray, np.ndarray]:
    """(A(zt), b) with A of shape (n (m + 2), d); the relaxation is not added."""
    rows = inst.m + 2
    A = np.zeros((inst.n * rows, inst.d))
    b = np.zeros(inst.n * rows)
    for i in range(inst.n):
        A_i, b_i = player_block(inst, i, zt)
        A[i * rows : (i + 1) * rows, i * inst.l : (i + 1) * inst.l] = A_i
        b[i * rows : (i + 1) * rows] = b_i
    return A, b


def violation(inst: QviInstance, zt, z) -> float:
    """Largest violation of z in Q_nu'(zt), hypercube included (<= 0 means feasible)."""
    z = np.asarray(z, dtype=float)
    A, b = eval_correspondence(inst, zt)
    return float(max((A @ z - b - inst.nu_prime).max(), (-z).max(), (z - 1).max()))


def qvi_gap(inst: QviInstance, z, tol: float = FEAS_TOL) -> float:
    """min over y in Q_nu'(z) of F(z)^T (y - z), by one LP.

    ``z`` must itself lie in Q_nu'(z).  Raises :class:`PromiseViolation` if the
    correspondence is empty at z.
    """
    z = np.asarray(z, dtype=float)
    if violation(inst, z, z) > tol:
        raise ValueError("z is not in its own feasible set Q_nu'(z)")
    F = eval_F(inst, z)
    A, b = eval_correspondence(inst, z)
    res = lp_solve(LinearProgram(F, A_ub=A, b_ub=b + inst.nu_prime, lo=np.zeros(inst.d), hi=np.ones(inst.d)))
    if res.status == "infeasible":
        raise PromiseViolation("Q_nu'(z) is empty")
    return float(res.value - F @ z)


def project_onto(inst: QviInstance, zt, v) -> np.ndarray:
    """Euclidean projection of v onto Q_nu'(zt); separable across player blocks."""
    v = inst.blocks(v)
    out = np.zeros_like(v)
    eye = np.eye(inst.l)
    for i in range(inst.n):
        A_i, b_i = player_block(inst, i, zt)
        G = np.vstack([A_i, -eye, eye])
        h = np.concatenate([b_i + inst.nu_prime, np.zeros(inst.l), np.ones(inst.l)])
        try:
            out[i] = project(v[i], G, h)
        except InfeasiblePolytope as exc:
            raise PromiseViolation(f"Q_nu'(z) is empty in block {i}") from exc
    return out.reshape(-1)


def renormalize(z, n_players: int, nu_prime: float) -> np.ndarray:
    """Product distribution p_i = z^i / |z^i|_1, shape (n, l).

    Every block mass must lie in [1 - nu', 1 + nu'].
    """
    x = unflatten(z, n_players)
    if (x < -FEAS_TOL).any():
        raise ValueError("blocks must be nonnegative")
    mass = x.sum(axis=1)
    bad = np.flatnonzero((mass < 1 - nu_prime - 1e-12) | (mass > 1 + nu_prime + 1e-12))
    if bad.size:
        raise ValueError(
            f"block masses {mass[bad].tolist()} of players {bad.tolist()} outside [1 - {nu_prime}, 1 + {nu_prime}]"
        )
    return np.clip(x, 0.0, None) / mass[:, None]


@dataclass
class QviConfig:
    step: float | None = None  # None: schedule 0.5 / 4^r per restart, floored at 1 / (2 G)
    max_iter: int = 1000
    restarts: int = 5
    seed: int = 0
    check_every: int = 20
    polish_steps: int = 20
    grid_budget: int = 20000
    grid_dim_cap: int = 12
    dim_cap: int = 64


@dataclass
class QviSolution:
    z: np.ndarray
    gap: float
    eps_prime: float
    method: str
    iterations: int
    restarts: int
    trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "z": self.z.tolist(),
            "gap": self.gap,
            "eps_prime": self.eps_prime,
            "method": self.method,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "trace": [list(t) for t in self.trace],
        }


def _polish(inst, z, steps):
    """Iterate z <- proj_{Q(z)}(z) until z lies in its own feasible set."""
    for _ in range(steps):
        if violation(inst, z, z) <= FEAS_TOL * 0.1:
            return z
        z = project_onto(inst, z, z)
    return z if violation(inst, z, z) <= FEAS_TOL * 0.1 else None


def _certify(inst, z):
    zp = _polish(inst, z, 20)
    if zp is None:
        return None, -math.inf
    return zp, qvi_gap(inst, zp)


def _iterate(inst, z, step, cfg, scheme, trace, tag):
    best_z, best_gap = None, -math.inf
    for it in range(1, cfg.max_iter + 1):
        if scheme == "extragradient":
            half = project_onto(inst, z, z - step * eval_F(inst, z))
            z_new = project_onto(inst, z, z - step * eval_F(inst, half))
        else:
            z_new = project_onto(inst, z, z - step * eval_F(inst, z))
        moved = float(np.abs(z_new - z).max())
        z = z_new
        if it % cfg.check_every == 0 or moved < 1e-12:
            cand, gap = _certify(inst, z)
            trace.append((tag, it, gap))
            if gap > best_gap:
                best_z, best_gap = cand, gap
            if gap >= -inst.eps_prime:
                return best_z, best_gap, it
            if moved < 1e-12:
                break
    return best_z, best_gap, cfg.max_iter


def _grid_search(inst, cfg, trace):
    n, l = inst.n, inst.l
    res = 1
    while True:
        size = len(simplex_grid(l, res + 1)) ** n
        if size > cfg.grid_budget:
            break
        res += 1
    pts = simplex_grid(l, res)
    best_z, best_gap = None, -math.inf
    for idx in itertools.product(range(len(pts)), repeat=n):
        z = pts[list(idx)].reshape(-1)
        if violation(inst, z, z) > FEAS_TOL * 0.1:
            continue
        gap = qvi_gap(inst, z)
        if gap > best_gap:
            best_z, best_gap = z, gap
            if gap >= -inst.eps_prime:
                break
    trace.append(("grid", res, best_gap))
    return best_z, best_gap


def solve_qvi(inst: QviInstance, config: QviConfig | None = None) -> QviSolution:
    """Find z in Q_nu'(z) with certified gap >= -eps'.

    Runs the projected fixed-point iteration z <- proj_{Q(z)}(z - step F(z))
    from the uniform profile, then restarts from seeded random profiles with
    smaller steps, alternating with an extragradient variant; then, for
    d <= 12, scans a product grid.  The default step for restart r is
    0.5 / 4^r, never below 1 / (2 G).  Only LP-certified points are returned; otherwise
    :class:`QviSolveError` carries the best gap seen.
    """
    cfg = config or QviConfig()
    if inst.d > cfg.dim_cap:
        raise ValueError(f"dimension {inst.d} exceeds the desk-scale cap {cfg.dim_cap}")
    floor = 1.0 / (2 * inst.G)
    rng = np.random.default_rng(cfg.seed)
    trace = []
    best_z, best_gap = None, -math.inf
    total_iters = 0
    starts = [np.full(inst.d, 1.0 / inst.l)]
    for _ in range(cfg.restarts):
        starts.append(rng.dirichlet(np.ones(inst.l), size=inst.n).reshape(-1))
    for r, z0 in enumerate(starts):
        scheme = "projection" if r % 2 == 0 else "extragradient"
        step = cfg.step if cfg.step is not None else max(0.5 / 4**r, floor)
        z, gap, its = _iterate(inst, z0, step, cfg, scheme, trace, f"{scheme}-{r}")
        total_iters += its
        if gap > best_gap:
            best_z, best_gap = z, gap
        if gap >= -inst.eps_prime:
            return QviSolution(z, gap, inst.eps_prime, scheme, total_iters, r, trace)
    if inst.d <= cfg.grid_dim_cap:
        z, gap = _grid_search(inst, cfg, trace)
        if gap > best_gap:
            best_z, best_gap = z, gap
        if gap >= -inst.eps_prime:
            return QviSolution(z, gap, inst.eps_prime, "grid", total_iters, len(starts) - 1, trace)
    raise QviSolveError(
        f"no certified point: best gap {best_gap:.3e} against target {-inst.eps_prime:.3e}",
        best_z,
        best_gap,
        trace,
    )


def lipschitz_probe(inst: QviInstance, n_samples: int = 200, seed: int = 0) -> dict:
    """Largest observed ratios for F and for zt -> A(zt) z over random pairs in [0, 1]^d."""
    rng = np.random.default_rng(seed)
    g_max = l_max = 0.0
    for _ in range(n_samples):
        a, b = rng.random(inst.d), rng.random(inst.d)
        dist = np.linalg.norm(a - b)
        if dist == 0:
            continue
        g_max = max(g_max, np.linalg.norm(eval_F(inst, a) - eval_F(inst, b)) / dist)
        z = rng.random(inst.d)
        Aa, _ = eval_correspondence(inst, a)
        Ab, _ = eval_correspondence(inst, b)
        l_max = max(l_max, np.linalg.norm((Aa - Ab) @ z) / dist)
    return {"empirical_G": float(g_max), "empirical_L": float(l_max), "G": inst.G, "L": inst.L}


def mvt_probe(
    bound: float, rows: int, cols: int, dim: int, n_samples: int = 200, seed: int = 0, family: str = "sine"
) -> dict:
    """Ratio ||(M(s) - M(s')) z|| / ||s - s'|| for matrix families with |dM_ab/ds_k| <= bound.

    ``family="sine"`` uses M(s)_ab = bound * sum_k sign_abk sin(s_k + shift_abk)
    (random signs and shifts); ``family="linear"`` uses M(s)_ab = bound * sum_k s_k,
    which attains the worst case along s - s' = t * 1 with z = 1.  Here M is
    rows x cols, s ranges over [0, 1]^dim and z over [0, 1]^cols.

    Returns the observed maximum, ``bound`` = C rows sqrt(cols dim) and
    ``bound_general`` = C cols sqrt(rows dim).  The second always holds; the
    first only when rows >= cols.
    """
    rng = np.random.default_rng(seed)
    signs = rng.choice([-1.0, 1.0], size=(rows, cols, dim))
    shifts = rng.uniform(0, 2 * np.pi, size=(rows, cols, dim))

    def M(s):
        if family == "linear":
            return np.full((rows, cols), bound * s.sum())
        return bound * (signs * np.sin(s[None, None, :] + shifts)).sum(axis=2)

    worst = 0.0
    for t in range(n_samples):
        if family == "linear" and t == 0:
            s, u, z = np.zeros(dim), np.ones(dim), np.ones(cols)
        else:
            s, u, z = rng.random(dim), rng.random(dim), rng.random(cols)
        dist = np.linalg.norm(s - u)
        if dist == 0:
            continue
        worst = max(worst, np.linalg.norm((M(s) - M(u)) @ z) / dist)
    return {
        "ratio": float(worst),
        "bound": float(bound * rows * math.sqrt(cols * dim)),
        "bound_general": float(bound * cols * math.sqrt(rows * dim)),
    }


def cce_equivalent(phi, marginal) -> np.ndarray:
    """Constant-row deviation whose every row is phi^T marginal.

    Applied to a product distribution it has the same effect as ``phi``.
    """
    row = np.asarray(phi, dtype=float).T @ np.asarray(marginal, dtype=float)
    return np.tile(row, (row.size, 1))


def replace_block(inst: QviInstance, z, i: int, block) -> np.ndarray:
    """z with player i's block swapped for ``block``."""
    x = inst.blocks(z).copy()
    x[i] = block
    return x.reshape(-1)
