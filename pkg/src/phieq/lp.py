"""Dense two-phase simplex for the small LPs used by the verifiers.

Pivoting follows Bland's rule (lowest eligible index enters, lowest basic index
leaves among ties), so a given LP always produces the same basis.  After the
tableau terminates the final basis is re-solved with ``numpy.linalg.solve`` and
the answer is certified by primal feasibility, dual feasibility and
complementary slackness residuals, each at most ``LP_TOL`` (relative to the
scale of the data).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LP_TOL = 1e-9
PIVOT_TOLS = (1e-11, 1e-9)  # tried in order; the looser one rescues near-singular bases
REFRESH_ROUNDS = 5


class LPNumericalError(RuntimeError):
    """The simplex stalled or its certificate residuals exceed tolerance."""


@dataclass
class LinearProgram:
    """``sense`` c^T x subject to A_ub x <= b_ub, A_eq x = b_eq, lo <= x <= hi.

    Missing bounds default to ``x >= 0``.  Use ``-np.inf``/``np.inf`` for free
    directions.
    """

    c: np.ndarray
    A_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    sense: str = "min"

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).reshape(-1)
        nv = self.c.size
        self.A_ub, self.b_ub = _rows(self.A_ub, self.b_ub, nv)
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, nv)
        self.lo = np.zeros(nv) if self.lo is None else np.broadcast_to(np.asarray(self.lo, float), (nv,)).copy()
        self.hi = np.full(nv, np.inf) if self.hi is None else np.broadcast_to(np.asarray(self.hi, float), (nv,)).copy()
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for arr in (self.c, self.A_ub, self.b_ub, self.A_eq, self.b_eq):
            if not np.isfinite(arr).all():
                raise ValueError("LP coefficients must be finite")

    @property
    def n_vars(self) -> int:
        return self.c.size


def _rows(A, b, nv):
    if A is None:
        return np.zeros((0, nv)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1)
    if A.shape != (b.size, nv):
        raise ValueError(f"constraint block {A.shape} does not match rhs {b.shape} and {nv} variables")
    return A, b


@dataclass
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    value: float | None = None
    residuals: dict = field(default_factory=dict)
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Standard:
    """min c^T y, M y = r, y >= 0, with the map back to the user's variables."""

    def __init__(self, lp: LinearProgram):
        nv = lp.n_vars
        cols = []  # per original variable: list of (column, sign)
        offset = np.zeros(nv)
        n_y = 0
        extra_ub = []  # (column, bound) rows y_col <= bound
        for j in range(nv):
            lo, hi = lp.lo[j], lp.hi[j]
            if np.isfinite(lo):
                offset[j] = lo
                cols.append([(n_y, 1.0)])
                if np.isfinite(hi):
                    extra_ub.append((n_y, hi - lo))
                n_y += 1
            elif np.isfinite(hi):
                offset[j] = hi
                cols.append([(n_y, -1.0)])
                n_y += 1
            else:
                cols.append([(n_y, 1.0), (n_y + 1, -1.0)])
                n_y += 2
        T = np.zeros((nv, n_y))
        for j, entries in enumerate(cols):
            for col, sign in entries:
                T[j, col] = sign
        self.T, self.offset = T, offset
        # x = offset + T y
        A_ub = lp.A_ub @ T
        b_ub = lp.b_ub - lp.A_ub @ offset
        if extra_ub:
            E = np.zeros((len(extra_ub), n_y))
            for r, (col, bound) in enumerate(extra_ub):
                E[r, col] = 1.0
            A_ub = np.vstack([A_ub, E])
            b_ub = np.concatenate([b_ub, [bnd for _, bnd in extra_ub]])
        A_eq = lp.A_eq @ T
        b_eq = lp.b_eq - lp.A_eq @ offset
        n_ub = A_ub.shape[0]
        M = np.zeros((n_ub + A_eq.shape[0], n_y + n_ub))
        M[:n_ub, :n_y] = A_ub
        M[:n_ub, n_y:] = np.eye(n_ub)
        M[n_ub:, :n_y] = A_eq
        r = np.concatenate([b_ub, b_eq])
        sign = -1.0 if lp.sense == "max" else 1.0
        self.sign = sign
        self.c = np.concatenate([sign * (T.T @ lp.c), np.zeros(n_ub)])
        self.const = sign * float(lp.c @ offset)
        self.M, self.r = M, r

    def to_x(self, y):
        return self.offset + self.T @ y[: self.T.shape[1]]


def _pivot(tab, row, col):
    tab[row] /= tab[row, col]
    pivot_row = tab[row]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, pivot_row)


def _simplex(tab, basis, n_cols, max_iter, pivot_tol):
    """Minimize the objective stored in the last tableau row (reduced costs)."""
    m = tab.shape[0] - 1
    for it in range(max_iter):
        rc = tab[-1, :n_cols]
        entering = np.flatnonzero(rc < -pivot_tol)
        if entering.size == 0:
            return "optimal", it
        col = entering[0]
        column = tab[:m, col]
        positive = column > pivot_tol
        if not positive.any():
            return "unbounded", it
        ratios = np.full(m, np.inf)
        ratios[positive] = tab[:m, -1][positive] / column[positive]
        best = ratios.min()
        ties = np.flatnonzero(ratios <= best + pivot_tol * max(1.0, abs(best)))
        row = min(ties, key=lambda r: basis[r])
        _pivot(tab, row, col)
        basis[row] = col
    raise LPNumericalError(f"simplex did not terminate within {max_iter} pivots")


def _independent_rows(A, b, tol):
    """Indices of a maximal independent subset of the rows of A, or None if A x = b is inconsistent."""
    keep = []
    for row in range(A.shape[0]):
        trial = keep + [row]
        if np.linalg.matrix_rank(A[trial], tol=tol) == len(trial):
            keep = trial
    if len(keep) < A.shape[0]:
        sol, *_ = np.linalg.lstsq(A[keep].T, A.T, rcond=None) if keep else (np.zeros((0, A.shape[0])),)
        implied = sol.T @ b[keep] if keep else np.zeros(A.shape[0])
        if np.abs(implied - b).max() > tol * max(1.0, float(np.abs(b).max())):
            return None
    return keep


def lp_solve(lp: LinearProgram, tol: float = LP_TOL, max_iter: int = 20000) -> LPResult:
    """Solve ``lp``; infeasible and unbounded problems are returned as statuses.

    Raises :class:`LPNumericalError` if the certificate cannot be established
    at any of the pivot tolerances in ``PIVOT_TOLS``.
    """
    for pivot_tol in PIVOT_TOLS:
        try:
            return _solve(lp, tol, max_iter, pivot_tol)
        except LPNumericalError as exc:
            error = exc
    raise error


def _solve(lp, tol, max_iter, pivot_tol):
    std = _Standard(lp)
    M, r, c = std.M, std.r, std.c
    # equality rows (the ones after the slack-carrying rows) may be redundant
    n_ub = M.shape[0] - lp.A_eq.shape[0]
    eq = _independent_rows(M[n_ub:], r[n_ub:], 1e-10)
    if eq is None:
        return LPResult("infeasible")
    rows_kept = list(range(n_ub)) + [n_ub + e for e in eq]
    M, r = M[rows_kept].copy(), r[rows_kept].copy()
    flip = r < 0
    M[flip] *= -1
    r[flip] *= -1
    m, n_y = M.shape
    M0, r0, c0 = M, r, c
    # equilibrate: columns, then rows, to unit max magnitude; y = col_scale * y_scaled
    col_scale = np.abs(M).max(axis=0, initial=0.0)
    col_scale = np.where(col_scale > 0, 1.0 / np.where(col_scale > 0, col_scale, 1.0), 1.0)
    M = M * col_scale
    row_scale = np.abs(M).max(axis=1, initial=0.0)
    row_scale = np.where(row_scale > 0, 1.0 / np.where(row_scale > 0, row_scale, 1.0), 1.0)
    M = M * row_scale[:, None]
    r = r * row_scale
    c = c * col_scale
    scale = max(1.0, float(np.abs(M).max(initial=0.0)), float(np.abs(r).max(initial=0.0)))

    # phase 1: artificial basis
    tab = np.zeros((m + 1, n_y + m + 1))
    tab[:m, :n_y] = M
    tab[:m, n_y : n_y + m] = np.eye(m)
    tab[:m, -1] = r
    tab[-1, :n_y] = -M.sum(axis=0)
    tab[-1, -1] = -r.sum()
    basis = list(range(n_y, n_y + m))
    status, it1 = _simplex(tab, basis, n_y + m, max_iter, pivot_tol)
    if status == "unbounded":
        raise LPNumericalError("phase 1 found no admissible pivot")
    if -tab[-1, -1] > tol * scale * max(1, m):
        return LPResult("infeasible", iterations=it1)

    # drive artificials out of the basis; drop redundant rows
    keep_rows = []
    for row in range(m):
        if basis[row] >= n_y:
            col = int(np.argmax(np.abs(tab[row, :n_y])))
            if abs(tab[row, col]) > 1e-9:
                _pivot(tab, row, col)
                basis[row] = col
                keep_rows.append(row)
        else:
            keep_rows.append(row)
    rows = keep_rows
    tab2 = np.zeros((len(rows) + 1, n_y + 1))
    tab2[:-1, :n_y] = tab[rows, :n_y]
    tab2[:-1, -1] = tab[rows, -1]
    basis = [basis[row] for row in rows]
    tab2[-1, :n_y] = c
    for k, col in enumerate(basis):
        tab2[-1] -= c[col] * tab2[k]
    status, it2 = _simplex(tab2, basis, n_y, max_iter, pivot_tol)
    if status == "unbounded":
        return LPResult("unbounded", iterations=it1 + it2)
    # refresh the tableau from the original data at the current basis and continue
    # until a fresh tableau confirms optimality; this sheds accumulated rounding
    for _ in range(REFRESH_ROUNDS):
        B = M[rows][:, basis]
        try:
            body = np.linalg.solve(B, np.column_stack([M[rows], r[rows]]))
        except np.linalg.LinAlgError:
            break
        tab2 = np.zeros((len(rows) + 1, n_y + 1))
        tab2[:-1] = body
        tab2[-1, :n_y] = c
        for k, col in enumerate(basis):
            tab2[-1] -= c[col] * tab2[k]
        status, it = _simplex(tab2, basis, n_y, max_iter, pivot_tol)
        it2 += it
        if status == "unbounded":
            return LPResult("unbounded", iterations=it1 + it2)
        if it == 0:
            break

    # re-solve the final basis from the original data for accuracy
    Mk, rk = M[rows], r[rows]
    B = Mk[:, basis]
    y = np.zeros(n_y)
    try:
        y[basis] = np.linalg.solve(B, rk) if basis else []
        duals = np.linalg.solve(B.T, c[basis]) if basis else np.zeros(0)
    except np.linalg.LinAlgError:
        # numerically singular basis: keep the tableau values, the residual check decides
        y[:] = 0.0
        y[basis] = tab2[:-1, -1]
        duals = np.linalg.lstsq(B.T, c[basis], rcond=None)[0]
    y[(y < 0) & (y > -pivot_tol * scale)] = 0.0
    # back to the unscaled problem; the certificate is checked there
    y = y * col_scale
    duals = duals * row_scale[rows]
    Mk, rk, c = M0[rows], r0[rows], c0
    scale = max(1.0, float(np.abs(M0).max(initial=0.0)), float(np.abs(r0).max(initial=0.0)))
    reduced = c - Mk.T @ duals
    primal = max(float(np.abs(std.M @ y - std.r).max(initial=0.0)), float(-y.min(initial=0.0)))
    dual = float(-reduced.min(initial=0.0))
    slack = float(np.abs(y * reduced).max(initial=0.0))
    residuals = {"primal": primal, "dual": dual, "complementarity": slack}
    cscale = max(1.0, float(np.abs(c).max(initial=0.0)))
    if primal > tol * scale or dual > tol * cscale * scale or slack > tol * cscale * scale:
        raise LPNumericalError(f"certificate residuals too large: {residuals}")
    x = std.to_x(y)
    value = float(lp.c @ x)
    return LPResult("optimal", x, value, residuals, it1 + it2)
