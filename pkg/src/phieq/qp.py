"""Euclidean projection onto a small polytope {y : G y <= h}.

Dual active-set method of Goldfarb and Idnani specialised to the identity
Hessian: start from the unconstrained minimizer v, repeatedly pick the most
violated row, and move primal and dual variables together so that the KKT
stationarity condition y - v + G_A^T u = 0 holds throughout.  No feasible
starting point is needed and an empty polytope is detected directly.
"""

from __future__ import annotations

import numpy as np

FEAS_TOL = 1e-12


class ProjectionError(RuntimeError):
    pass


class InfeasiblePolytope(ProjectionError):
    pass


def project(v, G, h, max_iter: int | None = None) -> np.ndarray:
    """argmin ||y - v|| subject to G y <= h.

    Raises :class:`InfeasiblePolytope` if no y satisfies the constraints.
    """
    y = np.array(v, dtype=float)
    G = np.atleast_2d(np.asarray(G, dtype=float))
    h = np.asarray(h, dtype=float)
    norms = np.linalg.norm(G, axis=1)
    norms[norms == 0] = 1.0
    active: list[int] = []
    u = np.zeros(0)
    max_iter = max_iter or 10 * (G.shape[0] + y.size)
    for _ in range(max_iter):
        viol = (G @ y - h) / norms
        viol[active] = -np.inf
        p = int(np.argmax(viol))
        if viol[p] <= FEAS_TOL:
            return y
        u_p = 0.0
        for _ in range(max_iter):
            n_p = G[p]
            if active:
                N = G[active].T
                r, *_ = np.linalg.lstsq(N, n_p, rcond=None)
                z = n_p - N @ r
            else:
                r = np.zeros(0)
                z = n_p
            zz = float(z @ n_p)
            full = np.inf if zz <= 1e-14 * norms[p] ** 2 else max(G[p] @ y - h[p], 0.0) / zz
            t_part, drop = np.inf, None
            for idx in np.flatnonzero(r > 1e-14):
                ratio = u[idx] / r[idx]
                if ratio < t_part:
                    t_part, drop = ratio, int(idx)
            t = min(full, t_part)
            if not np.isfinite(t):
                raise InfeasiblePolytope("constraints are inconsistent")
            if np.isfinite(full):
                y = y - t * z
            u = u - t * r
            u_p += t
            if t == full:
                active.append(p)
                u = np.append(u, u_p)
                break
            # partial step: drop the row whose multiplier reached zero, keep working on p
            active.pop(drop)
            u = np.delete(u, drop)
        else:
            break
    raise ProjectionError("projection did not converge")
