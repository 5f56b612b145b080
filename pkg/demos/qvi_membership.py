"""Solve a constrained game through its QVI and check the recovered equilibrium.

Run: python3 demos/qvi_membership.py
"""

import numpy as np

from phieq import (
    DeviationPolytope,
    FactoredGame,
    MixtureStrategy,
    build_qvi,
    qvi_gap,
    renormalize,
    solve_qvi,
    verify_constrained_equilibrium,
)

rng = np.random.default_rng(3)
n, l = 2, 3
utils = [rng.random((l,) * n) for _ in range(n)]
# each player pays for using action 0 while the other also plays 0
costs = []
for i in range(n):
    c = np.full((l,) * n, -0.5)
    c[(0,) * n] = 0.8
    costs.append([c])
game = FactoredGame.from_dense(utils, costs)

eps, nu = 0.2, 0.3
inst = build_qvi(game, eps, nu)
print(f"QVI: dimension {inst.d}, {inst.m} cost rows per player, nu'={inst.nu_prime:.3g}, G={inst.G:g}, L={inst.L:.3g}")

sol = solve_qvi(inst)
print(f"solver: method {sol.method}, {sol.iterations} iterations, gap {sol.gap:.2e} (target {-sol.eps_prime:.3g})")
print(f"recomputed gap: {qvi_gap(inst, sol.z):.2e}")

p = renormalize(sol.z, n, inst.nu_prime)
print("renormalized marginals:", np.round(p, 4).tolist())
rep = verify_constrained_equilibrium(game, MixtureStrategy.product(p), DeviationPolytope.cce(l), eps, nu, tol=1e-6)
print(rep.table())
