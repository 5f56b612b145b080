"""Reduce a small polymatrix game, certify the witness, and extract a Nash profile.

Run: python3 demos/reduction_roundtrip.py
"""

import numpy as np

from phieq import (
    DeviationPolytope,
    extract_nash,
    random_instance,
    reduce,
    support_enumeration_nash,
    team_utilities,
    verify_constrained_equilibrium,
    verify_eps_nash,
    witness_from_nash,
)

eps = 0.5
g = random_instance(n=3, k=2, max_degree=2, seed=7)
inst = reduce(g, eps)
print(f"polymatrix: {g.n} nodes, {g.k} actions, degree {g.degree}")
print(f"reduced game: {inst.game.n_players} players, eps'={inst.eps_prime:.4g}, nu={inst.nu:.4g}")

# the two teams always split the total utility to zero
rng = np.random.default_rng(0)
for _ in range(3):
    a = tuple(int(v) for v in rng.integers(g.k, size=inst.game.n_players))
    uL, uR = team_utilities(inst, a)
    print(f"  profile {a}: u_L + u_R = {uL + uR:+.1e}")

x = next(support_enumeration_nash(g))
print("exact Nash profile:", np.round(x, 4).tolist())
z = witness_from_nash(inst, x)
rep = verify_constrained_equilibrium(inst.game, z, DeviationPolytope.cce(g.k), inst.eps_prime, inst.nu, tol=1e-9)
print(f"witness: max regret {rep.max_regret:.2e}, max cost {rep.max_cost:.2e}, verdict {rep.status}")

back = extract_nash(inst, z)
print("extracted profile:", np.round(back, 4).tolist())
print("eps-Nash:", verify_eps_nash(g, back, eps).ok)
