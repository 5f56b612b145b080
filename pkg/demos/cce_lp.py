"""Coarse correlated equilibrium of a bimatrix game by linear programming.

Run: python3 demos/cce_lp.py
"""

import numpy as np

from phieq import DeviationPolytope, FactoredGame, cce_feasibility_lp, verify_constrained_equilibrium

# chicken: (dare, chicken) for each player
A = np.array([[0.0, 1.0], [0.25, 0.75]])
game = FactoredGame.from_dense([A, A.T])
z = cce_feasibility_lp(game)
print("support of the CCE:")
for w, x in z.components():
    print(f"  weight {w:.4f}: actions {[int(np.argmax(m)) for m in x]}")
for tag, phi in [("CCE", DeviationPolytope.cce(2)), ("CE", DeviationPolytope.ce(2))]:
    rep = verify_constrained_equilibrium(game, z, phi, eps=0.0, nu=0.0)
    print(f"{tag} regret {rep.max_regret:.2e}: {rep.status}")
