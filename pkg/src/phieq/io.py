"""JSON formats for games, strategies, polymatrix games and reduced instances.

Game::

    {"players": n, "actions": l,
     "utility_range": [lo, hi], "cost_range": [lo, hi],
     "utilities": {"type": "dense", "tensors": [T_0, ..., T_{n-1}]}
               | {"type": "edges", "edges": [{"from": p, "to": q, "matrix": M}, ...]}
               | {"type": "factors", "terms": [[{"players": [...], "table": T}, ...], ...]},
     "costs": [[cost, ...], ...]}

``edges`` means player p receives ``M[a_p, a_q]``.  Each cost is a list of
factors ``{"players": [...], "table": T}`` whose sum is the cost; a dense cost
is one factor over all players.  The two range fields are optional.

Mixture::  {"components": [{"w": weight, "marginals": [[...], ...]}, ...]}

Polymatrix::  {"k": k, "n": n, "edges": [{"from": i, "to": j, "matrix": A}, ...]}
(``n`` is optional and defaults to one more than the largest node index.)

Reduced instance::

    {"game": game, "eps_prime": .., "nu": .., "mapping": [[left, right], ...],
     "source": {"polymatrix": polymatrix, "eps": ..},
     "deviations": {"tag": "CCE"}}

Non-finite numbers (an infinite ``nu``, say) are written as the strings
``"inf"``, ``"-inf"`` and ``"nan"``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .equilibrium import DeviationPolytope
from .game import Factor, FactoredGame, MixtureStrategy
from .polymatrix import PolyMatrixGame
from .reduction import ConstrainedInstance


def _unnum(x):
    return math.inf if x == "inf" else float(x)


def _factor_to_dict(f: Factor) -> dict:
    return {"players": list(f.players), "table": f.table.tolist()}


def _factor_from_dict(d) -> Factor:
    return Factor(tuple(int(p) for p in d["players"]), np.asarray(d["table"], dtype=float))


def game_to_dict(game: FactoredGame) -> dict:
    n = game.n_players
    everyone = tuple(range(n))
    if all(len(u) == 1 and u[0].players == everyone for u in game.utilities):
        utilities = {"type": "dense", "tensors": [u[0].table.tolist() for u in game.utilities]}
    elif all(len(f.players) == 2 and f.players[0] == i for i, u in enumerate(game.utilities) for f in u):
        utilities = {
            "type": "edges",
            "edges": [
                {"from": i, "to": f.players[1], "matrix": f.table.tolist()}
                for i, u in enumerate(game.utilities)
                for f in u
            ],
        }
    else:
        utilities = {"type": "factors", "terms": [[_factor_to_dict(f) for f in u] for u in game.utilities]}
    return {
        "players": n,
        "actions": game.n_actions,
        "utility_range": list(game.utility_range),
        "cost_range": list(game.cost_range),
        "utilities": utilities,
        "costs": [[[_factor_to_dict(f) for f in c] for c in ci] for ci in game.costs],
    }


def game_from_dict(d: dict) -> FactoredGame:
    n, l = int(d["players"]), int(d["actions"])
    u = d["utilities"]
    kind = u.get("type")
    everyone = tuple(range(n))
    if kind == "dense":
        utilities = [(Factor(everyone, np.asarray(t, dtype=float)),) for t in u["tensors"]]
    elif kind == "edges":
        utilities = [[] for _ in range(n)]
        for e in u["edges"]:
            p, q = int(e["from"]), int(e["to"])
            utilities[p].append(Factor((p, q), np.asarray(e["matrix"], dtype=float)))
    elif kind == "factors":
        utilities = [[_factor_from_dict(f) for f in terms] for terms in u["terms"]]
    else:
        raise ValueError(f"unknown utility type {kind!r}")
    costs = [[tuple(_factor_from_dict(f) for f in c) for c in ci] for ci in d.get("costs", [])]
    if not costs:
        costs = [[] for _ in range(n)]
    return FactoredGame(
        n,
        l,
        tuple(tuple(x) for x in utilities),
        tuple(tuple(ci) for ci in costs),
        utility_range=tuple(d.get("utility_range", (0.0, 1.0))),
        cost_range=tuple(d.get("cost_range", (-1.0, 1.0))),
    )


def mixture_to_dict(z: MixtureStrategy) -> dict:
    return {"components": [{"w": float(w), "marginals": x.tolist()} for w, x in z.components()]}


def mixture_from_dict(d: dict) -> MixtureStrategy:
    return MixtureStrategy.from_components([(c["w"], c["marginals"]) for c in d["components"]])


def polymatrix_to_dict(g: PolyMatrixGame) -> dict:
    return {
        "k": g.k,
        "n": g.n,
        "edges": [{"from": i, "to": j, "matrix": g.edges[(i, j)].tolist()} for i, j in sorted(g.edges)],
    }


def polymatrix_from_dict(d: dict) -> PolyMatrixGame:
    edges = {(int(e["from"]), int(e["to"])): e["matrix"] for e in d["edges"]}
    n = int(d["n"]) if "n" in d else 1 + max((max(e) for e in edges), default=-1)
    return PolyMatrixGame(n, int(d["k"]), edges)


def instance_to_dict(inst: ConstrainedInstance) -> dict:
    return {
        "game": game_to_dict(inst.game),
        "eps_prime": inst.eps_prime,
        "nu": inst.nu,
        "mapping": [list(m) for m in inst.mapping],
        "source": {"polymatrix": polymatrix_to_dict(inst.source), "eps": inst.source_eps},
        "deviations": {"tag": inst.deviations.tag},
    }


def instance_from_dict(d: dict) -> ConstrainedInstance:
    game = game_from_dict(d["game"])
    tag = d.get("deviations", {}).get("tag", "CCE")
    if tag != "CCE":
        raise ValueError(f"reduced instances use CCE deviations, got {tag!r}")
    return ConstrainedInstance(
        game=game,
        deviations=DeviationPolytope.cce(game.n_actions),
        eps_prime=float(d["eps_prime"]),
        nu=_unnum(d["nu"]),
        mapping=tuple((int(a), int(b)) for a, b in d["mapping"]),
        source=polymatrix_from_dict(d["source"]["polymatrix"]),
        source_eps=float(d["source"]["eps"]),
    )


def _clean(obj):
    """Replace non-finite floats by the strings "inf", "-inf" and "nan"."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return "nan" if math.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def dumps(obj: dict) -> str:
    return json.dumps(_clean(obj), indent=1, sort_keys=True, allow_nan=False)


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def write_json(obj: dict, path) -> None:
    Path(path).write_text(dumps(obj) + "\n")
