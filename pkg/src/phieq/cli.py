"""Command-line front end.

Exit codes: 0 verdict true, 1 verdict false, 2 promise violation,
3 numerical or solver failure, 4 bad input (unreadable file, invalid flags).

Every run emits a manifest (command, seed, files, tolerances, timing,
verdicts): to the ``--manifest`` path when given, otherwise as one JSON line
on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time

import numpy as np

from . import __version__
from .equilibrium import DeviationPolytope, PromiseViolation, verify_constrained_equilibrium
from .game import MixtureStrategy
from .io import (
    dumps,
    game_from_dict,
    instance_from_dict,
    instance_to_dict,
    mixture_from_dict,
    mixture_to_dict,
    polymatrix_from_dict,
    polymatrix_to_dict,
    read_json,
)
from .lp import LPNumericalError
from .polymatrix import random_instance, verify_eps_nash
from .qp import ProjectionError
from .qvi import QviConfig, QviSolveError, build_qvi, lipschitz_probe, renormalize, solve_qvi
from .reduction import extract_nash, reduce

EXIT_TRUE, EXIT_FALSE, EXIT_PROMISE, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _load(path):
    try:
        return read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _load_game(path):
    """A game file or a reduced-instance file; returns (game, instance or None)."""
    d = _load(path)
    try:
        if "game" in d:
            inst = instance_from_dict(d)
            return inst.game, inst
        return game_from_dict(d), None
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a valid game: {exc}") from exc


def _emit(args, text: str, payload: dict, outputs: list):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(dumps(payload) + "\n")
        outputs.append(args.out)
    if args.json:
        print(dumps(payload))
    elif text:
        print(text)


def _write_csv(path, header, rows, outputs):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    outputs.append(path)


def _solver_config(args) -> QviConfig:
    return QviConfig(step=args.step, max_iter=args.max_iter, restarts=args.restarts, seed=args.seed)


def _trace_rows(trace):
    return [(tag, it, gap) for tag, it, gap in trace]


def cmd_generate(args, ctx):
    try:
        g = random_instance(args.n, args.k, args.deg, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    payload = polymatrix_to_dict(g)
    ctx["verdicts"]["degree"] = g.degree
    if args.out:
        _emit(args, f"wrote {args.out}: n={g.n} k={g.k} deg={g.degree}", payload, ctx["outputs"])
    else:
        print(dumps(payload))
    return EXIT_TRUE


def cmd_reduce(args, ctx):
    d = _load(args.input)
    try:
        g = polymatrix_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.input} is not a valid polymatrix game: {exc}") from exc
    if args.eps is None or args.eps <= 0:
        raise InputError("--eps must be positive")
    inst = reduce(g, args.eps)
    ctx["verdicts"].update(eps_prime=inst.eps_prime, nu=inst.nu, players=inst.game.n_players)
    payload = instance_to_dict(inst)
    text = (
        f"reduced {g.n} nodes (k={g.k}, deg={g.degree}) to {inst.game.n_players} players: "
        f"eps'={inst.eps_prime:g} nu={inst.nu:g}"
    )
    if args.out:
        _emit(args, text, payload, ctx["outputs"])
    else:
        print(dumps(payload))
    return EXIT_TRUE


def _phi_set(name, l):
    return DeviationPolytope.ce(l) if name == "ce" else DeviationPolytope.cce(l)


def cmd_verify(args, ctx):
    game, inst = _load_game(args.game)
    try:
        z = mixture_from_dict(_load(args.strategy))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.strategy} is not a valid mixture: {exc}") from exc
    eps = args.eps if args.eps is not None else (inst.eps_prime if inst else None)
    nu = args.nu if args.nu is not None else (inst.nu if inst else math.inf)
    if eps is None:
        raise InputError("--eps is required for a plain game file")
    tol = args.tol if args.tol is not None else 1e-9
    ctx["tolerances"].update(eps=eps, nu=nu, tol=tol)
    report = verify_constrained_equilibrium(game, z, _phi_set(args.phi, game.n_actions), eps, nu, tol)
    ctx["verdicts"].update(verdict=report.verdict, status=report.status, max_regret=report.max_regret)
    _emit(args, report.table(), report.to_dict(), ctx["outputs"])
    if args.csv:
        rows = [
            (i, p.utility, p.regret, max(p.costs) if p.costs else "") for i, p in enumerate(report.players)
        ]
        _write_csv(args.csv, ["player", "utility", "regret", "max_cost"], rows, ctx["outputs"])
    if report.promise_violation:
        return EXIT_PROMISE
    return EXIT_TRUE if report.verdict else EXIT_FALSE


def _solve_and_check(game, eps, nu, tol, cfg, ctx):
    """QVI solve, renormalize and verify; returns (payload, strategy, report)."""
    q = build_qvi(game, eps, nu)
    ctx["tolerances"].update(eps=eps, nu=nu, tol=tol, nu_prime=q.nu_prime, eps_prime_qvi=q.eps_prime)
    sol = solve_qvi(q, cfg)
    p = renormalize(sol.z, q.n, q.nu_prime)
    z = MixtureStrategy.product(p)
    report = verify_constrained_equilibrium(game, z, DeviationPolytope.cce(game.n_actions), eps, nu, tol)
    payload = {
        "qvi": {"nu_prime": q.nu_prime, "eps_prime": q.eps_prime, "G": q.G, "L": q.L, "d": q.d},
        "solution": sol.to_dict(),
        "strategy": mixture_to_dict(z),
        "report": report.to_dict(),
    }
    ctx["verdicts"].update(gap=sol.gap, qvi_target=-q.eps_prime, equilibrium=report.verdict)
    return payload, sol, report


def cmd_solve_qvi(args, ctx):
    game, inst = _load_game(args.game)
    eps = args.eps if args.eps is not None else (inst.eps_prime if inst else None)
    nu = args.nu if args.nu is not None else (inst.nu if inst else 1.0)
    if eps is None:
        raise InputError("--eps is required for a plain game file")
    tol = args.tol if args.tol is not None else 1e-6
    payload, sol, report = _solve_and_check(game, eps, nu, tol, _solver_config(args), ctx)
    text = (
        f"certified gap {sol.gap:.3e} >= {-sol.eps_prime:.3e} ({sol.method}, {sol.iterations} iterations)\n"
        + report.table()
    )
    _emit(args, text, payload, ctx["outputs"])
    if args.csv:
        _write_csv(args.csv, ["phase", "iteration", "gap"], _trace_rows(sol.trace), ctx["outputs"])
    if report.promise_violation:
        return EXIT_PROMISE
    return EXIT_TRUE if report.verdict else EXIT_FALSE


def cmd_roundtrip(args, ctx):
    d = _load(args.input)
    try:
        g = polymatrix_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{args.input} is not a valid polymatrix game: {exc}") from exc
    if args.eps is None or args.eps <= 0:
        raise InputError("--eps must be positive")
    tol = args.tol if args.tol is not None else 1e-6
    inst = reduce(g, args.eps)
    ctx["verdicts"].update(eps_prime=inst.eps_prime, nu=inst.nu)
    stages = {"reduction": {"eps_prime": inst.eps_prime, "nu": inst.nu, "players": inst.game.n_players}}
    try:
        payload, sol, report = _solve_and_check(inst.game, inst.eps_prime, inst.nu, tol, _solver_config(args), ctx)
    except QviSolveError as exc:
        stages["qvi"] = {"error": str(exc), "best_gap": exc.best_gap}
        if args.csv:
            _write_csv(args.csv, ["phase", "iteration", "gap"], _trace_rows(exc.trace), ctx["outputs"])
        _emit(args, f"solver failed: {exc}", {"stages": stages}, ctx["outputs"])
        return EXIT_FAILURE
    stages.update(payload)
    h = extract_nash(inst, mixture_from_dict(payload["strategy"]))
    nash = verify_eps_nash(g, h, args.eps, tol)
    stages["nash"] = {"profile": h.tolist(), **nash.to_dict()}
    ctx["verdicts"]["nash"] = nash.ok
    text = "\n".join(
        [
            f"reduction: {inst.game.n_players} players, eps'={inst.eps_prime:g}, nu={inst.nu:g}",
            f"qvi: gap {sol.gap:.3e} >= {-sol.eps_prime:.3e} ({sol.method}, {sol.iterations} iterations)",
            report.table(),
            f"extracted profile max regret {nash.max_regret:.3e} against eps={args.eps}: {nash.ok}",
        ]
    )
    _emit(args, text, {"stages": stages}, ctx["outputs"])
    if args.csv:
        _write_csv(args.csv, ["phase", "iteration", "gap"], _trace_rows(sol.trace), ctx["outputs"])
    if report.promise_violation:
        return EXIT_PROMISE
    return EXIT_TRUE if (report.verdict and nash.ok) else EXIT_FALSE


def cmd_probe_lipschitz(args, ctx):
    game, inst = _load_game(args.game)
    eps = args.eps if args.eps is not None else (inst.eps_prime if inst else 0.1)
    nu = args.nu if args.nu is not None else (inst.nu if inst else 0.1)
    q = build_qvi(game, eps, nu)
    res = lipschitz_probe(q, args.samples, args.seed)
    ok = res["empirical_G"] <= res["G"] and res["empirical_L"] <= res["L"]
    ctx["verdicts"].update(res, ok=ok)
    text = "\n".join(
        [
            f"{'quantity':>10} {'empirical':>12} {'declared':>12}",
            f"{'G':>10} {res['empirical_G']:12.4f} {res['G']:12.4f}",
            f"{'L':>10} {res['empirical_L']:12.4f} {res['L']:12.4f}",
            f"within bounds: {ok}",
        ]
    )
    _emit(args, text, {**res, "ok": ok}, ctx["outputs"])
    if args.csv:
        rows = [("G", res["empirical_G"], res["G"]), ("L", res["empirical_L"], res["L"])]
        _write_csv(args.csv, ["quantity", "empirical", "declared"], rows, ctx["outputs"])
    return EXIT_TRUE if ok else EXIT_FALSE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the JSON result here")
    common.add_argument("--manifest", help="write the run manifest here (default: stderr)")
    common.add_argument("--json", action="store_true", help="print JSON instead of the table")
    common.add_argument("--tol", type=float, default=None)

    qvi = argparse.ArgumentParser(add_help=False)
    qvi.add_argument("--step", type=float, default=None)
    qvi.add_argument("--max-iter", type=int, default=QviConfig.max_iter)
    qvi.add_argument("--restarts", type=int, default=QviConfig.restarts)

    parser = _Parser(prog="phieq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("generate", parents=[common], help="random polymatrix game")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--deg", type=int, required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("reduce", parents=[common], help="polymatrix game to constrained CCE instance")
    p.add_argument("input")
    p.add_argument("--eps", type=float, required=True)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify", parents=[common], help="check a constrained equilibrium")
    p.add_argument("game", help="game or reduced-instance JSON")
    p.add_argument("strategy", help="mixture JSON")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--phi", choices=["cce", "ce"], default="cce")
    p.add_argument("--csv", help="per-player regrets as CSV")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("solve-qvi", parents=[common, qvi], help="product equilibrium through the QVI route")
    p.add_argument("game", help="game or reduced-instance JSON")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--csv", help="gap trace as CSV")
    p.set_defaults(func=cmd_solve_qvi)

    p = sub.add_parser("roundtrip", parents=[common, qvi], help="reduce, solve, verify and extract")
    p.add_argument("input", help="polymatrix JSON")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--csv", help="gap trace as CSV")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("probe-lipschitz", parents=[common], help="empirical Lipschitz ratios of the QVI maps")
    p.add_argument("game", help="game or reduced-instance JSON")
    p.add_argument("--eps", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--samples", type=int, default=500)
    p.add_argument("--csv", help="ratios as CSV")
    p.set_defaults(func=cmd_probe_lipschitz)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help, --version and usage errors
        return int(exc.code or 0)
    ctx = {"outputs": [], "tolerances": {}, "verdicts": {}}
    inputs = [getattr(args, k) for k in ("input", "game", "strategy") if getattr(args, k, None)]
    start = time.perf_counter()
    error = None
    try:
        code = args.func(args, ctx)
    except InputError as exc:
        code, error = EXIT_INPUT, str(exc)
    except PromiseViolation as exc:
        code, error = EXIT_PROMISE, f"promise violation: {exc}"
    except (QviSolveError, LPNumericalError, ProjectionError, np.linalg.LinAlgError) as exc:
        code, error = EXIT_FAILURE, f"{type(exc).__name__}: {exc}"
    except ValueError as exc:
        code, error = EXIT_INPUT, str(exc)
    if error:
        print(f"phieq {args.command}: {error}", file=sys.stderr)
    manifest = {
        "command": args.command,
        "argv": argv,
        "version": __version__,
        "seed": args.seed,
        "inputs": inputs,
        "outputs": ctx["outputs"],
        "tolerances": ctx["tolerances"],
        "seconds": round(time.perf_counter() - start, 6),
        "verdicts": ctx["verdicts"],
        "exit_code": code,
        "error": error,
    }
    if args.manifest:
        with open(args.manifest, "w") as fh:
            fh.write(dumps(manifest) + "\n")
    else:
        print(json.dumps(json.loads(dumps(manifest))), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
