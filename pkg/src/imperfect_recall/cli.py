"""Command-line interface.

The machine-readable report goes to stdout as ``key: value`` lines; a short
human summary goes to stderr. Exit codes: 0 success, 1 verification failed,
2 usage error, 3 input error, 4 budget exceeded.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .builtins import builtin_game, builtin_names
from .formats import (
    FormatError,
    emit_report,
    format_number,
    format_polynomial,
    game_hash,
    gradient_field,
    parse_game,
    parse_number,
    parse_source,
    parse_strategy_text,
    serialize_game,
)
from .game import GameError, InvalidStrategy, UnreachedInfoSet, info_set_stats
from .limits import BudgetExceeded

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT, EXIT_BUDGET = 0, 1, 2, 3, 4


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _read(path: str, stdin) -> str:
    if path == "-":
        return stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _load_game(arg: str, stdin):
    if arg != "-" and not os.path.exists(arg):
        if arg in builtin_names() or arg == "trivial":
            return builtin_game(arg)
        raise InputError(f"{arg} is neither a file nor a built-in game ({', '.join(builtin_names())})")
    return parse_game(_read(arg, stdin))


def _load_strategy(arg: str, tree, stdin, exact=None):
    text = _read(arg, stdin) if (arg == "-" or os.path.exists(arg)) else arg
    parsed = parse_strategy_text(text, tree, exact)
    for w in parsed.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return parsed.strategy


def _number(text: str):
    try:
        return parse_number(text, exact=True)
    except FormatError:
        raise InputError(f"malformed number {text!r}") from None


def _solver_config(args):
    from .solvers import SolverConfig

    values = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot load config {args.config}: {exc}") from None
        known = {f.name for f in dataclasses.fields(SolverConfig)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise InputError(f"unknown config keys {unknown}")
    for flag in ("seed", "max_iters", "tol", "restarts", "grid_k", "node_budget"):
        v = getattr(args, flag, None)
        if v is not None:
            values[flag] = v
    try:
        return SolverConfig(**values)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad solver configuration: {exc}") from None


def _float(x) -> str:
    return format_number(float(x))


# --- subcommands -----------------------------------------------------------------------


def cmd_eval(args, out, err, stdin):
    from .game import expected_utility

    tree = _load_game(args.game, stdin)
    mu = _load_strategy(args.strategy, tree, stdin)
    value = expected_utility(tree, mu)
    pairs = [("game", game_hash(tree)), ("strategy", mu), ("value", value)]
    for i, s in enumerate(tree.info_sets):
        st = info_set_stats(tree, mu, i)
        pairs += [(f"reach.{s.label}", st.reach_prob), (f"frequency.{s.label}", st.visit_freq)]
    out.write(emit_report(pairs))
    err.write(f"ex-ante utility {format_number(value)}\n")
    return EXIT_OK


def cmd_poly(args, out, err, stdin):
    from .polynomial import lipschitz_bound, lipschitz_bound_linf, utility_polynomial

    tree = _load_game(args.game, stdin)
    p = utility_polynomial(tree)
    pairs = [
        ("game", game_hash(tree)),
        ("shape", list(p.shape)),
        ("polynomial", format_polynomial(p)),
        ("terms", len(p)),
        ("degree", p.degree),
        ("lipschitz", lipschitz_bound(p)),
        ("lipschitz_linf", lipschitz_bound_linf(p)),
    ]
    if args.field:
        cfg = _solver_config(args)
        for k, (x, d) in enumerate(gradient_field(p, args.field, cfg.budget)):
            pairs.append((f"field.{k}", " ".join(_float(v) for v in x) + " | " + " ".join(_float(v) for v in d)))
    out.write(emit_report(pairs))
    err.write(format_polynomial(p) + "\n")
    return EXIT_OK


def cmd_beliefs(args, out, err, stdin):
    from .beliefs import gdh_beliefs, gt_beliefs

    tree = _load_game(args.game, stdin)
    mu = _load_strategy(args.strategy, tree, stdin)
    try:
        i = tree.info_set_index(args.infoset)
    except (KeyError, IndexError, GameError) as exc:
        raise InputError(f"unknown info set {args.infoset}") from exc
    table = (gt_beliefs if args.system == "gt" else gdh_beliefs)(tree, mu, i)
    label = lambda n: tree.nodes[n].label
    pairs = [("game", game_hash(tree)), ("infoset", tree.info_sets[i].label), ("system", args.system)]
    pairs += [(f"node.{label(h)}", b) for h, b in sorted(table.node_beliefs.items())]
    pairs += [(f"history.{label(z)}", b) for z, b in sorted(table.history_beliefs.items())]
    pairs += [(f"joint.{label(h)}.{label(z)}", b) for (h, z), b in sorted(table.joint_beliefs.items())]
    out.write(emit_report(pairs))
    err.write(f"{args.system.upper()} beliefs over {len(table.node_beliefs)} node(s)\n")
    return EXIT_OK


def cmd_solve(args, out, err, stdin):
    from .solvers import (
        edt_best_response_dynamics,
        projected_gradient_kkt,
        solve_exante,
    )

    tree = _load_game(args.game, stdin)
    cfg = _solver_config(args)
    method = {"kkt": projected_gradient_kkt, "exante": solve_exante, "edt-dynamics": edt_best_response_dynamics}
    res = method[args.method](tree, cfg)
    pairs = [
        ("game", game_hash(tree)),
        ("method", args.method),
        ("strategy", tuple(tuple(float(v) for v in b) for b in res.strategy)),
        ("value", float(res.value)),
        ("kkt_residual", float(res.kkt_residual)),
        ("iterations", res.iterations),
        ("status", res.status),
    ]
    out.write(emit_report(pairs))
    err.write(f"{args.method}: value {float(res.value):.10g}, residual {float(res.kkt_residual):.3g}, {res.status}\n")
    return EXIT_OK if res.status == "converged" else EXIT_BUDGET


def cmd_verify(args, out, err, stdin):
    from .equilibrium import verify_cdt_approx, verify_cdt_well_supported, verify_edt

    tree = _load_game(args.game, stdin)
    mu = _load_strategy(args.strategy, tree, stdin)
    eps = _number(args.eps)
    if args.kind == "cdt":
        rep = verify_cdt_approx(tree, mu, eps)
    elif args.kind == "cdt-ws":
        rep = verify_cdt_well_supported(tree, mu, eps)
    else:
        rep = verify_edt(tree, mu, eps, _solver_config(args))
    pairs = [("game", game_hash(tree)), ("kind", rep.kind), ("eps", eps)]
    pairs += [(f"gap.{k}", v) for k, v in rep.gaps.items()]
    pairs += [("max_gap", rep.max_gap), ("certificate_gap", rep.certificate_gap), ("verdict", rep.verdict)]
    if rep.note:
        pairs.append(("note", rep.note))
    out.write(emit_report(pairs))
    err.write(f"{args.kind}: {'pass' if rep.verdict else 'FAIL'} (max gap {_float(rep.max_gap)}, eps {format_number(eps)})\n")
    return EXIT_OK if rep.verdict else EXIT_FAIL


def cmd_certify(args, out, err, stdin):
    from .equilibrium import kkt_certificate

    tree = _load_game(args.game, stdin)
    mu = _load_strategy(args.strategy, tree, stdin)
    cert = kkt_certificate(tree, mu, _number(args.eps), _number(args.support_tol))
    pairs = [("game", game_hash(tree))]
    for s, t, k in zip(tree.info_sets, cert.tau, cert.kappa):
        pairs += [(f"kappa.{s.label}", k), (f"tau.{s.label}", list(t))]
    pairs += [("residual", cert.residual), ("cs_violation", cert.cs_violation),
              ("eps", cert.epsilon), ("valid", cert.valid)]
    out.write(emit_report(pairs))
    err.write(f"KKT certificate {'valid' if cert.valid else 'INVALID'} (residual {_float(cert.residual)})\n")
    return EXIT_OK if cert.valid else EXIT_FAIL


def cmd_reduce(args, out, err, stdin):
    from .reductions import rebuild

    if args.kind in ("kkt-cube", "polytensor", "polytensor-1is") and args.eps is None:
        raise _UsageError(f"reduce {args.kind} needs --eps")
    source = parse_source(args.kind, _read(args.source, stdin))
    eps = _number(args.eps) if args.eps is not None else None
    res = rebuild(args.kind, source, eps)
    out.write(serialize_game(res.game))
    err.write(f"{args.kind}: {res.game.num_nodes} nodes, {len(res.game.info_sets)} info set(s)")
    if res.precision_out is not None:
        err.write(f", solve to precision {float(res.precision_out):.6g}")
    err.write("\n")
    for note in res.notes:
        err.write(note + "\n")
    return EXIT_OK


def cmd_recover(args, out, err, stdin):
    from .reductions import rebuild, recover

    tree = parse_game(_read(args.out, stdin))
    kind = tree.meta_value("reduction")
    if kind is None:
        raise InputError("game file carries no reduction provenance")
    src_text = "\n".join(v for k, v in tree.meta if k == "source") + "\n"
    eps = tree.meta_value("eps")
    res = rebuild(kind, parse_source(kind, src_text), _number(eps) if eps is not None else None)
    if game_hash(res.game) != game_hash(tree):
        raise InputError("game does not match the reduction recorded in its provenance")
    mu = _load_strategy(args.solution, res.game, stdin)
    rec = recover(res, mu)
    solution = rec.solution
    if isinstance(solution, dict):
        solution = " ".join(f"x{v}={'T' if b else 'F'}" for v, b in sorted(solution.items()))
    elif isinstance(solution, tuple) and len(solution) == 2 and all(isinstance(s, dict) for s in solution):
        solution = "; ".join(f"{c}=({', '.join(format_number(x) for x in d)})"
                             for part in solution for c, d in part.items())
    elif isinstance(solution, tuple) and solution and not isinstance(solution[0], tuple):
        solution = list(solution)
    pairs = [("reduction", kind), ("source-sha256", tree.meta_value("source-sha256")),
             ("solution", solution), ("valid", rec.valid), ("detail", rec.detail)]
    out.write(emit_report(pairs))
    err.write(f"recovered {kind} solution: {'valid' if rec.valid else 'INVALID'} ({rec.detail})\n")
    return EXIT_OK if rec.valid else EXIT_FAIL


def cmd_decide(args, out, err, stdin):
    from .solvers import decide_targets

    tree = _load_game(args.game, stdin)
    cfg = _solver_config(args)
    dec = decide_targets(tree, args.query, _number(args.target), _number(args.eps), cfg, args.infoset)
    pairs = [("game", game_hash(tree)), ("query", dec.query), ("verdict", dec.verdict),
             ("witness", dec.witness), ("value", dec.value), ("detail", dec.detail)]
    out.write(emit_report(pairs))
    err.write(f"{args.query}: {dec.verdict}\n")
    return EXIT_OK if dec.verdict == "yes" else EXIT_FAIL


def cmd_examples(args, out, err, stdin):
    if args.name is None:
        out.write(emit_report([("examples", builtin_names())]))
        return EXIT_OK
    try:
        tree = builtin_game(args.name)
    except (KeyError, ValueError):
        raise InputError(f"unknown example {args.name!r}; choose from {', '.join(builtin_names())}") from None
    out.write(serialize_game(tree))
    err.write(f"{args.name}: {tree.num_nodes} nodes, {len(tree.info_sets)} info set(s)\n")
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------------


def _solver_flags(p):
    p.add_argument("--config", help="JSON file with solver settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iters", type=int, dest="max_iters")
    p.add_argument("--tol", type=float)
    p.add_argument("--restarts", type=int)
    p.add_argument("--grid-k", type=int, dest="grid_k")
    p.add_argument("--node-budget", type=int, dest="node_budget")


def build_parser() -> argparse.ArgumentParser:
    from .reductions import REDUCTIONS
    from .solvers import QUERIES

    parser = _Parser(prog="imperfect-recall", description="Games with imperfect recall: evaluate, solve, verify, reduce.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("eval", help="ex-ante utility and info-set statistics")
    p.add_argument("game")
    p.add_argument("strategy")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("poly", help="utility polynomial")
    p.add_argument("game")
    p.add_argument("--field", type=int, metavar="K", help="also emit the projected gradient on the lattice of denominator K")
    _solver_flags(p)
    p.set_defaults(func=cmd_poly)

    p = sub.add_parser("beliefs", help="GT or GDH belief tables")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--infoset", required=True)
    p.add_argument("--system", choices=("gt", "gdh"), default="gt")
    p.set_defaults(func=cmd_beliefs)

    p = sub.add_parser("solve", help="projected gradient, multi-start or EDT dynamics")
    p.add_argument("game")
    p.add_argument("--method", choices=("kkt", "exante", "edt-dynamics"), default="exante")
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="check an approximate equilibrium")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--kind", choices=("cdt", "cdt-ws", "edt"), required=True)
    p.add_argument("--eps", default="0")
    _solver_flags(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("certify", help="KKT multipliers for a strategy")
    p.add_argument("game")
    p.add_argument("strategy")
    p.add_argument("--eps", default="0")
    p.add_argument("--support-tol", default="0", dest="support_tol")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("reduce", help="build a game from a source instance")
    p.add_argument("kind", choices=REDUCTIONS)
    p.add_argument("source")
    p.add_argument("--eps")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("recover", help="map a solution of a generated game back to its source")
    p.add_argument("out", help="game file written by 'reduce'")
    p.add_argument("solution")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("decide", help="search for a strategy meeting a target")
    p.add_argument("game")
    p.add_argument("--query", choices=QUERIES, required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--eps", default="0")
    p.add_argument("--infoset")
    _solver_flags(p)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("examples", help="emit a built-in game")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None, stdout=None, stderr=None, stdin=None) -> int:
    out, err, inp = stdout or sys.stdout, stderr or sys.stderr, stdin or sys.stdin
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    try:
        return args.func(args, out, err, inp)
    except _UsageError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_USAGE
    except BudgetExceeded as exc:
        err.write(f"budget exceeded: {exc}\n")
        return EXIT_BUDGET
    except (InputError, FormatError, InvalidStrategy, GameError, UnreachedInfoSet) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT
    except ValueError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INPUT


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
