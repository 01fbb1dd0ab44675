"""Command-line front door.

Every subcommand reads JSON files in the shared formats, calls one library
function and prints its report. Exit codes: 0 pass or feasible, 1 I/O or
schema error, 2 validation failure, 3 inconclusive, 4 rejected or
certified infeasible, 64 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from . import acceptance, gallery, schemas
from .choi import Instrument
from .config import RunConfig, Tolerances
from .convexsep import PreconditionError, bipartite_causal_sep, tripartite_ecs
from .correlations import ProbabilityTable
from .polytope import Game, causal_bound, causal_membership
from .procmat import ProcessMatrix, no_signaling_matrix, probability_table, signaling_summary, validate

EXIT_OK, EXIT_IO, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_REJECTED, EXIT_USAGE = 0, 1, 2, 3, 4, 64

STATUS_EXIT = {"feasible": EXIT_OK, "inconclusive": EXIT_INCONCLUSIVE,
               "infeasible": EXIT_REJECTED, "certified-infeasible": EXIT_REJECTED}

log = logging.getLogger("causality_kit")


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ---------------------------------------------------------------------------
# I/O


def _load_json(path: str, schema: dict):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    try:
        schemas.check(data, schema)
    except jsonschema.ValidationError as exc:
        raise InputError(f"{path} does not match the expected format: {exc.message}") from exc
    return data


def _build(path: str, schema: dict, factory):
    data = _load_json(path, schema)
    try:
        return factory(data)
    except (ValueError, KeyError, TypeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_process(path: str) -> ProcessMatrix:
    return _build(path, schemas.PROCESS_MATRIX, ProcessMatrix.from_dict)


def load_table(path: str) -> ProbabilityTable:
    return _build(path, schemas.TABLE, ProbabilityTable.from_dict)


def load_game(path: str) -> Game:
    return _build(path, schemas.GAME, Game.from_dict)


def load_instruments(path: str) -> list[list[Instrument]]:
    return _build(path, schemas.INSTRUMENT_SET,
                  lambda d: [[Instrument.from_dict(i) for i in party] for party in d["instruments"]])


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_default)


def _default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, tuple):
        return list(o)
    return str(o)


def render_text(obj, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(obj, dict):
        lines = []
        for k in sorted(obj):
            v = obj[k]
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.append(render_text(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {v}")
        return "\n".join(lines)
    if isinstance(obj, list):
        return "\n".join(render_text(v, indent) if isinstance(v, (dict, list)) else f"{pad}- {v}" for v in obj)
    return f"{pad}{obj}"


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args, cfg: RunConfig):
    rep = validate(load_process(args.matrix), cfg.tolerances)
    return rep.to_dict(), EXIT_OK if rep.ok else EXIT_INVALID


def cmd_signaling(args, cfg: RunConfig):
    w = load_process(args.matrix)
    tol = cfg.tolerances.coefficient_zero
    try:
        if args.from_:
            out = no_signaling_matrix(w, args.from_.split(","), args.to.split(",") if args.to else None, tol).to_dict()
        else:
            out = {"bipartitions": signaling_summary(w, tol)}
    except (ValueError, KeyError) as exc:
        raise InputError(str(exc)) from exc
    return out, EXIT_OK


def cmd_probe(args, cfg: RunConfig):
    w = load_process(args.matrix)
    insts = load_instruments(args.instruments)
    try:
        table = probability_table(w, insts)
    except (ValueError, KeyError) as exc:
        raise InputError(str(exc)) from exc
    return table.to_dict(), EXIT_OK


def cmd_causal_test(args, cfg: RunConfig):
    t = load_table(args.table)
    if t.n not in (2, 3):
        raise InputError("causal-test supports two or three parties")
    rep = causal_membership(t, exact=args.exact, tol=cfg.tolerances.lp_feasibility)
    return rep.to_dict(), STATUS_EXIT[rep.status]


def cmd_causal_bound(args, cfg: RunConfig):
    g = load_game(args.game)
    if g.scenario.n not in (2, 3):
        raise InputError("causal-bound supports two or three parties")
    return causal_bound(g, exact=args.exact, tol=cfg.tolerances.lp_feasibility).to_dict(), EXIT_OK


def _sep(args, cfg: RunConfig, parties: int, fn):
    w = load_process(args.matrix)
    if len(w.parties) != parties:
        raise InputError(f"expected a {parties}-party process matrix, got {len(w.parties)} parties")
    try:
        rep = fn(w, cfg.budgets, cfg.tolerances)
    except PreconditionError as exc:
        raise InputError(str(exc)) from exc
    return rep.to_dict(include_blocks=args.witness), STATUS_EXIT[rep.status]


def cmd_sep_test(args, cfg: RunConfig):
    return _sep(args, cfg, 2, bipartite_causal_sep)


def cmd_ecs_test(args, cfg: RunConfig):
    return _sep(args, cfg, 3, tripartite_ecs)


REPRODUCTIONS = {
    "ocb": (lambda cfg: gallery.ocb_pipeline(cfg.tolerances, cfg.seed, cfg.budgets),
            {"": gallery.ocb_process}),
    "ocb-tripartite": (lambda cfg: gallery.ocb_tripartite_pipeline(20, cfg.seed, cfg.tolerances, cfg.budgets),
                       {"": gallery.ocb_tripartite}),
    "switch": (lambda cfg: gallery.switch_nonseparability_pipeline(gallery.SwitchParams(), cfg.tolerances,
                                                                    cfg.budgets),
               {"": gallery.switch_process, "reduced": gallery.switch_reduced_expected}),
    "activation": (lambda cfg: gallery.activation_pipeline(cfg.seed, cfg.tolerances, cfg.budgets),
                   {"": gallery.ocb_tripartite_extended, "teleported": gallery.ocb_teleported}),
}


def emit_matrices(name: str, path: str) -> list[str]:
    """Write the example's main matrix to ``path`` and any companions beside it."""
    target = Path(path)
    written = []
    for suffix, make in REPRODUCTIONS[name][1].items():
        out = target if not suffix else target.with_name(f"{target.stem}-{suffix}{target.suffix or '.json'}")
        try:
            out.write_text(dump_json(make().to_dict()))
        except OSError as exc:
            raise InputError(f"cannot write {out}: {exc}") from exc
        written.append(str(out))
    return written


def cmd_reproduce(args, cfg: RunConfig):
    run, _ = REPRODUCTIONS[args.example]
    report = run(cfg).to_dict()
    if args.emit_matrix:
        report["emitted"] = emit_matrices(args.example, args.emit_matrix)
    return report, EXIT_OK if report["ok"] else EXIT_REJECTED


def cmd_suite(args, cfg: RunConfig):
    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",")}
        except ValueError as exc:
            raise UsageError(f"--only expects comma-separated criterion numbers: {exc}") from exc
    settings = acceptance.Settings(cfg.tolerances, cfg.budgets, cfg.seed)
    results = acceptance.run_all(settings, only)
    for r in results:
        print(r.line(), file=sys.stderr)
    passed = all(r.passed for r in results)
    return {"passed": passed, "criteria": [r.to_dict() for r in results]}, EXIT_OK if passed else EXIT_REJECTED


COMMANDS = {
    "validate": cmd_validate, "signaling": cmd_signaling, "probe": cmd_probe,
    "causal-test": cmd_causal_test, "causal-bound": cmd_causal_bound, "sep-test": cmd_sep_test,
    "ecs-test": cmd_ecs_test, "reproduce": cmd_reproduce, "suite": cmd_suite,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default=None, help="report format")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (overrides CAUSALITY_KIT_SEED)")
    common.add_argument("--max-iterations", type=int, default=None, help="Dykstra iteration budget")
    common.add_argument("-v", "--verbose", action="store_true")
    for f in dataclasses.fields(Tolerances):
        common.add_argument(f"--tol-{f.name.replace('_', '-')}", dest=f"tol_{f.name}", type=float, default=None,
                            metavar="X", help=f"override the {f.name} tolerance (default {f.default})")

    parser = _Parser(prog="causality-kit", description="Process matrices, causal polytopes and causal separability.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("validate", parents=[common], help="check a process matrix")
    p.add_argument("matrix")
    p = sub.add_parser("signaling", parents=[common], help="no-signaling analysis from term types")
    p.add_argument("matrix")
    p.add_argument("--from", dest="from_", help="comma-separated sending parties")
    p.add_argument("--to", help="comma-separated receiving parties (default: the rest)")
    p = sub.add_parser("probe", parents=[common], help="probability table for given instruments")
    p.add_argument("matrix")
    p.add_argument("instruments")
    p = sub.add_parser("causal-test", parents=[common], help="causal polytope membership")
    p.add_argument("table")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p = sub.add_parser("causal-bound", parents=[common], help="maximum game value over causal tables")
    p.add_argument("game")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    for name, text in (("sep-test", "bipartite causal separability"), ("ecs-test", "tripartite ECS test")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("matrix")
        p.add_argument("--witness", action="store_true", help="include witness blocks in the report")
    p = sub.add_parser("reproduce", parents=[common], help="run a worked example end to end")
    p.add_argument("example", choices=sorted(REPRODUCTIONS))
    p.add_argument("--emit-matrix", metavar="PATH", help="write the constructed matrices as JSON")
    p = sub.add_parser("suite", parents=[common], help="run the acceptance checks")
    p.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = RunConfig.from_env()
    tol = {f.name: getattr(args, f"tol_{f.name}") for f in dataclasses.fields(Tolerances)
           if getattr(args, f"tol_{f.name}", None) is not None}
    if tol:
        cfg = cfg.with_tolerances(**tol)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    if args.format:
        cfg = dataclasses.replace(cfg, output_format=args.format)
    if args.max_iterations is not None:
        cfg = dataclasses.replace(cfg, budgets=dataclasses.replace(cfg.budgets,
                                                                   dykstra_iterations=args.max_iterations))
    return cfg


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        report, code = COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(dump_json({"error": str(exc)}), file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:  # malformed environment overrides and the like
        print(dump_json({"error": str(exc)}), file=sys.stderr)
        return EXIT_IO
    print(render_text(report) if cfg.output_format == "text" else dump_json(report))
    return code


def main(argv: Sequence[str] | None = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
