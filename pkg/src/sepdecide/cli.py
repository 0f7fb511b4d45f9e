"""Command-line front end.

Exit codes for ``decide``: 0 separable, 1 entangled, 2 indeterminate,
3 input or validation error, 4 unexpected failure.  ``oracle`` uses
0/1/2 for separable-certified/entangled-certified/inconclusive.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import RunConfig, Tolerances
from .errors import DegreeOverflow, SepDecideError
from .oracles import ENTANGLED, INCONCLUSIVE, ORACLES, SEPARABLE, bell_state, gen_product_mixture, gen_pure_state, gen_random_state, werner_state
from .pipeline import ENTANGLED_OUT, SEPARABLE_OUT, decide
from .state import load_state, state_to_json
from .xl import estimate_degree_heuristic, select_degree

log = logging.getLogger("sepdecide")

EXIT_INPUT = 3
EXIT_INTERNAL = 4
ORACLE_EXIT = {SEPARABLE: 0, ENTANGLED: 1, INCONCLUSIVE: 2}


# --------------------------------------------------------------------------
# JSON output with fixed 17-significant-digit floats


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or obj is True or obj is False:
        return json.dumps(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return "%.17g" % x if math.isfinite(x) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        # keep short numeric rows on one line
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(parts) + "]"
        return "[\n" + ",\n".join(pad + p for p in parts) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    return _encode(obj, indent, 0) + "\n"


def _emit(obj, output) -> None:
    text = dumps(obj)
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# configuration flags


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("tolerances")
    for f in fields(Tolerances):
        g.add_argument(f"--tol-{f.name}", type=float, default=None, metavar="X")
    p.add_argument("--d-max", type=int, default=RunConfig.d_max)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--memory-budget", type=int, default=RunConfig.memory_budget)
    p.add_argument("--fallback-restarts", type=int, default=RunConfig.fallback_restarts)
    p.add_argument("--fallback-steps", type=int, default=RunConfig.fallback_steps)
    p.add_argument("--seed", type=int, default=RunConfig.seed)
    p.add_argument("--family", choices=("T", "C"), default="T")
    p.add_argument("--no-dimension-precheck", action="store_true")


def config_from_args(args) -> RunConfig:
    over = {f.name: getattr(args, f"tol_{f.name}") for f in fields(Tolerances)}
    tol = Tolerances(**{k: v for k, v in over.items() if v is not None})
    return RunConfig(
        tol=tol,
        d_max=args.d_max,
        k_max=args.k_max,
        memory_budget=args.memory_budget,
        fallback_restarts=args.fallback_restarts,
        fallback_steps=args.fallback_steps,
        seed=args.seed,
        family=args.family,
        dimension_precheck=not args.no_dimension_precheck,
    )


# --------------------------------------------------------------------------
# commands


def cmd_decide(args) -> int:
    config = config_from_args(args)
    state = load_state(args.input, config.tol)
    verdict = decide(state, config)
    _emit(verdict.to_dict(timings=args.timings), args.output)
    return verdict.exit_code


def plan_report(r: int, n_eff: int, d_max: int = 10) -> dict:
    if r < 1 or n_eff < 1:
        raise ValueError("r and N_eff must be at least 1")
    out = {"r": r, "N_eff": n_eff, "delta": n_eff - r + 1, "heuristic_D": estimate_degree_heuristic(r, n_eff)}
    if r == 1:
        # a single variable needs no expansion
        out.update(D=2, n_eqs=n_eff, n_vars=1)
    else:
        out.update(select_degree(r, n_eff, d_max).to_dict())
    out["memory_bytes"] = 16 * out["n_eqs"] * out["n_vars"]
    return out


def cmd_plan(args) -> int:
    try:
        report = plan_report(args.r, args.n_eff, args.d_max)
    except DegreeOverflow as exc:
        _emit({"r": args.r, "N_eff": args.n_eff, "error": "degree_overflow", "message": str(exc)}, args.output)
        return EXIT_INPUT
    _emit(report, args.output)
    return 0


def cmd_oracle(args) -> int:
    tol = Tolerances()
    state = load_state(args.input, tol)
    v = ORACLES[args.test](state, tol)
    _emit(v.to_dict(), args.output)
    return ORACLE_EXIT[v.outcome]


def generate(kind: str, dims, seed: int, terms: int = 2, rank: int = 2, p: float = 0.5):
    if kind == "product":
        return gen_product_mixture(dims, terms, seed)
    if kind == "random":
        return gen_random_state(dims, rank, seed)
    if kind == "pure":
        return gen_pure_state(dims, seed)
    if kind == "bell":
        return bell_state()
    if kind == "werner":
        return werner_state(p)
    raise ValueError(f"unknown generator {kind!r}")


def cmd_gen(args) -> int:
    st = generate(args.kind, tuple(args.dims), args.seed, args.terms, args.rank, args.p)
    _emit(state_to_json(st.entries, st.dims), args.output)
    return 0


def _agreement(outcome: str, oracle_reports: list) -> bool:
    for o in oracle_reports:
        if outcome == SEPARABLE_OUT and o["outcome"] == ENTANGLED:
            return False
        if outcome == ENTANGLED_OUT and o["outcome"] == SEPARABLE:
            return False
    return True


def run_batch(manifest, config: RunConfig) -> dict:
    manifest = Path(manifest)
    obj = json.loads(manifest.read_text())
    inputs = obj["inputs"] if isinstance(obj, dict) else obj
    if not isinstance(inputs, list):
        raise ValueError("manifest must list input paths")
    entries = []
    counts = {"separable": 0, "entangled": 0, "indeterminate": 0, "error": 0}
    oracle_counts: dict = {}
    agree = 0
    for rel in inputs:
        path = Path(rel) if Path(rel).is_absolute() else manifest.parent / rel
        entry = {"input": str(rel)}
        try:
            verdict = decide(load_state(path, config.tol), config)
        except (OSError, ValueError, SepDecideError) as exc:
            entry.update(outcome="error", error=f"{type(exc).__name__}: {exc}")
            counts["error"] += 1
            entries.append(entry)
            continue
        report = verdict.to_dict(timings=False)
        ok = _agreement(verdict.outcome, report["oracle_reports"])
        if "downgraded_from" in verdict.diagnostics:
            ok = False
        agree += ok
        counts[verdict.outcome] += 1
        for o in report["oracle_reports"]:
            c = oracle_counts.setdefault(o["name"], {SEPARABLE: 0, ENTANGLED: 0, INCONCLUSIVE: 0})
            c[o["outcome"]] += 1
        entry.update(outcome=verdict.outcome, reason=verdict.reason, exit_code=verdict.exit_code,
                     oracle_agreement=bool(ok), verdict=report)
        entries.append(entry)
    return {
        "config": config.to_dict(),
        "total": len(inputs),
        "counts": counts,
        "oracle_counts": oracle_counts,
        "oracle_agreement": agree,
        "results": entries,
    }


def cmd_batch(args) -> int:
    _emit(run_batch(args.manifest, config_from_args(args)), args.output)
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sepdecide", description="Separability decisions for bipartite density matrices.")
    parser.add_argument("--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide separability of a state file")
    p.add_argument("input")
    p.add_argument("--output", default=None)
    p.add_argument("--timings", action="store_true", help="include per-stage timings in the report")
    _add_config_flags(p)
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("plan", help="XL sizing for r unknowns and N_eff equations")
    p.add_argument("r", type=int)
    p.add_argument("n_eff", type=int)
    p.add_argument("--d-max", type=int, default=RunConfig.d_max)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("oracle", help="run one independent test")
    p.add_argument("test", choices=sorted(ORACLES))
    p.add_argument("input")
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", help="write a generated state")
    p.add_argument("kind", choices=("product", "random", "pure", "bell", "werner"))
    p.add_argument("--dims", type=int, nargs=2, default=(2, 2), metavar=("M", "N"))
    p.add_argument("--terms", type=int, default=2)
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("batch", help="decide every state listed in a manifest")
    p.add_argument("manifest")
    p.add_argument("--output", default=None)
    _add_config_flags(p)
    p.set_defaults(func=cmd_batch)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2, which would collide with "indeterminate"
        return 0 if exc.code == 0 else EXIT_INPUT
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, SepDecideError) as exc:
        print(f"sepdecide: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("unexpected failure")
        print(f"sepdecide: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
