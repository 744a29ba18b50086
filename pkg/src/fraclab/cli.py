"""Command-line entry point: ``fraclab <subcommand> --config run.toml``.

Each run writes into ``<out>/<config hash>/``: the solution CSV, a JSON
convergence record, one JSON and one CSV file per verifier, and
``summary.json``.  Outputs carry no timestamps, so identical configs give
identical bytes.  Exit status: 0 when the solver converged and every hard
check passed, 1 when a hard check failed, 2 for configuration errors, 3
for non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import config as cfgmod
from .errors import ConfigurationError, FraclabError, NonConvergenceError, PreconditionError
from .estimates import (EstimateReport, caccioppoli_sweep, check_elementary_inequality, degiorgi_diagnostic,
                        estimate_holder, log_lemma_sweep, verify_local_boundedness, verify_poincare_log)
from .grid import ball_nodes, level_truncate
from .kernel import assemble_weights
from .solver import comparison_check, solve, verify_euler_lagrange
from .tail import tail_record

log = logging.getLogger("fraclab")

SUBCOMMANDS = {
    "solve": [],
    "tail": ["tail"],
    "verify-caccioppoli": ["caccioppoli"],
    "verify-log": ["log"],
    "verify-poincare-log": ["poincare_log"],
    "verify-sup": ["sup"],
    "degiorgi": ["degiorgi"],
    "holder": ["holder"],
    "check-lemma32": ["lemma32"],
    "all": ["tail", "caccioppoli", "log", "poincare_log", "sup", "degiorgi", "holder", "lemma32"],
}
NEEDS_SOLUTION = set(SUBCOMMANDS) - {"check-lemma32"}


def write_json(path: Path, obj) -> None:
    text = json.dumps(cfgmod._jsonable(obj), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")


def _cell(v):
    if isinstance(v, (list, tuple)):
        return ";".join(_cell(x) for x in v)
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, records: list) -> None:
    keys = []
    for rec in records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(keys)
        for rec in records:
            w.writerow([_cell(rec.get(k)) for k in keys])


def _error_report(name: str, exc: Exception) -> EstimateReport:
    meta = {"error": str(exc)}
    if isinstance(exc, PreconditionError):
        meta["location"] = list(exc.location) if exc.location is not None else None
    return EstimateReport(name=name, parameters={}, lhs=0.0, rhs_components={}, empirical_constant=None,
                          passed=False, metadata=meta)


def run_verifier(name: str, sec: dict, cfg, sol, weights) -> EstimateReport:
    prob = cfg.problem
    spec = cfg.kernel
    try:
        if name == "caccioppoli":
            return caccioppoli_sweep(sol, prob, weights, draws=int(sec["draws"]), seed=int(sec["seed"]),
                                     ceiling=float(sec["ceiling"]))
        if name == "log":
            ds = sec["d"] if isinstance(sec["d"], list) else [sec["d"]]
            return log_lemma_sweep(sol, prob, weights, sec["x0"], sec["R"], sec["r"], ds=tuple(ds),
                                   relative=bool(sec["relative"]), spread=float(sec["spread"]))
        if name == "poincare_log":
            a = sec["a"]
            if a is None:
                a = float(np.median(sol.u[ball_nodes(cfg.grid, sec["x0"], sec["R"])]))
                a = a if a > 0 else 1.0
            return verify_poincare_log(sol, prob, sec["x0"], sec["R"], sec["r"], a, sec["b"], sec["d"],
                                       ceiling=float(sec["ceiling"]))
        if name == "sup":
            return verify_local_boundedness(sol, prob, sec["x0"], sec["r"], deltas=tuple(sec["deltas"]),
                                            ceiling=float(sec["ceiling"]))
        if name == "degiorgi":
            return degiorgi_diagnostic(sol, prob, sec["x0"], sec["r"], k=float(sec["k"]), J=int(sec["J"]),
                                       delta=float(sec["delta"]), safety=float(sec["safety"]))
        if name == "holder":
            _, rep = estimate_holder(sol, prob, sec["x0"], sec["r"], levels=int(sec["levels"]),
                                     sigma=float(sec["sigma"]))
            return rep
        if name == "tail":
            k, sign = float(sec["k"]), sec["sign"]
            w = level_truncate(sol.u, k, sign)
            ext = float(level_truncate(np.array([0.0]), k, sign)[0])
            rec = tail_record(cfg.grid, w, sec["x0"], sec["R"], spec.s, spec.p,
                              quadrature=sec["quadrature"], exterior=ext)
            return EstimateReport(name="tail", parameters={"x0": sec["x0"], "R": sec["R"], "k": k, "sign": sign,
                                                          "quadrature": sec["quadrature"], "s": spec.s, "p": spec.p},
                                  lhs=rec["value"], rhs_components={"truncation_bound": rec["truncation_bound"],
                                                                    "truncation_bound_tail": rec["truncation_bound_tail"]},
                                  empirical_constant=None, passed=True, records=[rec])
        if name == "lemma32":
            res = check_elementary_inequality(int(sec["samples"]), seed=int(sec["seed"]))
            return EstimateReport(name="lemma32", parameters={"samples": res["samples"], "seed": res["seed"]},
                                  lhs=float(res["violations"]),
                                  rhs_components={"tightest_relative_slack": res["tightest_relative_slack"],
                                                  "c_2": res["c_2"]},
                                  empirical_constant=None, passed=res["passed"],
                                  metadata={"violating_p_range": res["violating_p_range"]},
                                  records=res["worst"])
    except (PreconditionError, ConfigurationError) as exc:
        return _error_report(name, exc)
    raise ConfigurationError(f"unknown verifier {name!r}")


def execute(cfg, subcommand: str, out_root: Path, threads: int = 1) -> int:
    run_dir = out_root / cfg.digest
    run_dir.mkdir(parents=True, exist_ok=True)
    formats = cfg.output["formats"]
    write_json(run_dir / "config.json", cfg.raw)
    checks = []
    sol = weights = None
    status = 0
    if subcommand in NEEDS_SOLUTION:
        weights = assemble_weights(cfg.kernel, cfg.grid, threads=threads)
        try:
            sol = solve(cfg.problem, cfg.solver, weights)
        except NonConvergenceError as exc:
            write_json(run_dir / "diagnostics.json", {"error": str(exc), **exc.diagnostics})
            if exc.last_iterate is not None:
                _write_solution(run_dir / "last_iterate.csv", cfg.grid, exc.last_iterate)
            write_json(run_dir / "summary.json", {"subcommand": subcommand, "config_hash": cfg.digest,
                                                  "converged": False, "checks": [], "exit_status": 3})
            return 3
        el = verify_euler_lagrange(sol, cfg.problem, weights)
        cmp = comparison_check(sol, cfg.problem)
        checks += [{"name": "euler-lagrange", "passed": el["passed"], "hard": True},
                   {"name": "comparison", "passed": cmp["passed"], "hard": True}]
        if "csv" in formats:
            _write_solution(run_dir / "solution.csv", cfg.grid, sol.u)
        if "json" in formats:
            write_json(run_dir / "convergence.json", {
                **sol.record(), "euler_lagrange": el, "comparison": cmp,
                "near_scheme": weights.near_scheme,
                "energy_normalization": "pairs of two exterior nodes omitted",
            })
    for name in SUBCOMMANDS[subcommand]:
        sec = cfgmod.defaults_for(name, cfg)
        rep = run_verifier(name, sec, cfg, sol, weights)
        checks.append({"name": name, "passed": rep.passed, "hard": bool(sec["hard"])})
        if "json" in formats:
            write_json(run_dir / f"report_{name}.json", rep.as_dict())
        if "csv" in formats:
            write_csv(run_dir / f"report_{name}.csv", rep.records or [rep.rhs_components])
    if any(c["hard"] and not c["passed"] for c in checks):
        status = 1
    write_json(run_dir / "summary.json", {"subcommand": subcommand, "config_hash": cfg.digest,
                                          "converged": sol.converged if sol else None,
                                          "checks": checks, "exit_status": status})
    return status


def _write_solution(path: Path, grid, u) -> None:
    cols = ["x", "y"][: grid.n]
    records = [dict(zip(cols + ["value"], [*grid.nodes[i], u[i]])) for i in range(grid.size)]
    write_csv(path, records)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fraclab", description="Fractional p-Laplacian minimizers and estimate checks.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, type=Path, help="TOML or JSON run configuration")
        sp.add_argument("--out", type=Path, default=None, help="output root (default: [output] dir)")
        sp.add_argument("--seed", type=int, default=None, help="override the top-level seed")
        sp.add_argument("--threads", type=int, default=1, help="assembly threads; results do not depend on it")
        if name == "tail":
            sp.add_argument("--x0", type=float, nargs="+", default=None)
            sp.add_argument("--R", type=float, default=None)
            sp.add_argument("--k", type=float, default=None)
            sp.add_argument("--sign", choices=("plus", "minus"), default=None)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return 2
    try:
        raw = cfgmod.load(args.config)
        if args.command == "tail":
            tail = dict((raw.get("verify") or {}).get("tail") or {})
            for key in ("x0", "R", "k", "sign"):
                val = getattr(args, key)
                if val is not None:
                    tail[key] = val
            raw.setdefault("verify", {})["tail"] = tail
        cfg = cfgmod.parse(raw, seed=args.seed)
    except (ConfigurationError, FraclabError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    out = args.out if args.out is not None else Path(cfg.output["dir"])
    with threadpool_limits(limits=1):
        status = execute(cfg, args.command, out, threads=args.threads)
    print(str(out / cfg.digest))
    return status


if __name__ == "__main__":
    sys.exit(main())
