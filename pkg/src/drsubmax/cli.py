"""Command-line front end.

    drsubmax solve  --instance FILE --constraint CONSTRAINT [options]
    drsubmax verify {bounds,constants,properties} [--trials N] [--seed S]
    drsubmax bench  --config MATRIX.json | --family cut --count 20 --n 4 --constraint CONSTRAINT

Every command accepts ``--config FILE``: a JSON object with the same keys
as the long flags (``t_s`` or ``t-s`` both work). Flags given on the
command line win over the file. Output files go to ``--out`` and start with
the normalized parameters; a short summary goes to standard output.

Exit codes: 0 success, 1 verification violation, 2 usage or configuration
error, 3 numeric breakdown.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .double_greedy import double_greedy
from .frank_wolfe import approx_local_max
from .instances import InstanceError, load_instance, parse_constraint
from .oracles import (audit_properties, brute_force_set_opt, random_dr_function, run_bound_suite,
                      shrink_counterexample, trial_inputs)
from .polytope import LPBreakdown
from .solver import SolveParams, measured_greedy, solve, verify_constants

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
SUITES = ("bounds", "constants", "properties")


class UsageError(Exception):
    pass


# -- output helpers ------------------------------------------------------------


def _header(command: str, params: dict) -> str:
    return f"# drsubmax {command} params={json.dumps(params, sort_keys=True)}\n"


def _csv_text(command: str, params: dict, rows: list, columns: list) -> str:
    buf = io.StringIO()
    buf.write(_header(command, params))
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(row.get(k)) for k in columns})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return v


def _write(out_dir, name, text):
    if out_dir is None:
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w", newline="") as fh:
        fh.write(text)


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _formats(value) -> set:
    out = set()
    for part in str(value).split(","):
        part = part.strip()
        if part not in ("csv", "json"):
            raise UsageError(f"unknown format {part!r} (expected csv or json)")
        out.add(part)
    return out


# -- argument handling ---------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drsubmax", description="DR-submodular maximization over packing polytopes")
    sub = p.add_subparsers(dest="command")

    def common(sp):
        sp.add_argument("--config", help="JSON file with the same keys as the flags")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--format", help="csv, json or both (comma separated)")

    def solver_flags(sp):
        sp.add_argument("--t-s", dest="t_s", type=float)
        sp.add_argument("--epsilon", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--depth", help="positive integer or 'paper'")
        sp.add_argument("--guess-mode", dest="guess_mode", choices=("baseline", "oracle"))
        sp.add_argument("--oracle-value", dest="oracle_value", type=float)
        sp.add_argument("--children", dest="children_per_node", type=int)

    s = sub.add_parser("solve", help="solve one instance")
    common(s)
    solver_flags(s)
    s.add_argument("--instance")
    s.add_argument("--constraint")
    s.add_argument("--oracle", action="store_true", default=None,
                   help="also compute the brute-force integral optimum and the ratio")
    s.add_argument("--timing", action="store_true", default=None,
                   help="write wall-clock time to timing.csv")

    v = sub.add_parser("verify", help="run a verification suite")
    common(v)
    v.add_argument("suite", nargs="?")
    v.add_argument("--trials", type=int)
    v.add_argument("--instance", help="fixed objective for the bounds or properties suites")

    b = sub.add_parser("bench", help="compare algorithms over a matrix of instances")
    common(b)
    solver_flags(b)
    b.add_argument("--family", choices=("cut", "coverage", "quadratic"))
    b.add_argument("--count", type=int)
    b.add_argument("--n", type=int)
    b.add_argument("--constraint")
    b.add_argument("--instances", nargs="*")
    return p


DEFAULTS = {"seed": 0, "out": None, "format": "csv,json", "trials": 10000, "oracle": False,
            "timing": False, "count": 0, "n": 4, "constraint": None, "instance": None,
            "instances": None, "family": None, "suite": None}


def _merge(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        path = args.config
        if not os.path.isfile(path):
            raise UsageError(f"no such config file: {path}")
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON ({exc})") from exc
        if not isinstance(raw, dict):
            raise UsageError(f"{path}: config must be a JSON object")
        known = set(vars(args)) | set(DEFAULTS) | {"matrix"}
        for k, val in raw.items():
            key = k.replace("-", "_")
            if key not in known:
                raise UsageError(f"{path}: unknown key {k!r}")
            cfg[key] = val
    for k, val in vars(args).items():
        if val is not None and k != "config":
            cfg[k] = val
    for k, val in DEFAULTS.items():
        cfg.setdefault(k, val)
    return cfg


def _solve_params(cfg: dict) -> SolveParams:
    kw = {}
    for key in ("t_s", "epsilon", "delta", "guess_mode", "oracle_value", "children_per_node"):
        if cfg.get(key) is not None:
            kw[key] = cfg[key]
    depth = cfg.get("depth")
    if depth is not None:
        if str(depth) == "paper":
            kw["depth"] = "paper"
        else:
            try:
                kw["depth"] = int(depth)
            except ValueError as exc:
                raise UsageError(f"depth must be a positive integer or 'paper', got {depth!r}") from exc
    kw["seed"] = int(cfg["seed"])
    params = SolveParams(**kw)
    try:
        params.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return params


# -- solve ---------------------------------------------------------------------


SOLVE_COLUMNS = ["instance", "n", "best_value", "oracle_opt", "ratio", "node_count"]


def cmd_solve(cfg: dict) -> int:
    if not cfg.get("instance"):
        raise UsageError("solve needs --instance")
    if not cfg.get("constraint"):
        raise UsageError("solve needs --constraint")
    formats = _formats(cfg["format"])
    params = _solve_params(cfg)
    try:
        inst = load_instance(cfg["instance"])
        P = parse_constraint(cfg["constraint"], inst.n)
    except InstanceError as exc:
        raise UsageError(str(exc)) from exc
    report = solve(inst.F, P, params)
    row = {"instance": inst.name, "n": inst.n, "best_value": report.best_value,
           "node_count": report.node_count}
    if cfg["oracle"]:
        target = inst.set_function if inst.set_function is not None else inst.F
        _, opt = brute_force_set_opt(target, P)
        row["oracle_opt"] = opt
        row["ratio"] = report.best_value / opt if opt > 0 else 1.0
    norm = report.params
    payload = {"command": "solve", "params": norm, "instance": inst.name, "report": report.to_dict()}
    if "oracle_opt" in row:
        payload["oracle"] = {"opt": row["oracle_opt"], "ratio": row["ratio"]}
    if "json" in formats:
        _write(cfg["out"], "report.json", _json_text(payload))
    if "csv" in formats:
        _write(cfg["out"], "summary.csv", _csv_text("solve", norm, [row], SOLVE_COLUMNS))
    if cfg["timing"]:
        _write(cfg["out"], "timing.csv", f"instance,wall_time\n{inst.name},{report.wall_time!r}\n")
    line = f"{inst.name}: best value {report.best_value:.10g} from {report.best_origin} ({report.node_count} nodes)"
    if "ratio" in row:
        line += f"; brute-force OPT {row['oracle_opt']:.10g}, ratio {row['ratio']:.6f}"
    print(line)
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def _fixed_objective(cfg):
    if not cfg.get("instance"):
        return None
    try:
        return load_instance(cfg["instance"], strict=False).F
    except InstanceError as exc:
        raise UsageError(str(exc)) from exc


def cmd_verify(cfg: dict) -> int:
    suite = cfg.get("suite")
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    trials = int(cfg["trials"])
    seed = int(cfg["seed"])
    if trials < 0:
        raise UsageError("trials must be non-negative")
    params = {"suite": suite, "trials": trials, "seed": seed}
    if suite == "constants":
        res = verify_constants()
        params = {"suite": suite}
        rows = [{"quantity": k, "value": res[k]} for k in
                ("alpha", "r", "t_s", "coef_opt", "coef_hprod", "coef_psum", "max_disagreement")]
        _write(cfg["out"], "constants.csv", _csv_text("verify", params, rows, ["quantity", "value"]))
        print(f"coefficient of F(o): {res['coef_opt']:.5f} (alpha={res['alpha']}, r={res['r']}, t_s={res['t_s']})")
        print(f"coefficient of F(z hprod o): {res['coef_hprod']:.3e}; of F(z psum o): {res['coef_psum']:.3e}")
        print("PASS" if res["ok"] else "FAIL")
        return EXIT_OK if res["ok"] else EXIT_VIOLATION

    F = _fixed_objective(cfg)
    if F is not None:
        params["instance"] = os.path.basename(cfg["instance"])
    if suite == "bounds":
        rows = [r.to_dict() for r in run_bound_suite(trials, seed, F=F)]
        cols = ["instance", "kind", "n", "r", "h", "lhs", "rhs", "slack", "holds"]
        _write(cfg["out"], "bounds.csv", _csv_text("verify", params, rows, cols))
        bad = [r for r in rows if not r["holds"]]
        print(f"bounds: {len(rows)} checks, {len(bad)} violations")
        if bad:
            print(f"first violation: {bad[0]['instance']} {bad[0]['kind']} slack {bad[0]['slack']:.3e}")
            _report_shrunk(bad[0], seed, F)
        return EXIT_VIOLATION if bad else EXIT_OK

    # properties
    targets = [("instance", F)] if F is not None else [
        (f"{fam}-{t}", random_dr_function(fam, 1 + t % 6, np.random.default_rng([seed, t])))
        for t in range(max(1, trials // 100)) for fam in ("quadratic", "cut", "coverage")]
    per = trials if F is not None else 100
    rows = []
    for name, G in targets:
        audit = audit_properties(G, per, seed)
        for r in audit.to_rows():
            rows.append({"instance": name, **r})
    cols = ["instance", "property", "trials", "violations"]
    _write(cfg["out"], "properties.csv", _csv_text("verify", params, rows, cols))
    total = sum(r["violations"] for r in rows)
    print(f"properties: {len(targets)} objectives, {total} violations")
    return EXIT_VIOLATION if total else EXIT_OK


def _report_shrunk(row, seed, F):
    trial = int(row["instance"].rsplit("-", 1)[1])
    t = trial_inputs(trial, seed, F)
    check = t.basic if row["kind"] == "basic" else t.general
    ce = shrink_counterexample(check, t.ps)
    if ce is not None:
        print(f"shrunk after {ce.steps} checks: p={np.round(ce.ps, 6).tolist()} "
              f"lhs={ce.lhs:.6g} rhs={ce.rhs:.6g}")


# -- bench ---------------------------------------------------------------------


ALGORITHMS = ("main", "measured_greedy", "double_greedy", "frank_wolfe")


def _bench_rows(cfg):
    """``(name, instance dict or family, constraint text, n)`` for every matrix row."""
    rows = []
    for path in cfg.get("instances") or []:
        rows.append(("file", path))
    if cfg.get("family") and int(cfg.get("count") or 0) > 0:
        for k in range(int(cfg["count"])):
            rows.append(("random", (cfg["family"], int(cfg["n"]), k)))
    for entry in cfg.get("matrix") or []:
        if not isinstance(entry, dict):
            raise UsageError("matrix entries must be objects")
        if "family" in entry and "count" in entry:
            for k in range(int(entry["count"])):
                rows.append(("random", (entry["family"], int(entry.get("n", 4)), k,
                                        entry.get("constraint"))))
        elif "instance" in entry:
            rows.append(("file", entry["instance"], entry.get("constraint")))
        else:
            raise UsageError(f"cannot read matrix entry {entry}")
    return rows


def _bench_one(index, row, cfg, params):
    seed = int(cfg["seed"])
    kind = row[0]
    try:
        if kind == "file":
            inst = load_instance(row[1])
            F, f, name = inst.F, inst.set_function, inst.name
            ctext = row[2] if len(row) > 2 and row[2] else cfg.get("constraint")
        else:
            family, n, k = row[1][:3]
            ctext = row[1][3] if len(row[1]) > 3 and row[1][3] else cfg.get("constraint")
            rng = np.random.default_rng([seed, index])
            F = random_dr_function(family, n, rng)
            f = getattr(F, "set_function", None)
            name = f"{family}-n{n}-{k}"
        if not ctext:
            raise InstanceError("bench rows need a constraint")
        P = parse_constraint(ctext, F.n)
    except (InstanceError, ValueError) as exc:
        return {"row": index, "instance": str(row[1]), "status": f"config: {exc}"}, EXIT_USAGE
    out = {"row": index, "instance": name, "n": F.n, "constraint": P.name, "status": "ok"}
    try:
        _, opt = brute_force_set_opt(f if f is not None else F, P)
        out["opt"] = opt
        vals = {"main": solve(F, P, params).best_value,
                "measured_greedy": F.value(measured_greedy(F, P, params.delta)),
                "frank_wolfe": F.value(approx_local_max(F, P, (), params.delta).x_star)}
        if P.m == 0:
            vals["double_greedy"] = F.value(double_greedy(F, params.epsilon))
        for alg, v in vals.items():
            out[alg] = v
            out[f"{alg}_ratio"] = v / opt if opt > 0 else 1.0
        return out, EXIT_OK
    except (LPBreakdown, FloatingPointError, np.linalg.LinAlgError) as exc:
        out["status"] = f"numeric: {exc}"
        return out, EXIT_NUMERIC


def _threads() -> int:
    raw = os.environ.get("DRSUBMAX_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"DRSUBMAX_THREADS must be an integer, got {raw!r}")


def cmd_bench(cfg: dict) -> int:
    params = _solve_params(cfg)
    rows = _bench_rows(cfg)
    if not rows:
        raise UsageError("empty benchmark matrix")
    workers = min(_threads(), len(rows))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _bench_one(a[0], a[1], cfg, params), enumerate(rows)))
    else:
        results = [_bench_one(i, r, cfg, params) for i, r in enumerate(rows)]
    per_row = [r for r, _ in results]
    worst = max(code for _, code in results)
    agg = []
    for alg in ALGORITHMS:
        ratios = [r[f"{alg}_ratio"] for r in per_row if f"{alg}_ratio" in r]
        if ratios:
            agg.append({"algorithm": alg, "rows": len(ratios), "mean_ratio": float(np.mean(ratios)),
                        "min_ratio": float(np.min(ratios))})
    norm = {**params.normalized(), "rows": len(rows)}
    cols = ["row", "instance", "n", "constraint", "status", "opt"] + \
        [c for alg in ALGORITHMS for c in (alg, f"{alg}_ratio")]
    formats = _formats(cfg["format"])
    if "csv" in formats:
        _write(cfg["out"], "bench_rows.csv", _csv_text("bench", norm, per_row, cols))
        _write(cfg["out"], "bench.csv", _csv_text("bench", norm, agg, ["algorithm", "rows", "mean_ratio", "min_ratio"]))
    if "json" in formats:
        _write(cfg["out"], "bench.json", _json_text({"command": "bench", "params": norm,
                                                     "rows": per_row, "aggregate": agg}))
    for a in agg:
        print(f"{a['algorithm']:>16}: mean ratio {a['mean_ratio']:.4f}, min ratio {a['min_ratio']:.4f} over {a['rows']} rows")
    return worst


# -- entry point -----------------------------------------------------------------


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "bench": cmd_bench}


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _merge(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (LPBreakdown, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
