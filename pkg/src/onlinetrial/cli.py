"""Command line: ``simulate``, ``case-study`` and ``validate``.

Exit codes are 0 on success, 1 when a validation check fails and 2 for
usage or configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor

from . import casestudy
from . import error_control as ec
from .metrics import ProcedureSpec, run_studies, worker_count
from .oracle import run_oracle_suite
from .scenarios import ENTRY_PATTERNS, MEAN_PATTERNS, StudyGrid, enumerate_grid, is_batched_entry

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

CSV_COLUMNS = ("scenario_id", "K", "n_bound", "entry_pattern", "mean_pattern", "m", "algorithm",
               "alpha", "metric", "estimate", "mc_se", "reps", "seed")

CONFIG_KEYS = {
    "k_values": list,
    "n_bound_multipliers": list,
    "mean_scenarios": list,
    "entry_patterns": list,
    "m_values": list,
    "n": int,
    "r": int,
    "sigma": (int, float),
    "alpha": (int, float),
    "mu0": (int, float),
    "algorithms": list,
    "reps": int,
    "base_seed": int,
    "output": str,
}

DEFAULT_REPS = 10_000
DEFAULT_SEED = 1


class ConfigError(ValueError):
    """Invalid study configuration; the message names the offending field."""


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


def load_config(path):
    """Parse and check a study config file. Unknown keys are rejected."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    return parse_config(doc, source=str(path))


def parse_config(doc, source="<config>"):
    if not isinstance(doc, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    unknown = sorted(set(doc) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError(f"{source}: unknown key(s) {unknown}; allowed: {sorted(CONFIG_KEYS)}")
    for key, kind in CONFIG_KEYS.items():
        if key in doc and (not isinstance(doc[key], kind) or isinstance(doc[key], bool)):
            raise ConfigError(f"{source}: field '{key}' has the wrong type")
    if "algorithms" not in doc or not doc["algorithms"]:
        raise ConfigError(f"{source}: field 'algorithms' must list at least one procedure")
    for key, allowed in (("mean_scenarios", MEAN_PATTERNS), ("entry_patterns", None)):
        for k, v in enumerate(doc.get(key, [])):
            if not isinstance(v, str) or (allowed and v not in allowed):
                raise ConfigError(f"{source}: {key}[{k}] = {v!r} is not a known pattern")
    specs = []
    for k, a in enumerate(doc["algorithms"]):
        try:
            if isinstance(a, dict) and set(a) - {"name", "params"}:
                raise ValueError(f"unknown key(s) {sorted(set(a) - {'name', 'params'})}")
            spec = ProcedureSpec.parse(a)
            if not spec.is_offline:
                ec.make_params(spec.name, 0.025, 1, **dict(spec.params))
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{source}: algorithms[{k}]: {exc}") from exc
        specs.append(spec)
    defaults = StudyGrid()
    try:
        grid = StudyGrid(
            k_values=tuple(doc.get("k_values", defaults.k_values)),
            n_bound_multipliers=tuple(doc.get("n_bound_multipliers", defaults.n_bound_multipliers)),
            mean_patterns=tuple(doc.get("mean_scenarios", defaults.mean_patterns)),
            entry_patterns=tuple(doc.get("entry_patterns", defaults.entry_patterns)),
            m_values=tuple(doc.get("m_values", defaults.m_values)),
            n=doc.get("n", defaults.n),
            r=doc.get("r", defaults.r),
            sigma=float(doc.get("sigma", defaults.sigma)),
            mu0=float(doc.get("mu0", defaults.mu0)),
            alpha=float(doc.get("alpha", defaults.alpha)),
        )
        scenarios = enumerate_grid(grid)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from exc
    return {
        "grid": grid,
        "scenarios": scenarios,
        "algorithms": specs,
        "reps": doc.get("reps", DEFAULT_REPS),
        "base_seed": doc.get("base_seed", DEFAULT_SEED),
        "output": doc.get("output"),
    }


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------


def simulation_rows(cfg, reps, seed, workers=None):
    """CSV rows (lists of strings) for every scenario and applicable algorithm."""
    rows = []
    n_workers = worker_count(workers)
    pool = ProcessPoolExecutor(n_workers) if n_workers > 1 else None
    try:
        for sc in cfg["scenarios"]:
            batched = is_batched_entry(sc.config.entry_times, sc.config.duration)
            specs = [s for s in cfg["algorithms"] if batched or not s.is_batch]
            if not specs:
                continue
            res = run_studies(sc.config, specs, reps, seed, sc.scenario_id, sc.mean_spec,
                              workers=n_workers, executor=pool)
            for label, summary in res.items():
                for metric, est in summary.items():
                    rows.append([sc.scenario_id, str(sc.config.k_arms), str(sc.config.n_bound),
                                 sc.entry_pattern, sc.mean_pattern, str(sc.m), label,
                                 f"{sc.config.alpha:.6f}", metric, f"{est.value:.6f}",
                                 f"{est.mc_se:.6f}", str(reps), str(seed)])
    finally:
        if pool is not None:
            pool.shutdown()
    rows.sort()
    return rows


def render_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    w.writerows(rows)
    return buf.getvalue()


def write_atomic(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".onlinetrial-", suffix=".csv", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def cmd_simulate(args):
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    reps = args.reps if args.reps is not None else cfg["reps"]
    seed = args.seed if args.seed is not None else cfg["base_seed"]
    if reps < 2:
        print("error: reps must be at least 2 for a standard error", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or cfg["output"]
    text = render_csv(simulation_rows(cfg, reps, seed, args.workers))
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        write_atomic(out, text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# case study
# ---------------------------------------------------------------------------


def cmd_case_study(args):
    algorithms = casestudy.ALGORITHMS
    if args.algorithm:
        try:
            algorithms = tuple("bh" if a.lower() == "bh" else ec.canonical_name(a)
                               for a in args.algorithm)
        except KeyError as exc:
            print(f"error: {exc.args[0]}", file=sys.stderr)
            return EXIT_USAGE
    try:
        if args.input:
            inp = casestudy.load_case_study(args.input, args.alpha, args.n_bound)
            if args.order == "swapped":
                raise ValueError("--order applies to the built-in data only")
        else:
            inp = casestudy.stampede(args.order, tuple(args.alpha or casestudy.ALPHAS),
                                     args.n_bound or 20)
        rows = casestudy.run_case_study(inp, algorithms)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(casestudy.format_rows(rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# validate
# ---------------------------------------------------------------------------


def _parse_set(items):
    """``proc.param=value`` strings to ``{proc: {param: value}}``."""
    out = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        name, dot, param = key.partition(".")
        if not sep or not dot:
            raise ValueError(f"--set expects proc.param=value, got {item!r}")
        try:
            v = float(value)
        except ValueError:
            v = value
        out.setdefault(ec.canonical_name(name), {})[param] = v
    return out


def cmd_validate(args):
    try:
        overrides = _parse_set(args.set)
        golden = casestudy.load_golden(args.golden) if args.golden else None
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        reports = run_oracle_suite(overrides, bh_instances=args.bh_instances)
        reports += casestudy.compare_golden(golden, overrides=overrides)
    except (KeyError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for rep in reports:
        print(rep.to_tsv())
    failed = sum(not r.passed for r in reports)
    print(f"# {len(reports) - failed}/{len(reports)} checks passed", file=sys.stderr)
    return EXIT_FAIL if failed else EXIT_OK


# ---------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="onlinetrial", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a simulation study and write CSV")
    s.add_argument("config", help="study config (JSON)")
    s.add_argument("--reps", type=int, help="replications per scenario")
    s.add_argument("--seed", type=int, help="base seed")
    s.add_argument("--out", help="output CSV path ('-' for stdout)")
    s.add_argument("--workers", type=int,
                   help="worker processes (default: $ONLINETRIAL_THREADS or 1)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("case-study", help="replay the STAMPEDE p-values")
    c.add_argument("--order", choices=("default", "swapped"), default="default")
    c.add_argument("--alpha", type=float, nargs="+")
    c.add_argument("--n-bound", type=int)
    c.add_argument("--input", help="case-study JSON replacing the built-in data")
    c.add_argument("--algorithm", nargs="+", help="subset of procedures to run")
    c.set_defaults(func=cmd_case_study)

    v = sub.add_parser("validate", help="run the oracle suite and golden comparison")
    v.add_argument("--golden", help="golden table JSON (default: built in)")
    v.add_argument("--set", action="append", metavar="PROC.PARAM=VALUE",
                   help="override a procedure parameter, e.g. lond.gamma=power")
    v.add_argument("--bh-instances", type=int, default=2000)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
