"""Command-line interface: ``jsqstab {check,lp,simulate,compare,sweep,verify}``.

Exit codes
    0   Stable (``check``), or success for the other commands
    1   ``compare`` found ordering violations, or a ``verify`` suite failed
    2   Unstable
    3   Critical (load within 1e-9 of the boundary)
    4   Inconclusive
    64  usage, configuration or parameter error
    70  internal solver inconsistency
    74  I/O error (unreadable config, unwritable output)
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

import numpy as np

from . import lp as lpmod
from . import serialize
from .config import CompareConfig, ExperimentConfig, SweepSpec, read_json
from .errors import ConfigurationError, InconsistencyError, ParameterError, SolverError
from .network_sim import simulate_network
from .point_process import GoverningSequence, derive_seed
from .queue_core import compare_coupled
from .stability import (
    CRITICAL,
    INCONCLUSIVE,
    STABLE,
    UNSTABLE,
    check_lbn_lp,
    check_lbn_sufficient,
    check_sigma,
    check_wp,
    empirical_diagnostics,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_SOFTWARE, EXIT_IO = 0, 1, 64, 70, 74
STATUS_EXIT = {STABLE: 0, UNSTABLE: 2, CRITICAL: 3, INCONCLUSIVE: 4}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _common(default) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", default=default)
    p.add_argument("--seed", type=int, metavar="N", default=default)
    p.add_argument("--out", metavar="PATH", default=default)
    p.add_argument("--tol", type=float, metavar="X", default=default)
    p.add_argument("--horizon", type=float, metavar="T", default=default)
    p.add_argument("--replicas", type=int, metavar="R", default=default)
    return p


def build_parser() -> argparse.ArgumentParser:
    # global flags are accepted before or after the subcommand
    parser = _Parser(prog="jsqstab", description=__doc__.split("\n")[0],
                     parents=[_common(None)])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    shared = _common(argparse.SUPPRESS)
    sub.add_parser("check", parents=[shared], help="analytic stability verdict")
    sub.add_parser("lp", parents=[shared], help="stability linear program and its solution")
    sub.add_parser("simulate", parents=[shared], help="simulate the network, write CSV + diagnostics")
    sub.add_parser("compare", parents=[shared], help="coupled single-queue comparison")
    sw = sub.add_parser("sweep", parents=[shared], help="verdict, LP objective and slope over a parameter")
    sw.add_argument("--sweep", metavar="PATH", help="sweep spec JSON (default: 'sweep' key of the config)")
    vf = sub.add_parser("verify", parents=[shared], help="run the built-in property suites")
    vf.add_argument("--suite", action="append", help="suite name (repeatable; default all)")
    return parser


# ---------------------------------------------------------------- helpers


def _load(args) -> dict:
    if not args.config:
        raise UsageError("--config PATH is required")
    return read_json(args.config)


def _experiment(args) -> ExperimentConfig:
    data = _load(args)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.horizon is not None:
        data["horizon"] = args.horizon
    if args.replicas is not None:
        data.setdefault("analysis", {})["replicas"] = args.replicas
    return ExperimentConfig.from_dict(data)


def _tol(args) -> float:
    tol = lpmod.TOL if args.tol is None else args.tol
    if not tol > 0:
        raise ParameterError("--tol must be positive")
    return tol


def _emit(obj, out=None) -> None:
    text = serialize.dumps(obj)
    if out:
        serialize.write_text(out, text)
    sys.stdout.write(text)


def _side(path: str, suffix: str) -> Path:
    p = Path(path)
    return p.with_name(p.stem + suffix)


def replica_seed(seed: int, r: int) -> int:
    """Replica 0 runs on ``seed`` itself so one replica equals a plain run."""
    return seed if r == 0 else derive_seed(seed, f"replica:{r}")


def verdict_for(cfg: ExperimentConfig, tol: float = lpmod.TOL):
    params = cfg.params()
    if cfg.model == "sigma":
        return check_sigma(params)
    if cfg.model in ("wp", "gamma"):
        return check_wp(params)
    verdict = check_lbn_lp(params, tol=tol)
    sufficient = check_lbn_sufficient(params)
    verdict.notes.append(f"sufficient-condition check: {sufficient.status}; " + "; ".join(sufficient.notes))
    return verdict


# ---------------------------------------------------------------- commands


def cmd_check(args) -> int:
    cfg = _experiment(args)
    verdict = verdict_for(cfg, _tol(args))
    _emit(verdict.to_dict(), args.out)
    return STATUS_EXIT[verdict.status]


def cmd_lp(args) -> int:
    cfg = _experiment(args)
    tol = _tol(args)
    problem = lpmod.build_stability_lp(cfg.params())
    sol = lpmod.solve_simplex(problem, tol)
    _emit({"problem": problem.to_dict(), "solution": sol.to_dict()}, args.out)
    return EXIT_OK


def _replica_report(cfg: ExperimentConfig, seed: int):
    traj = simulate_network(cfg.network(seed=seed))
    diag = empirical_diagnostics(traj, cfg.K, cfg.window)
    summary = serialize.trajectory_summary(traj)
    summary.update(seed=seed, K=cfg.K, window=cfg.window, queues=diag)
    return traj, summary


def cmd_simulate(args) -> int:
    cfg = _experiment(args)
    out = args.out or cfg.output.get("trajectory")
    reports = []
    for r in range(cfg.replicas):
        traj, summary = _replica_report(cfg, replica_seed(cfg.seed, r))
        reports.append(summary)
        if out:
            suffix = "" if cfg.replicas == 1 else f"_r{r}"
            csv_path = _side(out, suffix + Path(out).suffix) if suffix else Path(out)
            serialize.write_text(csv_path, serialize.trajectory_to_csv(traj))
            serialize.write_json(_side(out, suffix + ".json"), summary)
    report = reports[0] if cfg.replicas == 1 else {"replicas": reports}
    diag_path = cfg.output.get("diagnostics")
    if diag_path:
        serialize.write_json(diag_path, report)
    sys.stdout.write(serialize.dumps(report))
    return EXIT_OK


def _compare_instances(cfg: CompareConfig):
    if cfg.interarrivals is not None:
        yield GoverningSequence(cfg.interarrivals), GoverningSequence(cfg.services)
        return
    for k in range(cfg.instances):
        rng_a = np.random.default_rng(derive_seed(cfg.seed, f"compare:{k}:interarrival"))
        rng_s = np.random.default_rng(derive_seed(cfg.seed, f"compare:{k}:service"))
        yield (
            GoverningSequence(cfg.interarrival.sample(rng_a, cfg.n), cfg.interarrival.kind),
            GoverningSequence(cfg.service.sample(rng_s, cfg.n), cfg.service.kind),
        )


def cmd_compare(args) -> int:
    data = _load(args)
    if args.seed is not None:
        data["seed"] = args.seed
    cfg = CompareConfig.from_dict(data)
    reports = []
    bad = 0
    for k, (a, s) in enumerate(_compare_instances(cfg)):
        cmp = compare_coupled(a, s)
        summary = cmp.summary()
        summary["instance"] = k
        reports.append(summary)
        bad += bool(cmp.violations)
        if args.out and k == 0:
            serialize.write_text(args.out, serialize.comparison_to_csv(cmp))
    report = reports[0] if len(reports) == 1 else {
        "instances": len(reports),
        "instances_with_violations": bad,
        "max_q3_minus_q1": max(r["max_q3_minus_q1"] for r in reports),
        "reports": [r for r in reports if r["violations"]],
    }
    if args.out:
        serialize.write_json(_side(args.out, ".json"), report)
    sys.stdout.write(serialize.dumps(report))
    return EXIT_FAIL if bad else EXIT_OK


def sweep_rows(cfg: ExperimentConfig, spec: SweepSpec, tol: float = lpmod.TOL) -> list[dict]:
    """One row per sweep value, ascending.  Replica ``r`` uses the same seed at
    every value, so neighbouring points share their random numbers."""
    rows = []
    for value in spec.values:
        point = cfg.with_value(spec.parameter, float(value))
        verdict = verdict_for(point, tol)
        sol = lpmod.solve_simplex(lpmod.build_stability_lp(point.params()), tol)
        objective = sol.objective if sol.status == lpmod.OPTIMAL else float("inf")
        slopes = []
        for r in range(spec.replicas):
            traj = simulate_network(point.network(seed=replica_seed(cfg.seed, r)))
            diag = empirical_diagnostics(traj, point.K, point.window)
            slopes.append(max(d["slope"] for d in diag))
        rows.append(
            {
                "value": float(value),
                "verdict": verdict.status,
                "lp_objective": objective,
                "slope": float(np.mean(slopes)),
            }
        )
    return rows


def sweep_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["value", "verdict", "lp_objective", "slope"])
    for r in rows:
        w.writerow([repr(r["value"]), r["verdict"], repr(float(r["lp_objective"])), repr(r["slope"])])
    return buf.getvalue()


def cmd_sweep(args) -> int:
    cfg = _experiment(args)
    if args.sweep:
        spec = SweepSpec.from_dict(read_json(args.sweep))
    elif cfg.sweep is not None:
        spec = cfg.sweep
    else:
        raise ConfigurationError("sweep: no sweep spec (use --sweep PATH or a 'sweep' key)")
    if args.replicas is not None:
        spec = SweepSpec(spec.parameter, spec.start, spec.stop, spec.steps, args.replicas)
    text = sweep_csv(sweep_rows(cfg, spec, _tol(args)))
    out = args.out or cfg.output.get("sweep")
    if out:
        serialize.write_text(out, text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import SUITES, run_suites

    names = args.suite
    unknown = [n for n in names or [] if n not in SUITES]
    if unknown:
        raise UsageError(f"unknown suite {unknown[0]!r}; choose from {', '.join(SUITES)}")
    results = run_suites(args.seed or 0, names, _tol(args))
    report = [r.to_dict() for r in results]
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'} {r.name}: {len(r.failures)}/{r.instances} failing "
              f"({r.seconds:.2f} s)", file=sys.stderr)
    _emit(report, args.out)
    return EXIT_OK if all(r.ok for r in results) else EXIT_FAIL


COMMANDS = {
    "check": cmd_check,
    "lp": cmd_lp,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name in ("config", "seed", "out", "tol", "horizon", "replicas", "suite", "sweep"):
        if not hasattr(args, name):
            setattr(args, name, None)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        # ConfigurationError, ParameterError, DomainError etc. are ValueErrors
        print(f"jsqstab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, InconsistencyError) as exc:
        print(f"jsqstab: solver error: {exc}", file=sys.stderr)
        return EXIT_SOFTWARE
    except OSError as exc:
        print(f"jsqstab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
