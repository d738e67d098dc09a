"""Command-line entry point: ``rrpursuit <subcommand> ...``.

Exit codes: 0 success, 1 verification counterexample, 2 bad arguments,
3 bad or unusable data, 4 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bench import ExperimentConfig, resolve_threshold, run_experiment, write_csv
from .errors import (BudgetExceeded, ConfigError, InvalidDims, InvalidParam, PremiseUnmet,
                     RRPursuitError)
from .lincore import load_matrix
from .problems import SparseSignal, read_vector_csv, write_vector_csv
from .pursuit import Algorithm, run_pursuit
from .selectors import (CLI_NAMES, Selector, select_oracle_eps, select_oracle_k0,
                        select_oracle_sigma, select_rrt, select_tf)
from .thresholds import cached_train_gamma_lb, gamma_rrt_alpha, lookup_cache
from .verify import instance_guarantees, report_json, ric_bruteforce, verify_sufficient_recovery

EXIT_OK, EXIT_FAIL, EXIT_ARGS, EXIT_DATA, EXIT_BUDGET = 0, 1, 2, 3, 4


class ArgError(Exception):
    """Bad command-line usage detected after parsing."""


class DataError(Exception):
    """Input files are missing, malformed or unusable."""


def _write_json(path, obj) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _manifest(out: Path, args, argv, outputs, base_seed=None, extra=None) -> None:
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    m = {
        "subcommand": args.command,
        "argv": list(argv),
        "config": resolved,
        "base_seed": base_seed,
        "version": __version__,
        "outputs": sorted(str(p) for p in outputs),
    }
    if extra:
        m.update(extra)
    _write_json(out / "manifest.json", m)


def _out_dir(path) -> Path:
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _load_matrix(path, normalize=True):
    try:
        return load_matrix(path, normalize=normalize)
    except FileNotFoundError:
        raise DataError(f"--matrix: no such file {path}") from None
    except (ValueError, RRPursuitError) as exc:
        raise DataError(f"--matrix: {exc}") from None


def _load_vector(path, flag):
    try:
        return read_vector_csv(path)
    except FileNotFoundError:
        raise DataError(f"{flag}: no such file {path}") from None
    except ValueError as exc:
        raise DataError(f"{flag}: {exc}") from None


# --- solve ----------------------------------------------------------------

def _rrt_gamma(args, n, p, alg) -> float:
    if args.gamma is not None:
        if args.threshold is not None:
            raise ArgError("--gamma and --threshold are mutually exclusive")
        return args.gamma
    if args.threshold is None:
        raise ArgError("--selector rrt needs --gamma or --threshold {alpha:A | trained:PATH}")
    kind, _, val = args.threshold.partition(":")
    if kind == "alpha":
        try:
            alpha = float(val)
        except ValueError:
            raise ArgError(f"--threshold: bad alpha {val!r}") from None
        try:
            return gamma_rrt_alpha(n, p, args.kmax, alpha).value
        except (InvalidParam, InvalidDims) as exc:
            raise ArgError(f"--threshold: {exc}") from None
    if kind == "trained":
        try:
            return lookup_cache(val, n, p, alg)
        except FileNotFoundError:
            raise DataError(f"--threshold: no such cache {val}") from None
        except KeyError as exc:
            raise DataError(f"--threshold: {exc.args[0]}") from None
        except ValueError as exc:
            raise DataError(f"--threshold: {exc}") from None
    raise ArgError("--threshold must be alpha:A or trained:PATH")


def cmd_solve(args, argv) -> int:
    alg = Algorithm.parse(args.alg)
    selector = CLI_NAMES[args.selector]
    needed = {Selector.ORACLE_K0: ("k0", "--k0"), Selector.ORACLE_SIGMA: ("sigma", "--sigma"),
              Selector.ORACLE_EPS: ("eps2", "--eps2")}
    if selector in needed and getattr(args, needed[selector][0]) is None:
        raise ArgError(f"--selector {args.selector} needs {needed[selector][1]}")
    x = _load_matrix(args.matrix, not args.no_normalize)
    y = _load_vector(args.obs, "--obs")
    if y.size != x.n:
        raise DataError(f"--obs: length {y.size} does not match the {x.n} matrix rows")
    if not np.any(y):
        raise DataError("--obs: observation is all zeros")
    if args.kmax is not None and args.kmax < 1:
        raise ArgError("--kmax must be >= 1")
    gamma = _rrt_gamma(args, x.n, x.p, alg) if selector is Selector.RRT else None
    trace = run_pursuit(alg, x, y, args.kmax)
    try:
        if selector is Selector.TF:
            res = select_tf(trace)
        elif selector is Selector.RRT:
            res = select_rrt(trace, gamma)
        elif selector is Selector.ORACLE_K0:
            res = select_oracle_k0(trace, args.k0)
        elif selector is Selector.ORACLE_SIGMA:
            res = select_oracle_sigma(trace, args.sigma)
        else:
            res = select_oracle_eps(trace, args.eps2)
    except InvalidParam as exc:
        raise ArgError(f"--{args.selector}: {exc}") from None

    out = _out_dir(args.out)
    write_vector_csv(out / "beta_hat.csv", res.beta_hat, header="beta_hat")
    support = res.to_dict()
    if gamma is not None:
        support["gamma"] = gamma
    _write_json(out / "support.json", support)
    _write_json(out / "trace.json", trace.to_dict())
    _manifest(out, args, argv, [out / "beta_hat.csv", out / "support.json", out / "trace.json"])
    print(f"k_hat={res.k_hat} support={list(res.support)} "
          f"residual={trace.residual_norms[res.k_hat]:.6g} termination={trace.termination.value}")
    return EXIT_OK


# --- thresholds -----------------------------------------------------------

def _check_dims(n, p):
    if n < 2 or p < 1:
        raise ArgError(f"--n/--p: invalid dimensions n={n}, p={p}")


def cmd_train(args, argv) -> int:
    _check_dims(args.n, args.p)
    if args.ntr < 1:
        raise ArgError("--ntr must be >= 1")
    if args.seed < 0:
        raise ArgError("--seed must be >= 0")
    out = _out_dir(args.out)
    cache = Path(args.cache) if args.cache else out / "gamma_cache.json"
    try:
        spec, hit = cached_train_gamma_lb(cache, args.n, args.p, args.ntr, args.alg, args.seed,
                                          args.workers)
    except (InvalidDims, InvalidParam) as exc:
        raise ArgError(f"--n/--p: {exc}") from None
    except ValueError as exc:
        raise DataError(f"--cache: {exc}") from None
    _manifest(out, args, argv, [cache], args.seed, {"value": spec.value, "cache_hit": hit})
    print(repr(spec.value) + ("  (cache hit)" if hit else ""))
    return EXIT_OK


def cmd_gamma_alpha(args, argv) -> int:
    _check_dims(args.n, args.p)
    try:
        spec = gamma_rrt_alpha(args.n, args.p, args.kmax, args.alpha)
    except (InvalidDims, InvalidParam) as exc:
        raise ArgError(str(exc)) from None
    if args.out:
        out = _out_dir(args.out)
        _manifest(out, args, argv, [], extra={"value": spec.value})
    print(repr(spec.value))
    return EXIT_OK


# --- experiment -----------------------------------------------------------

def cmd_experiment(args, argv) -> int:
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"--config: no such file {args.config}") from None
    except json.JSONDecodeError as exc:
        raise ArgError(f"--config: invalid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ArgError("--config: expected a JSON object")
    if args.seed is not None:
        raw["base_seed"] = args.seed
    if raw.get("base_seed") is None:
        raise ArgError("--seed is required (or base_seed in the config)")
    try:
        config = ExperimentConfig.from_dict(raw)
    except ConfigError as exc:
        raise ArgError(f"--config: {exc}") from None
    out = _out_dir(args.out)
    gamma = resolve_threshold(config, args.workers)
    records = run_experiment(config, workers=args.workers, gamma_lb=gamma)
    csv_path = out / "results.csv"
    write_csv(csv_path, records, config)
    _manifest(out, args, argv, [csv_path], config.base_seed,
              {"resolved_config": config.to_dict(), "gamma_lb": gamma})
    print(f"{len(records)} rows -> {csv_path}")
    return EXIT_OK


# --- verification ---------------------------------------------------------

def cmd_ric(args, argv) -> int:
    x = _load_matrix(args.matrix, not args.no_normalize)
    try:
        est = ric_bruteforce(x, args.k, args.budget)
    except InvalidParam as exc:
        raise ArgError(f"--k: {exc}") from None
    out = _out_dir(args.out)
    report = {"k": est.k, "delta_k": est.delta_k, "subsets_checked": est.subsets_checked,
              "n": x.n, "p": x.p}
    _write_json(out / "ric.json", report)
    _manifest(out, args, argv, [out / "ric.json"])
    print(repr(est.delta_k))
    return EXIT_OK


def cmd_verify(args, argv) -> int:
    x = _load_matrix(args.matrix, not args.no_normalize)
    beta = _load_vector(args.beta, "--beta")
    if beta.size != x.p:
        raise DataError(f"--beta: length {beta.size} does not match the {x.p} matrix columns")
    signal = SparseSignal(beta)
    if signal.k0 < 1:
        raise DataError("--beta: signal has no nonzero entries")
    if (args.eps2 is None) == (args.eps_factor is None):
        raise ArgError("give exactly one of --eps2 and --eps-factor")
    out = _out_dir(args.out)
    try:
        guar = instance_guarantees(x, signal, args.gamma_lb, args.alg, args.gamma_runs, args.seed,
                                   args.budget)
        eps2 = args.eps2 if args.eps2 is not None else args.eps_factor * guar.threshold
        report = verify_sufficient_recovery(x, signal, eps2, args.trials, args.seed,
                                            report=guar)
    except PremiseUnmet as exc:
        _write_json(out / "verify.json", {"status": "premise-unmet", "reason": str(exc)})
        _manifest(out, args, argv, [out / "verify.json"], args.seed)
        print(f"premise unmet: {exc}", file=sys.stderr)
        return EXIT_DATA
    except InvalidParam as exc:
        raise ArgError(str(exc)) from None
    report["status"] = "pass" if report["passed"] else "fail"
    with open(out / "verify.json", "w", newline="\n") as fh:
        fh.write(report_json(report) + "\n")
    _manifest(out, args, argv, [out / "verify.json"], args.seed)
    print(f"{report['status']}: eps2={eps2:.6g} errors={report['support_errors']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rrpursuit", description="Residual-ratio greedy sparse recovery")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run a pursuit and pick an iteration count")
    s.add_argument("--matrix", required=True, help="design matrix (.csv or binary)")
    s.add_argument("--obs", required=True, help="observation vector (.csv)")
    s.add_argument("--alg", default="omp", type=str.lower, choices=["omp", "ols"])
    s.add_argument("--selector", required=True, choices=sorted(CLI_NAMES))
    s.add_argument("--k0", type=int)
    s.add_argument("--sigma", type=float)
    s.add_argument("--eps2", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--threshold", help="alpha:A or trained:CACHE_PATH")
    s.add_argument("--kmax", type=int)
    s.add_argument("--no-normalize", action="store_true",
                   help="require unit-norm columns instead of rescaling them")
    s.add_argument("--out", default=".")
    s.set_defaults(func=cmd_solve)

    t = sub.add_parser("train", help="noise-assisted training of the RRT threshold")
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--p", type=int, required=True)
    t.add_argument("--alg", default="omp", type=str.lower, choices=["omp", "ols"])
    t.add_argument("--ntr", type=int, default=1000)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--cache", help="JSON cache sidecar (default OUT/gamma_cache.json)")
    t.add_argument("--workers", type=int, default=1)
    t.add_argument("--out", default=".")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("gamma-alpha", help="closed-form RRT threshold")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=int, required=True)
    g.add_argument("--kmax", type=int)
    g.add_argument("--alpha", type=float, default=0.1)
    g.add_argument("--out")
    g.set_defaults(func=cmd_gamma_alpha)

    e = sub.add_parser("experiment", help="Monte Carlo sweep from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int, default=1)
    e.add_argument("--out", default=".")
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("ric", help="exact restricted isometry constant by enumeration")
    r.add_argument("--matrix", required=True)
    r.add_argument("--k", type=int, required=True)
    r.add_argument("--budget", type=int, default=2_000_000)
    r.add_argument("--no-normalize", action="store_true")
    r.add_argument("--out", default=".")
    r.set_defaults(func=cmd_ric)

    v = sub.add_parser("verify", help="empirical check of the exact-recovery guarantees")
    v.add_argument("--matrix", required=True)
    v.add_argument("--beta", required=True, help="true coefficient vector (.csv)")
    v.add_argument("--eps2", type=float)
    v.add_argument("--eps-factor", type=float, help="noise radius as a multiple of the threshold")
    v.add_argument("--trials", type=int, default=500)
    v.add_argument("--seed", type=int, required=True)
    v.add_argument("--gamma-lb", type=float)
    v.add_argument("--gamma-runs", type=int, default=2000)
    v.add_argument("--alg", default="omp", type=str.lower, choices=["omp"])
    v.add_argument("--budget", type=int, default=2_000_000)
    v.add_argument("--no-normalize", action="store_true")
    v.add_argument("--out", default=".")
    v.set_defaults(func=cmd_verify)
    return ap


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args, argv)
    except ArgError as exc:
        print(f"rrpursuit {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except DataError as exc:
        print(f"rrpursuit {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BudgetExceeded as exc:
        print(f"rrpursuit {args.command}: {exc} (required={exc.required})", file=sys.stderr)
        return EXIT_BUDGET
    except (RRPursuitError, OSError) as exc:
        print(f"rrpursuit {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
