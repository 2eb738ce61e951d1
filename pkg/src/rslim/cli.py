"""Command-line front end: ``rslim <subcommand> ...``.

Exit status 0 on success, 2 on bad arguments, 3 on a numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager

import numpy as np

from . import phase, rank_k, rs_potential, scalar_channel, state_evolution
from .errors import NumericalError, RslimError
from .prior import load_prior_file, parse_prior
from .simulate import (
    AMPEstimator, PCAEstimator, exact_posterior_stats, exact_sbm_stats, gen_gaussian_instance,
    gen_sbm, run_replicates,
)


class UsageError(Exception):
    pass


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(f"{v:.12g}") if np.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def parse_grid(text: str) -> np.ndarray:
    """``a:b:n`` -> n evenly spaced values from a to b inclusive."""
    parts = text.split(":")
    try:
        if len(parts) != 3:
            raise ValueError
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise UsageError(f"grid {text!r} is not of the form a:b:n") from None
    if n < 1 or a > b:
        raise UsageError(f"grid {text!r} needs n >= 1 and a <= b")
    if n == 1:
        return np.array([a])
    return np.linspace(a, b, n)


def read_config(path: str) -> dict:
    """Plain ``key=value`` lines; ``#`` starts a comment; keys use flag names."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, int(args.threads))
    env = os.environ.get("RSLIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"RSLIM_THREADS={env!r} is not an integer") from None
    return os.cpu_count() or 1


@contextmanager
def _pool(args):
    n = _threads(args)
    if n == 1:
        yield None
    else:
        with ThreadPoolExecutor(max_workers=n) as ex:
            yield ex


def _prior(args, k: int = 1):
    if getattr(args, "prior_file", None):
        return load_prior_file(args.prior_file, k=k)
    if not getattr(args, "prior", None):
        raise UsageError("one of --prior or --prior-file is required")
    return parse_prior(args.prior)


def _resolved(args) -> dict:
    skip = {"func", "config", "out", "threads"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _emit(args, text: str):
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)


def _csv(args, header, rows, meta: dict | None = None):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    _emit(args, buf.getvalue())
    if args.out not in (None, "-"):
        # CSV must start with its header, so the run record goes alongside it
        record = {"config": _resolved(args)}
        if meta:
            record.update(meta)
        with open(args.out + ".config.json", "w") as fh:
            json.dump(_jsonable(record), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _json(args, payload: dict):
    payload = dict(payload)
    payload["config"] = _resolved(args)
    _emit(args, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


# subcommands ---------------------------------------------------------------

def cmd_scalar(args):
    prior = _prior(args)
    gamma = parse_grid(args.gamma_grid)
    if np.any(gamma < 0):
        raise UsageError("gamma must be >= 0")
    mm, mi, g = scalar_channel.channel_terms(prior, gamma, tol=args.tol)
    _csv(args, ["gamma", "mmse", "i", "g"], zip(gamma, mm, mi, g))


def _positive_lambda(v):
    if not v > 0:
        raise UsageError("lambda must be > 0")


def cmd_solve(args):
    prior = _prior(args)
    _positive_lambda(args.lam)
    _json(args, rs_potential.solve(prior, args.lam).to_dict())


def cmd_sweep(args):
    prior = _prior(args)
    grid = parse_grid(args.lambda_grid)
    _positive_lambda(grid.min())
    with _pool(args) as ex:
        sols = rs_potential.solve_many(prior, grid, executor=ex)
    rows = [(s.lam, s.q_star, s.mi_limit, s.mmse_limit, s.dmse, s.degenerate) for s in sols]
    _csv(args, ["lambda", "q_star", "mi_limit", "mmse_limit", "dmse", "degenerate"], rows)


def cmd_se(args):
    prior = _prior(args)
    _positive_lambda(args.lam)
    eta = state_evolution.ETA_FACTOR * prior.second_moment if args.eta is None else args.eta
    trace = state_evolution.iterate(prior, args.lam, eta, tol=args.tol, max_iter=args.max_iter)
    _csv(args, ["t", "q"], enumerate(trace.iterates),
         meta={"converged": trace.converged, "q_limit": trace.q_limit, "residual": trace.residual})


def _phase_rows(args, family: str, grid_text: str):
    grid = parse_grid(grid_text)
    with _pool(args) as ex:
        if family == "sparse_rademacher":
            rows, boundary = phase.sweep_rho(grid, executor=ex)
            name = "rho"
        else:
            rows, boundary = phase.sweep_p(grid, executor=ex)
            name = "p"
    print(f"{name}* = {fmt(boundary)}", file=sys.stderr)
    table = [(r.param, r.lambda_c, r.hard_lo, r.hard_hi) for r in rows]
    _csv(args, [name, "lambda_c", "hard_lo", "hard_hi"], table, meta={f"{name}_star": boundary})


def cmd_phase(args):
    _phase_rows(args, args.family, args.grid)


def cmd_rankk(args):
    if not args.prior_file:
        raise UsageError("rankk needs --prior-file")
    prior = load_prior_file(args.prior_file, k=args.k)
    _positive_lambda(args.lam)
    _json(args, rank_k.solve_k(prior, args.lam, seed=args.seed).to_dict())


def cmd_simulate(args):
    prior = _prior(args)
    if args.lam < 0:
        raise UsageError("lambda must be >= 0")
    if args.n < 2 or args.replicates < 1:
        raise UsageError("need --n >= 2 and --replicates >= 1")

    def one(r, seed):
        inst = gen_gaussian_instance(prior, args.lam, args.n, seed)
        if args.estimator == "exact":
            s = exact_posterior_stats(inst, prior)
            return (r, s.matrix_mmse, np.sqrt(s.overlap_sq_mean), s.free_energy)
        if args.estimator == "amp":
            est = AMPEstimator(prior, args.lam, max_iter=args.max_iter, damping=args.damping,
                               random_state=seed % 2**32).fit(inst)
            return (r, est.mse_trajectory_[-1], est.overlap_trajectory_[-1])
        est = PCAEstimator(lam=args.lam, random_state=seed % 2**32).fit(inst)
        return (r, est.score_mse(inst.x_true), abs(float(est.v_ @ inst.x_true)) / args.n)

    with _pool(args) as ex:
        rows = run_replicates(one, args.seed, args.replicates, ex)
    header = ["replicate", "mse", "overlap"] + (["free_energy"] if args.estimator == "exact" else [])
    _csv(args, header, rows)


def cmd_sbm(args):
    if args.replicates < 1:
        raise UsageError("need --replicates >= 1")

    def one(r, seed):
        s = exact_sbm_stats(gen_sbm(args.p, args.d, args.eps, args.n, seed))
        return (r, s["mi_per_node"], s["mmse_g"], s["overlap"])

    with _pool(args) as ex:
        rows = run_replicates(one, args.seed, args.replicates, ex)
    _csv(args, ["replicate", "mi_per_node", "mmse_g", "overlap"], rows)


def cmd_figure(args):
    if args.which == "comp":
        prior = parse_prior(args.prior or "rademacher")
        grid = parse_grid(args.lambda_grid)
        _positive_lambda(grid.min())
        with _pool(args) as ex:
            sols = rs_potential.solve_many(prior, grid, executor=ex)
        rows = [(s.lam, s.mmse_limit, phase.pca_mse(s.lam)) for s in sols]
        _csv(args, ["lambda", "mmse", "pca_mse"], rows)
    else:
        _phase_rows(args, "sbm", args.grid)


# parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $RSLIM_THREADS or logical cores)")
    common.add_argument("--config", default=None, help="key=value file merged under the flags")

    prior_opts = argparse.ArgumentParser(add_help=False)
    prior_opts.add_argument("--prior", help="name[:param], e.g. sparse_rademacher:0.25")
    prior_opts.add_argument("--prior-file", help="text file of 'atom weight' rows")

    p = argparse.ArgumentParser(prog="rslim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("scalar", parents=[common, prior_opts], help="scalar channel mmse, i, G")
    s.add_argument("--gamma-grid", required=True)
    s.add_argument("--tol", type=float, default=scalar_channel.DEFAULT_TOL)
    s.set_defaults(func=cmd_scalar)

    s = sub.add_parser("solve", parents=[common, prior_opts], help="RS limits at one lambda")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", parents=[common, prior_opts], help="RS limits over a lambda grid")
    s.add_argument("--lambda-grid", required=True)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("se", parents=[common, prior_opts], help="state evolution trace")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--eta", type=float, default=None)
    s.add_argument("--tol", type=float, default=state_evolution.DEFAULT_TOL)
    s.add_argument("--max-iter", type=int, default=state_evolution.DEFAULT_MAX_ITER)
    s.set_defaults(func=cmd_se)

    s = sub.add_parser("phase", parents=[common], help="lambda_c over a prior family")
    s.add_argument("--family", choices=["sparse_rademacher", "sbm"], required=True)
    s.add_argument("--grid", required=True)
    s.set_defaults(func=cmd_phase)

    s = sub.add_parser("rankk", parents=[common, prior_opts], help="matrix potential for k <= 3")
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_rankk)

    s = sub.add_parser("simulate", parents=[common, prior_opts], help="finite-n Gaussian-channel runs")
    s.add_argument("--lambda", dest="lam", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--estimator", choices=["exact", "amp", "pca"], default="exact")
    s.add_argument("--damping", type=float, default=0.2)
    s.add_argument("--max-iter", type=int, default=30)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sbm", parents=[common], help="exact tiny-n block-model statistics")
    s.add_argument("--p", type=float, required=True)
    s.add_argument("--d", type=float, required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_sbm)

    s = sub.add_parser("figure", parents=[common], help="data behind the two reference figures")
    s.add_argument("which", choices=["comp", "phase"])
    s.add_argument("--prior", default=None, help="prior for 'comp' (default rademacher)")
    s.add_argument("--lambda-grid", default="0.1:4:40")
    s.add_argument("--grid", default="0.05:0.5:10", help="p grid for 'phase'")
    s.set_defaults(func=cmd_figure)
    return p


def _apply_config(parser, argv):
    """Load ``--config`` values as subcommand defaults so explicit flags win."""
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    subs = parser._subparsers._group_actions[0].choices
    command = next((a for a in argv if a in subs), None)
    if known.config and command:
        sub = subs[command]
        actions = {a.dest: a for a in sub._actions}
        for key, raw in read_config(known.config).items():
            action = actions.get(key)
            if action is None or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r}")
            value = action.type(raw) if action.type else raw
            if action.choices and value not in action.choices:
                raise UsageError(f"config {key}={raw!r} not in {sorted(action.choices)}")
            action.required = False
            sub.set_defaults(**{key: value})
    return parser.parse_args(argv)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        args.func(args)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rslim: error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"rslim: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (RslimError, ValueError, OSError) as exc:
        print(f"rslim: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
