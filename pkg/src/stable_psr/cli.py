"""Command-line front end: ``stable-psr <subcommand> [flags]``.

Tables are written as CSV with a header row and scalar summaries as JSON.
Failures print one JSON line on stderr and exit with 2 (usage), 3 (domain)
or 4 (numerical non-convergence).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from . import bounds, charfns, distance, inference, psr_engine
from .errors import ConvergenceError, DomainError
from .stable_core import GaussianWParams, cms_sample, map_w_to_stable, stable_log_cf

EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value) + 0.0)
    return str(value)


def _worker_count() -> int:
    raw = os.environ.get("STABLE_PSR_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"STABLE_PSR_THREADS must be an integer, got {raw!r}") from None


def _ordered_map(fn: Callable, items: Sequence) -> list:
    """Map ``fn`` over ``items``; results keep input order whatever the worker count."""
    workers = min(_worker_count(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """Parse ``start:stop[:count]`` (or a single number) into grid points.

    Without ``count`` a linear grid steps by 1 from ``start`` and a log grid
    uses 50 points.
    """
    parts = text.split(":")
    try:
        nums = [float(p) for p in parts]
    except ValueError:
        raise UsageError(f"bad grid {text!r}; expected start:stop[:count]") from None
    if len(nums) == 1:
        return np.array(nums)
    if len(nums) not in (2, 3):
        raise UsageError(f"bad grid {text!r}; expected start:stop[:count]")
    start, stop = nums[0], nums[1]
    if stop < start:
        raise UsageError("grid stop must not be below start")
    if len(nums) == 3:
        if nums[2] < 1 or nums[2] != int(nums[2]):
            raise UsageError("grid count must be a positive integer")
        count = int(nums[2])
    elif log:
        count = 50
    else:
        count = int(math.floor(stop - start + 1e-9)) + 1
    if log:
        if start <= 0:
            raise UsageError("log grids need a positive start")
        return np.geomspace(start, stop, count)
    if len(nums) == 2:
        return start + np.arange(count, dtype=float)
    return np.linspace(start, stop, count)


def _write_csv(path: Optional[str], header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    _emit(path, buf.getvalue())


def _write_json(path: Optional[str], payload: dict) -> None:
    _emit(path, json.dumps(payload, sort_keys=True) + "\n")


def _emit(path: Optional[str], text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _weights(args) -> GaussianWParams:
    return GaussianWParams(mu_w=args.mu_w, sigma_w=args.sigma_w)


# ----------------------------------------------------------------- subcommands


def cmd_sample(args) -> None:
    rng = np.random.default_rng(args.seed)
    w = _weights(args)
    if args.method == "stable":
        values = cms_sample(map_w_to_stable(args.alpha, w), args.n, rng)
    elif args.method == "xhat":
        values = psr_engine.sample_x_hat_batch(psr_engine.PsrConfig(args.alpha, w, args.c), args.n, rng)
    elif args.method == "truncated":
        values = psr_engine.sample_truncated_batch(psr_engine.PsrConfig(args.alpha, w, args.c), args.n, rng)
    else:
        d = args.d if args.d is not None else psr_engine.default_far_level(args.c)
        cfg = psr_engine.PsrConfig(args.alpha, w, args.c, d)
        values = psr_engine.sample_residual_batch(cfg, args.n, rng, near_factor=None if args.exact else 10.0)
    _write_csv(args.out, ["value"], ([v] for v in values))


def _cf_value(args, w: GaussianWParams, s: float) -> complex:
    alpha, c, name = args.alpha, args.c, args.name
    symmetric = w.mu_w == 0.0
    if name == "Z":
        return complex(-0.5 * s * s)
    if name == "Z_c":
        if symmetric:
            return complex(charfns.log_cf_Z_closed(alpha, c, charfns.CfPoint.from_s(alpha, c, w.sigma_w, s).w))
        return charfns.log_cf_Z_series(alpha, w, c, s)[0]
    if name == "X":
        return complex(stable_log_cf(map_w_to_stable(alpha, w), s))
    if name == "R_hat":
        return charfns.log_cf_R_hat(alpha, w, c, s)
    if symmetric:
        u = charfns.CfPoint.from_s(alpha, c, w.sigma_w, s).u
        closed = {
            "X_0c": charfns.log_cf_X0c_closed,
            "X_hat": charfns.log_cf_x_hat,
            "R": charfns.log_cf_R_closed,
        }[name]
        return complex(closed(alpha, c, u))
    if name == "X_0c":
        return charfns.log_cf_X0c_integral(alpha, w, c, s)
    if name == "R":
        return charfns.log_cf_R_integral(alpha, w, c, s)
    return charfns.log_cf_X0c_integral(alpha, w, c, s) + charfns.log_cf_R_hat(alpha, w, c, s)


def cmd_cf(args) -> None:
    w = _weights(args)
    if args.w_grid is not None:
        eta = charfns.eta_of(args.alpha)
        s_grid = np.sqrt(2.0 * args.c * parse_grid(args.w_grid, args.log) / eta)
    else:
        s_grid = parse_grid(args.s_grid, args.log)
    values = _ordered_map(lambda s: _cf_value(args, w, float(s)), list(s_grid))
    _write_csv(args.out, ["s", "re", "im"], ([s, v.real, v.imag] for s, v in zip(s_grid, values)))


def _bound_row(name: str, alpha: float, c: float, delta: Optional[float], n_env: int):
    if name == "b1":
        return bounds.bound_b1(alpha, c).value, ""
    if name == "b2":
        if delta is None:
            return bounds.bound_b2_opt(alpha, c).value, ""
        return bounds.bound_b2(alpha, c, delta).value, ""
    if name == "b4":
        rep = bounds.bound_b4(alpha, c)
        return rep.value, rep.terms["branch"]
    if name == "b5":
        return bounds.bound_b5(alpha, c, n_env).value, ""
    return bounds.bound_b6(alpha, c).value, ""


def cmd_bound(args) -> None:
    c_grid = parse_grid(args.c_grid, args.log)
    rows = _ordered_map(
        lambda c: _bound_row(args.name, args.alpha, float(c), args.delta, args.n_envelope), list(c_grid)
    )
    _write_csv(args.out, ["c", "alpha", "bound", "branch"], ([c, args.alpha, v, b] for c, (v, b) in zip(c_grid, rows)))


def cmd_choose_c(args) -> None:
    name = args.bound.upper()
    c = bounds.choose_c(args.alpha, args.epsilon, name, args.n_envelope)
    value = bounds.bound_value(name, args.alpha, c, args.n_envelope)
    _write_json(args.out, {"alpha": args.alpha, "epsilon": args.epsilon, "bound": name, "c": c, "bound_value": value})


def _pair(text: str) -> tuple[str, str]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise UsageError("--pair takes two comma-separated CF names, e.g. X,X_hat")
    return parts[0], parts[1]


def cmd_distance(args) -> None:
    pair = _pair(args.pair)
    c_grid = parse_grid(args.c_grid, args.log)
    est = _ordered_map(lambda c: distance.esseen_bound(pair, args.alpha, float(c), theta=args.theta), list(c_grid))
    _write_csv(args.out, ["c", "alpha", "qbar", "abs_err"], ([c, args.alpha, e.value, e.abs_err] for c, e in zip(c_grid, est)))


def _read_problem_csv(path: str) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "x" or len(header) < 2:
            raise DomainError("problem CSV needs a header 'x,g_1,...,g_P'")
        try:
            data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
        except ValueError as exc:
            raise DomainError(f"non-numeric entry in {path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header) or data.shape[0] == 0:
        raise DomainError("problem CSV rows must match the header width")
    return data[:, 0], data[:, 1:]


def cmd_infer(args) -> None:
    x, g = _read_problem_csv(args.data)
    c = args.c if args.c is not None else bounds.choose_c(args.alpha, args.epsilon, "B5")
    prior_mean = prior_cov = None
    if args.prior_scale is not None:
        prior_mean = np.zeros(g.shape[1])
        prior_cov = args.prior_scale ** 2 * np.eye(g.shape[1])
    problem = inference.RegressionProblem(
        x=x, g_matrix=g, alpha=args.alpha, sigma_w=args.sigma_w, c=c,
        prior_mean=prior_mean, prior_cov=prior_cov, epsilon=args.epsilon,
    )
    burn_in = args.burn_in if args.burn_in is not None else args.iters // 10
    chains = inference.run_chains(problem, args.iters, burn_in, args.seed, args.chains)
    traces = [ch.trace for ch in chains]
    pooled = np.concatenate(traces)
    summary = {
        "c": c,
        "chains": args.chains,
        "iterations": args.iters,
        "burn_in": burn_in,
        "mean": pooled.mean(axis=0).tolist(),
        "std": pooled.std(axis=0, ddof=1).tolist(),
        "acceptance_rate": float(np.mean([ch.acceptance_rate for ch in chains])),
    }
    if args.chains >= 2:
        summary["gelman_rubin"] = inference.gelman_rubin(traces).tolist()
    _write_json(args.out, summary)
    if args.trace:
        header = ["chain", "iteration"] + [f"lambda_{k + 1}" for k in range(problem.n_coef)]
        rows = (
            [ci, burn_in + i] + list(row)
            for ci, tr in enumerate(traces)
            for i, row in enumerate(tr)
        )
        _write_csv(args.trace, header, rows)


_FIG_ALPHAS = (0.2, 0.5, 0.8, 1.2, 1.5, 1.9)


def cmd_figures(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    quick = args.quick
    c_curve = np.geomspace(2.0, 1e4, 12 if quick else 60)
    grid_alphas = [0.5, 1.5] if quick else [round(0.1 * i, 1) for i in range(1, 20) if i != 10]
    grid_cs = [3.0, 30.0] if quick else [3.0, 10.0, 30.0, 100.0, 300.0]
    grid = [(a, c) for a in grid_alphas for c in grid_cs]

    def curve_row(ac):
        a, c = ac
        b4 = bounds.bound_b4(a, c)
        return [a, c, b4.terms["B1"], b4.terms["B2_opt"], b4.value, b4.terms["branch"],
                bounds.bound_b5(a, c, 1).value, bounds.bound_b5(a, c, 10).value, bounds.bound_b6(a, c).value]

    rows = _ordered_map(curve_row, [(a, c) for a in _FIG_ALPHAS for c in c_curve])
    _write_csv(str(out / "bound_curves.csv"),
               ["alpha", "c", "b1", "b2_opt", "b4", "b4_branch", "b5_n1", "b5_n10", "b6"], rows)

    def qbar_row(ac):
        a, c = ac
        z = distance.esseen_bound(("Z_c", "Z"), a, c)
        xh = distance.esseen_bound(("X", "X_hat"), a, c)
        x0 = distance.esseen_bound(("X", "X_0c"), a, c)
        return [a, c, z.value, z.abs_err, bounds.bound_b4(a, c).value,
                xh.value, xh.abs_err, bounds.bound_b5(a, c, 10).value,
                x0.value, x0.abs_err, bounds.bound_b6(a, c).value]

    rows = _ordered_map(qbar_row, grid)
    _write_csv(str(out / "qbar_vs_bounds.csv"),
               ["alpha", "c", "qbar_z", "abs_err_z", "b4", "qbar_xhat", "abs_err_xhat", "b5",
                "qbar_x0c", "abs_err_x0c", "b6"], rows)

    alphas = np.linspace(0.05, 1.95, 20 if quick else 96)
    alphas = alphas[np.abs(alphas - 1.0) > 1e-3]
    _write_csv(str(out / "c_of_alpha.csv"), ["alpha", "c_of_alpha"], ([a, bounds.c_of_alpha(a)] for a in alphas))

    n = 2000 if quick else 20000
    c_dens = 10.0
    w = GaussianWParams(0.0, 1.0)
    streams = np.random.SeedSequence(args.seed).spawn(len(_FIG_ALPHAS))
    rows = []
    for a, ss in zip(_FIG_ALPHAS, streams):
        rng = np.random.default_rng(ss)
        cfg = psr_engine.PsrConfig(a, w, c_dens)
        rows += [[a, "stable", v] for v in cms_sample(map_w_to_stable(a, w), n, rng)]
        rows += [[a, "xhat", v] for v in psr_engine.sample_x_hat_batch(cfg, n, rng)]
        rows += [[a, "truncated", v] for v in psr_engine.sample_truncated_batch(cfg, n, rng)]
    _write_csv(str(out / "density_samples.csv"), ["alpha", "method", "value"], rows)


# ---------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = _Parser(prog="stable-psr", description="Series representation tools for stable laws.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, need_c=True):
        p.add_argument("--alpha", type=float, required=True, help="stability index in (0, 2), not 1")
        if need_c:
            p.add_argument("--c", type=float, required=True, help="truncation level (expected number of series terms)")
        p.add_argument("--out", default=None, help="output file; stdout when omitted")

    def weights(p):
        p.add_argument("--mu-w", type=float, default=0.0, help="mean of the Gaussian jump weights")
        p.add_argument("--sigma-w", type=float, default=1.0, help="std-dev of the Gaussian jump weights")

    p = sub.add_parser("sample", help="draw variates as CSV", formatter_class=fmt)
    common(p)
    weights(p)
    p.add_argument("--method", choices=["xhat", "truncated", "residual", "stable"], default="xhat",
                   help="xhat: truncation plus Gaussian residual; truncated: head only; "
                        "residual: compound-Poisson tail over (c, d); stable: exact CMS draws")
    p.add_argument("--n", type=int, default=10000, help="number of draws")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--d", type=float, default=None, help="far truncation for --method residual; default max(1e6, 1e4 c)")
    p.add_argument("--exact", action="store_true", help="simulate every residual arrival (slow for large d)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("cf", help="log characteristic function on a frequency grid (CSV: s, re, im)", formatter_class=fmt)
    common(p)
    weights(p)
    p.add_argument("--name", choices=list(distance.CF_NAMES), required=True, help="which variable's CF")
    grid = p.add_mutually_exclusive_group(required=True)
    grid.add_argument("--s-grid", help="frequencies s as start:stop[:count]")
    grid.add_argument("--w-grid", help="scaled frequencies w = eta s^2 / (2c) as start:stop[:count]")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.set_defaults(func=cmd_cf)

    p = sub.add_parser("bound", help="a Kolmogorov-distance bound over a c-grid (CSV: c, alpha, bound, branch)",
                       formatter_class=fmt)
    common(p, need_c=False)
    p.add_argument("--name", choices=["b1", "b2", "b4", "b5", "b6"], required=True, help="bound to evaluate")
    p.add_argument("--c-grid", required=True, help="truncation levels as start:stop[:count]")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--delta", type=float, default=None, help="fixed delta in (0, 2) for b2; optimised when omitted")
    p.add_argument("--n-envelope", type=int, default=10, help="envelope segments for b5")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("choose-c", help="smallest c meeting a distance tolerance (JSON)", formatter_class=fmt)
    common(p, need_c=False)
    p.add_argument("--epsilon", type=float, required=True, help="target Kolmogorov distance in (0, 1)")
    p.add_argument("--bound", choices=["b4", "b5", "b6"], default="b5", help="bound to invert")
    p.add_argument("--n-envelope", type=int, default=10, help="envelope segments for b5")
    p.set_defaults(func=cmd_choose_c)

    p = sub.add_parser("distance", help="smoothing-integral estimate over a c-grid (CSV: c, alpha, qbar, abs_err)",
                       formatter_class=fmt)
    common(p, need_c=False)
    p.add_argument("--pair", required=True, help="two CF names, e.g. X,X_hat or Z_c,Z")
    p.add_argument("--c-grid", required=True, help="truncation levels as start:stop[:count]")
    p.add_argument("--log", action="store_true", help="log-spaced grid")
    p.add_argument("--theta", type=float, default=math.inf,
                   help="smoothing frequency; finite values only for Z_c,Z and add 24m/(pi theta)")
    p.set_defaults(func=cmd_distance)

    p = sub.add_parser("infer", help="posterior summary for stable-noise regression (JSON)", formatter_class=fmt)
    common(p, need_c=False)
    p.add_argument("--data", required=True, help="CSV with header x,g_1,...,g_P")
    p.add_argument("--sigma-w", type=float, default=1.0, help="std-dev of the noise jump weights")
    cgrp = p.add_mutually_exclusive_group(required=True)
    cgrp.add_argument("--c", type=float, help="truncation level")
    cgrp.add_argument("--epsilon", type=float, help="choose c so that B5 <= epsilon")
    p.add_argument("--iters", type=int, default=20000, help="iterations per chain")
    p.add_argument("--burn-in", type=int, default=None, help="discarded iterations; default iters/10")
    p.add_argument("--chains", type=int, default=1, help="independent chains")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--prior-scale", type=float, default=None, help="N(0, scale^2 I) prior; flat when omitted")
    p.add_argument("--trace", default=None, help="optional trace CSV path")
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("figures", help="write the data behind the bound, distance and density plots", formatter_class=fmt)
    p.add_argument("--out-dir", required=True, help="directory for the CSV files")
    p.add_argument("--seed", type=int, default=0, help="random seed for density samples")
    p.add_argument("--quick", action="store_true", help="small grids and samples")
    p.set_defaults(func=cmd_figures)
    return parser


def _validate(args) -> None:
    for name in ("n", "iters", "chains", "n_envelope"):
        val = getattr(args, name, None)
        if val is not None and val < 1:
            raise UsageError(f"--{name.replace('_', '-')} must be at least 1")
    if getattr(args, "burn_in", None) is not None and args.burn_in < 0:
        raise UsageError("--burn-in must be non-negative")


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": str(message)}) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the CLI and return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _validate(args)
        _worker_count()
        args.func(args)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    except DomainError as exc:
        return _fail("domain", exc, EXIT_DOMAIN)
    except (ConvergenceError, OverflowError, FloatingPointError) as exc:
        return _fail("convergence", exc, EXIT_CONVERGENCE)
    except OSError as exc:
        return _fail("io", exc, EXIT_DOMAIN)
    return 0


run = main
