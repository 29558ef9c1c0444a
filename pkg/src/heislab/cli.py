"""Command-line entry point: ``heislab run|constants|solve|check-identities|list``."""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import barriers, hcalc
from .config import load_config, with_overrides
from .errors import ConfigError, HeislabError, InvalidScenario
from .runner import EXIT_ERROR, EXIT_INVALID, EXIT_OK, atomic_write, run_config
from .verify.registry import REGISTRY, default_config, parse_data, parse_source
from .verify.report import fmt


def _ladder(text: str):
    try:
        return tuple(int(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError("expected integers N (hx = 1/N), e.g. '16,32'") from None


def _run_one(cfg):
    """Worker body; returns plain data so it crosses process boundaries."""
    try:
        res = run_config(cfg)
    except InvalidScenario as exc:
        return cfg.name, "invalid-scenario", [f"{cfg.name}: invalid-scenario ({exc})"], [], EXIT_INVALID
    except HeislabError as exc:
        return cfg.name, "error", [f"{cfg.name}: error ({exc})"], [], EXIT_ERROR
    lines = [r.line() for r in res.reports]
    return cfg.name, res.status, lines, [str(p) for p in res.paths], res.code


def cmd_run(args) -> int:
    sources = list(args.configs) + list(args.config or [])
    configs = []
    try:
        for path in sources:
            configs.append(load_config(path))
        for name in args.experiment or []:
            if name not in REGISTRY:
                raise ConfigError(f"unknown experiment {name!r}; valid names: {', '.join(sorted(REGISTRY))}")
            configs.append(default_config(name))
        if not configs:
            raise ConfigError("nothing to run: pass a config path or --experiment NAME")
        configs = [with_overrides(c, seed=args.seed, resolutions=args.resolution_override, out_dir=args.out_dir)
                   for c in configs]
    except ConfigError as exc:
        print(f"heislab: config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    if args.workers > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, configs))
    else:
        results = [_run_one(c) for c in configs]
    codes = []
    for name, status, lines, paths, code in results:
        for line in lines:
            print(f"  {line}")
        for p in paths:
            print(f"  wrote {p}")
        print(f"{name}: {status}")
        codes.append(code)
    if any(status == "error" for _, status, *_ in results):
        return EXIT_ERROR
    if EXIT_INVALID in codes:
        return EXIT_INVALID
    return EXIT_ERROR if any(codes) else EXIT_OK


CONSTANT_COLUMNS = ("n", "ratio", "alpha_min", "alpha_max", "tau", "C1", "C2", "C3", "eta", "mu", "sigma",
                    "delta", "theta", "gamma", "beta_admissible")


def constants_rows(n: int, ratios, theta: float = 0.5):
    rows = []
    for ratio in ratios:
        lo, hi = barriers.alpha_range(n, ratio)
        c = barriers.lemma_constants(n, 1.0, ratio)
        gamma = barriers.gamma_exterior_ball(c.alpha, theta)
        rows.append({"n": n, "ratio": ratio, "alpha_min": lo, "alpha_max": hi, "tau": c.tau, "C1": c.C1,
                     "C2": c.C2, "C3": c.C3, "eta": c.eta, "mu": c.mu, "sigma": c.sigma,
                     "delta": barriers.rectangle_delta(n, 1.0, ratio), "theta": theta, "gamma": gamma,
                     "beta_admissible": barriers.admissible_beta(gamma, c.tau)})
    return rows


def constants_csv(n: int, ratios, theta: float = 0.5) -> str:
    lines = [",".join(CONSTANT_COLUMNS)]
    for row in constants_rows(n, ratios, theta):
        lines.append(",".join(fmt(row[c]) for c in CONSTANT_COLUMNS))
    return "\n".join(lines) + "\n"


def _emit(text: str, out):
    if out:
        atomic_write(Path(out), text)
    else:
        sys.stdout.write(text)


def cmd_constants(args) -> int:
    try:
        text = constants_csv(args.n, args.ratio, args.theta)
    except HeislabError as exc:
        print(f"heislab: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit(text, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    from .domains import parse_domain
    from .solver.grid import grid_for_domain
    from .solver.scheme import solution_csv, solve_dirichlet

    try:
        domain = parse_domain(args.domain)
        A = hcalc.coefficient_from_text(args.field, 1, args.seed)
        f = parse_source(args.source)
        g = parse_data(args.data)
        grid = grid_for_domain(domain, 1.0 / args.resolution, args.kappa)
        sol = solve_dirichlet(grid, domain, A, f, g, backend=args.backend)
    except HeislabError as exc:
        print(f"heislab: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _emit(solution_csv(sol), args.out)
    print(f"solved {grid.describe()} residual={sol.residual:.3g}", file=sys.stderr)
    return EXIT_OK


def cmd_check_identities(args) -> int:
    from .verify.closed_form import exp_calculus_identities, laplacian_of_fundamental_solution
    import numpy as np

    rep = exp_calculus_identities(count=args.count, seed=args.seed)
    print(rep.line())
    _, _, rel = laplacian_of_fundamental_solution(1, seed=args.seed)
    worst = float(np.max(np.abs(rel)))
    ok = worst < 1e-10
    print(f"fundamental_solution_closed_form: {'pass' if ok else 'fail'} max_rel={worst:.3g}")
    return EXIT_OK if rep.passed and ok else EXIT_ERROR


def cmd_list(args) -> int:
    for name in sorted(REGISTRY):
        s = REGISTRY[name]
        print(f"{name:24s} {s.anchor:32s} {s.summary}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="heislab", description="Numerical checks of a priori estimates on H^1.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run experiments from config files")
    r.add_argument("configs", nargs="*", help="config files")
    r.add_argument("--config", action="append", help="config file (repeatable)")
    r.add_argument("--experiment", action="append", help="run a registered experiment with default settings")
    r.add_argument("--out-dir", help="override the output directory")
    r.add_argument("--workers", type=int, default=1, help="experiments run concurrently")
    r.add_argument("--seed", type=int, help="override the seed")
    r.add_argument("--resolution-override", type=_ladder, help="replace the resolution ladder, e.g. '8,16'")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("constants", help="CSV table of structural constants")
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--ratio", type=float, action="extend", nargs="+", required=True, help="Lambda/lambda values")
    c.add_argument("--theta", type=float, default=0.5, help="exterior-ball ratio for gamma")
    c.add_argument("--out", help="write to this file instead of stdout")
    c.set_defaults(func=cmd_constants)

    s = sub.add_parser("solve", help="one Dirichlet solve written as CSV")
    s.add_argument("--domain", required=True, help="e.g. 'ball(center=0 0 0, radius=1)'")
    s.add_argument("--field", default="identity")
    s.add_argument("--source", default="zero")
    s.add_argument("--data", default="zero")
    s.add_argument("--resolution", type=int, default=8, help="hx = 1/N")
    s.add_argument("--kappa", type=float, default=2.0, help="t-step = kappa hx^2")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--backend", choices=("compiled", "python"))
    s.add_argument("--out", help="write to this file instead of stdout")
    s.set_defaults(func=cmd_solve)

    k = sub.add_parser("check-identities", help="closed-form calculus oracles")
    k.add_argument("--count", type=int, default=100)
    k.add_argument("--seed", type=int, default=0)
    k.set_defaults(func=cmd_check_identities)

    ls = sub.add_parser("list", help="registered experiments")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return EXIT_ERROR
    except Exception as exc:  # anything unexpected is an internal error
        print(f"heislab: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
