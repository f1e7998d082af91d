"""Command-line front end.

    gpcolloc solve --config F --grid N --out F
    gpcolloc likelihood --config F --ell-min A --ell-max B --steps K --out F
    gpcolloc convergence --config F --ni L1,L2,... --out F
    gpcolloc export-configs DIR

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 I/O error,
4 no reference solution available.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import casebook
from . import expr as ex
from .config import ConfigError, ProblemConfig, build_problem, load_config, resolve_problem
from .geometry import Domain, Interval
from .gp import (
    IllConditionedError,
    LengthscaleGrid,
    NegativeVarianceError,
    PosteriorField,
    condition,
    select_lengthscale,
)

log = logging.getLogger("gpcolloc")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO, EXIT_NO_ORACLE = 0, 1, 2, 3, 4


class NoOracleError(RuntimeError):
    pass


def fmt(v: float) -> str:
    return f"{v:.17g}"


def evaluation_grid(dom: Domain, n: int) -> np.ndarray:
    """Regular ``n``-per-axis grid over the bounding box, clipped to the closed domain."""
    if n < 2:
        raise ConfigError("grid resolution must be at least 2 per axis")
    lo, hi = dom.bounding_box()
    if isinstance(dom, Interval):
        return np.linspace(lo[0], hi[0], n).reshape(-1, 1)
    axes = [np.linspace(lo[r], hi[r], n) for r in range(dom.dim)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dom.dim)
    keep = [dom.contains(p) or dom.on_boundary(p) for p in pts]
    return pts[np.array(keep, dtype=bool)]


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def _residuals(field: PosteriorField) -> dict:
    spec = field.spec
    disc = spec.discretization
    y = field.system.y
    scale = float(np.max(np.abs(y))) if len(y) else 0.0
    interior = 0.0
    if disc.n_interior:
        interior = float(np.max(np.abs(field.apply(spec.interior_op, disc.interior) - y[: disc.n_interior])))
    boundary = 0.0
    for k, b in enumerate(disc.boundary):
        val = field.apply(b.operator, b.point)[0]
        boundary = max(boundary, abs(float(val) - b.value))
    return {"max_interior_residual": interior, "max_boundary_residual": boundary, "max_abs_data": scale}


def evaluate_field(field: PosteriorField, points: np.ndarray, oracle=None) -> dict:
    mean = field.mean(points)
    std = field.std(points)
    out = {"points": points, "mean": mean, "std": std}
    if oracle is not None:
        exact = oracle(points)
        out["exact"] = exact
        out["abs_err"] = np.abs(exact - mean)
    return out


def solve_config(cfg: ProblemConfig, grid: int, oracle=None) -> tuple[PosteriorField, dict, dict]:
    t0 = time.perf_counter()
    spec, profile = resolve_problem(cfg)
    t1 = time.perf_counter()
    field = condition(spec)
    t2 = time.perf_counter()
    pts = evaluation_grid(spec.domain, grid)
    ev = evaluate_field(field, pts, oracle)
    t3 = time.perf_counter()
    report = {
        "name": cfg.name,
        "ell": spec.kernel.lengthscales[0],
        "ell_source": "fixed" if profile is None else "likelihood",
        "s": spec.kernel.s,
        "n_i": spec.discretization.n_interior,
        "n_b": spec.discretization.n_boundary,
        "jitter_used": field.system.jitter_used,
        "residuals": _residuals(field),
        "timings": {"ell_search": t1 - t0, "condition": t2 - t1, "evaluate": t3 - t2},
        "n_grid_points": len(pts),
    }
    if profile is not None:
        report["likelihood_profile"] = [[e, v] for e, v in profile]
    if oracle is not None:
        err = ev["abs_err"]
        report["max_abs_err"] = float(err.max())
        report["mean_abs_err"] = float(err.mean())
        report["coverage95"] = float(np.mean(err <= 2 * ev["std"]))
    return field, ev, report


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    oracle = casebook.oracle_function(cfg)
    _, ev, report = solve_config(cfg, args.grid, oracle)
    pts = ev["points"]
    dim = pts.shape[1]
    header = [f"x{r + 1}" for r in range(dim)] + ["mean", "std", "lower95", "upper95"]
    if oracle is not None:
        header += ["exact", "abs_err"]
    rows = []
    for k in range(len(pts)):
        m, s = float(ev["mean"][k]), float(ev["std"][k])
        row = [float(v) for v in pts[k]] + [m, s, m - 2 * s, m + 2 * s]
        if oracle is not None:
            row += [float(ev["exact"][k]), float(ev["abs_err"][k])]
        rows.append(row)
    out = Path(args.out)
    _write_csv(out, header, rows)
    out.with_suffix(".json").write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    log.info("ell=%.4g jitter=%.3g -> %s", report["ell"], report["jitter_used"], out)
    return EXIT_OK


def cmd_likelihood(args) -> int:
    cfg = load_config(args.config)
    grid = LengthscaleGrid(args.ell_min, args.ell_max, args.steps, not args.linear)
    template = build_problem(cfg, ell=grid.ell_min)
    _, profile = select_lengthscale(template, grid)
    _write_csv(Path(args.out), ["ell", "normalized_likelihood"], sorted(profile))
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = load_config(args.config)
    oracle = casebook.oracle_function(cfg)
    if oracle is None:
        raise NoOracleError(f"config {cfg.name!r} has no reference solution")
    rows = []
    for n_i in args.ni:
        sub = cfg.with_updates(discretization={"n_i": n_i})
        _, _, rep = solve_config(sub, args.grid, oracle)
        rows.append([n_i, rep["ell"], rep["max_abs_err"], rep["mean_abs_err"], rep["coverage95"]])
    _write_csv(Path(args.out), ["n_i", "ell", "max_abs_err", "mean_abs_err", "coverage95"], rows)
    return EXIT_OK


def cmd_export(args) -> int:
    for p in casebook.export_configs(args.directory):
        print(p)
    return EXIT_OK


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("need at least one positive integer")
    return vals


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gpcolloc", description=__doc__.split("\n\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="posterior mean and error bars on a grid")
    s.add_argument("--config", required=True)
    s.add_argument("--grid", type=int, default=50, help="points per axis")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("likelihood", help="normalized likelihood profile over lengthscales")
    s.add_argument("--config", required=True)
    s.add_argument("--ell-min", type=float, required=True)
    s.add_argument("--ell-max", type=float, required=True)
    s.add_argument("--steps", type=int, required=True)
    s.add_argument("--linear", action="store_true", help="linear instead of log spacing")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_likelihood)

    s = sub.add_parser("convergence", help="error against the reference for several n_i")
    s.add_argument("--config", required=True)
    s.add_argument("--ni", type=_int_list, required=True)
    s.add_argument("--grid", type=int, default=101)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_convergence)

    s = sub.add_parser("export-configs", help="write the built-in case configs")
    s.add_argument("directory")
    s.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except NoOracleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ORACLE
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IllConditionedError, NegativeVarianceError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ex.ExpressionDomainError as exc:
        print(f"config error: expression undefined at a collocation point: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
