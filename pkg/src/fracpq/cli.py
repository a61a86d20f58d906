"""Command-line layer: INI config, dispatch, persistence, static plots.

Commands: ``eig``, ``solve``, ``sweep``, ``rn``, ``verify``.  Every command
reads one INI config (all keys optional), applies ``--section.key=value``
overrides, owns its output directory through a lock file, and writes
schema-stable JSON/CSV plus self-contained SVG plots.  Exit codes: 0 on
success, 1 on configuration or validation errors, 2 on numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .domain import BOUNDED_DOMAIN, WHOLE_SPACE, FracParams, build_grid
from .eigensolver import (
    SolverOptions,
    check_min_formula,
    rn_principal,
)
from .errors import (
    ConfigError,
    InfeasibleWeightError,
    MinFormulaError,
    MonotonicityError,
    NoDescentDirectionError,
    ParameterError,
)
from .mountainpass import (
    KIND_MINIMIZER,
    KIND_MOUNTAIN_PASS,
    find_descent_endpoint,
    minimize_J,
    mountain_pass,
    sweep_lambda,
)
from .oracle import SUITE_NAMES, inequality_suite
from .problem import build_problem, decay_weight, weight_generator, weight_profile

log = logging.getLogger("fracpq")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    """Flat run configuration; sections mirror the INI file layout."""

    lo: float = 0.0
    hi: float = 1.0
    n: int = 64
    alpha: float = 0.3
    beta: float = 0.4
    p: float = 3.0
    q: float = 2.0
    regime: str = BOUNDED_DOMAIN
    a_spec: str = "one"
    b_spec: str = "indefinite"
    tol_quotient: float = 1e-10
    tol_residual: float = 1e-6
    max_iter: int = 50_000
    seed: int = 0
    n_starts: int = 8
    lambda_rel: float = 1.1
    lambda_abs: float = math.nan
    sweep_lambda_min: float = 0.8
    sweep_lambda_max: float = 1.2
    sweep_steps: int = 9
    sweep_relative: bool = True
    rn_radii: tuple = (1.0, 2.0, 4.0, 8.0)
    rn_n_per_unit: int = 12
    rn_family_factors: tuple = (1.1, 1.3, 1.6, 2.0, 3.0)
    verify_samples: int = 100_000
    out_dir: str = "out"
    formats: tuple = ("json", "csv", "svg")
    deterministic: bool = True


_SECTION_KEYS = {
    ("domain", "lo"): ("lo", float),
    ("domain", "hi"): ("hi", float),
    ("domain", "n"): ("n", int),
    ("params", "alpha"): ("alpha", float),
    ("params", "beta"): ("beta", float),
    ("params", "p"): ("p", float),
    ("params", "q"): ("q", float),
    ("params", "regime"): ("regime", str),
    ("weights", "a_spec"): ("a_spec", str),
    ("weights", "b_spec"): ("b_spec", str),
    ("solver", "tol_quotient"): ("tol_quotient", float),
    ("solver", "tol_residual"): ("tol_residual", float),
    ("solver", "max_iter"): ("max_iter", int),
    ("solver", "seed"): ("seed", int),
    ("solver", "n_starts"): ("n_starts", int),
    ("solve", "lambda_rel"): ("lambda_rel", float),
    ("solve", "lambda_abs"): ("lambda_abs", float),
    ("sweep", "lambda_min"): ("sweep_lambda_min", float),
    ("sweep", "lambda_max"): ("sweep_lambda_max", float),
    ("sweep", "steps"): ("sweep_steps", int),
    ("sweep", "relative"): ("sweep_relative", bool),
    ("rn", "radii"): ("rn_radii", "float_list"),
    ("rn", "n_per_unit"): ("rn_n_per_unit", int),
    ("rn", "family_factors"): ("rn_family_factors", "float_list"),
    ("verify", "samples"): ("verify_samples", int),
    ("output", "dir"): ("out_dir", str),
    ("output", "formats"): ("formats", "str_list"),
    ("run", "deterministic"): ("deterministic", bool),
}


def _coerce(raw: str, kind) -> object:
    if kind is float:
        return float(raw)
    if kind is int:
        return int(raw)
    if kind is bool:
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "float_list":
        return tuple(float(tok) for tok in raw.replace(",", " ").split())
    if kind == "str_list":
        return tuple(tok.strip() for tok in raw.replace(",", " ").split())
    return raw.strip()


def load_config(path: str | None, overrides: list[str] | None = None) -> RunConfig:
    """Read the INI file (optional) and apply --section.key=value overrides."""
    config = RunConfig()
    items: list[tuple[str, str, str]] = []
    if path is not None:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
        for section in parser.sections():
            for key, raw in parser.items(section):
                items.append((section, key, raw))
    for token in overrides or []:
        if not token.startswith("--") or "=" not in token or "." not in token:
            raise ConfigError(f"override must look like --section.key=value, got {token!r}")
        target, raw = token[2:].split("=", 1)
        section, key = target.split(".", 1)
        items.append((section, key, raw))
    for section, key, raw in items:
        spec = _SECTION_KEYS.get((section, key))
        if spec is None:
            raise ConfigError(f"unknown config key [{section}] {key}")
        name, kind = spec
        try:
            value = _coerce(raw, kind)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {exc}") from exc
        setattr(config, name, value)
    return config


def _build(config: RunConfig):
    """Validate the config and assemble the problem it describes."""
    params = FracParams(
        alpha=config.alpha, beta=config.beta, p=config.p, q=config.q, regime=config.regime
    )
    grid = build_grid(config.lo, config.hi, config.n)
    a_values = weight_profile(config.a_spec, grid)
    if config.regime == WHOLE_SPACE:
        problem = build_problem(grid, params, a_values)
    else:
        b_values = weight_profile(config.b_spec, grid)
        problem = build_problem(grid, params, b_values=b_values, a_values=a_values)
    for name, w in (("a", problem.a), ("b", problem.b)):
        if config.regime == WHOLE_SPACE and name == "b":
            continue
        if not w.has_positive_part:
            raise ConfigError(
                f"weight '{name}' must be positive on a set of positive measure; "
                f"profile {getattr(config, name + '_spec')!r} has no positive values"
            )
    if config.regime == WHOLE_SPACE and np.any(problem.a.values < 0.0):
        raise ConfigError("the whole-space weight 'a' must be nonnegative everywhere")
    opts = SolverOptions(
        tol_quotient=config.tol_quotient,
        tol_residual=config.tol_residual,
        max_iter=config.max_iter,
        seed=config.seed,
        n_starts=config.n_starts,
    )
    return problem, opts


# ---------------------------------------------------------------------------
# output helpers


class _RunDirectory:
    """Exclusive ownership of the output directory via a lock file."""

    def __init__(self, out_dir: str):
        self.path = Path(out_dir)
        self.lock = self.path / ".lock"

    def __enter__(self) -> Path:
        self.path.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise ConfigError(f"output directory {self.path} is locked by another run") from None
        os.close(fd)
        return self.path

    def __exit__(self, *exc) -> None:
        try:
            os.unlink(self.lock)
        except FileNotFoundError:
            pass


def _setup_log(out: Path, deterministic: bool) -> logging.Handler:
    fmt = "%(levelname)s %(name)s: %(message)s" if deterministic else "%(asctime)s %(levelname)s %(name)s: %(message)s"
    handler = logging.FileHandler(out / "run.log", mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter(fmt))
    log.setLevel(logging.INFO)
    log.addHandler(handler)
    return handler


def write_json(path: Path, payload: dict) -> None:
    text = json.dumps(payload, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")


def _fmt_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt_cell(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def svg_plot(
    path: Path,
    series: list[tuple[np.ndarray, np.ndarray, str]],
    title: str,
    xlabel: str,
    ylabel: str,
    markers: bool = False,
) -> None:
    """Minimal self-contained SVG line/marker plot, fully deterministic."""
    width, height, pad = 640, 420, 56
    xs_all = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    x0, x1 = float(np.min(xs_all)), float(np.max(xs_all))
    y0, y1 = float(np.min(ys_all)), float(np.max(ys_all))
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0

    def sx(x: float) -> float:
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y: float) -> float:
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    colors = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b")
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.6g}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>',
        f'<text x="{width / 2:.6g}" y="{height - 12}" text-anchor="middle" font-size="12">{xlabel}</text>',
        f'<text x="16" y="{height / 2:.6g}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {height / 2:.6g})">{ylabel}</text>',
    ]
    for tick in np.linspace(x0, x1, 5):
        parts.append(
            f'<text x="{sx(tick):.6g}" y="{height - pad + 18}" text-anchor="middle" '
            f'font-size="10">{tick:.5g}</text>'
        )
    for tick in np.linspace(y0, y1, 5):
        parts.append(
            f'<text x="{pad - 6}" y="{sy(tick) + 4:.6g}" text-anchor="end" '
            f'font-size="10">{tick:.5g}</text>'
        )
    for idx, (xs, ys, label) in enumerate(series):
        color = colors[idx % len(colors)]
        pts = " ".join(f"{sx(float(x)):.6g},{sy(float(y)):.6g}" for x, y in zip(xs, ys))
        if markers:
            for x, y in zip(xs, ys):
                parts.append(
                    f'<circle cx="{sx(float(x)):.6g}" cy="{sy(float(y)):.6g}" r="4" fill="{color}"/>'
                )
        else:
            parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(
            f'<text x="{width - pad}" y="{pad + 14 * idx + 4}" text-anchor="end" '
            f'font-size="11" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_eig(config: RunConfig) -> int:
    problem, opts = _build(config)
    with _RunDirectory(config.out_dir) as out:
        handler = _setup_log(out, config.deterministic)
        try:
            try:
                report = check_min_formula(problem, opts)
            except MinFormulaError as exc:
                log.error("min formula check failed: %s", exc)
                print(f"error: {exc}", file=sys.stderr)
                return 2
            converged = all(
                r.converged for r in (report.result_p, report.result_q, report.result_star)
            )
            payload = {
                "lambda_star": report.lambda_star,
                "lambda_1p": report.lambda_1p,
                "lambda_1q": report.lambda_1q,
                "min_gap": report.min_gap,
                "argmin_side": report.argmin_side,
                "converged": converged,
                "seed": config.seed,
            }
            if "json" in config.formats:
                write_json(out / "threshold.json", payload)
            if "csv" in config.formats:
                rows = [
                    [x, up, uq, us]
                    for x, up, uq, us in zip(
                        problem.grid.nodes,
                        report.result_p.direction,
                        report.result_q.direction,
                        report.result_star.direction,
                    )
                ]
                write_csv(out / "eigenfunctions.csv", ["x", "phi_p", "phi_q", "u_star"], rows)
            if "svg" in config.formats:
                svg_plot(
                    out / "eigenfunctions.svg",
                    [
                        (problem.grid.nodes, report.result_p.direction, "phi_p"),
                        (problem.grid.nodes, report.result_q.direction, "phi_q"),
                    ],
                    "principal eigenfunction profiles",
                    "x",
                    "u",
                )
            log.info(
                "threshold %.12g from eigenvalues %.12g / %.12g (side %s)",
                report.lambda_star,
                report.lambda_1p,
                report.lambda_1q,
                report.argmin_side,
            )
            return 0 if converged else 2
        finally:
            log.removeHandler(handler)
            handler.close()


def _select_lambda(config: RunConfig, problem, opts) -> tuple[float, object]:
    report = check_min_formula(problem, opts)
    if not math.isnan(config.lambda_abs):
        return config.lambda_abs, report
    return config.lambda_rel * report.lambda_star, report


def cmd_solve(config: RunConfig) -> int:
    problem, opts = _build(config)
    with _RunDirectory(config.out_dir) as out:
        handler = _setup_log(out, config.deterministic)
        try:
            lam, report = _select_lambda(config, problem, opts)
            if report.lambda_1q <= report.lambda_1p:
                branch = KIND_MINIMIZER
                cp = minimize_J(problem, lam, starts=config.n_starts, opts=opts)
            else:
                branch = KIND_MOUNTAIN_PASS
                endpoint = find_descent_endpoint(problem, lam, report.result_p.direction)
                cp = mountain_pass(problem, lam, endpoint, opts=opts, tol_mp=1e-4)
            payload = {
                "lambda": lam,
                "level": cp.level,
                "residual": cp.residual,
                "kind": cp.kind,
                "branch": branch,
                "converged": cp.converged,
                "lambda_star": report.lambda_star,
            }
            if "json" in config.formats:
                write_json(out / "solution.json", payload)
            if "csv" in config.formats:
                rows = [[x, u] for x, u in zip(problem.grid.nodes, cp.u)]
                write_csv(out / "solution.csv", ["x", "u"], rows)
            if "svg" in config.formats:
                svg_plot(
                    out / "solution.svg",
                    [(problem.grid.nodes, cp.u, "u")],
                    f"solution profile at lambda={lam:.6g}",
                    "x",
                    "u",
                )
            log.info("solve at lambda=%.12g: kind=%s level=%.6g", lam, cp.kind, cp.level)
            return 0 if cp.converged else 2
        finally:
            log.removeHandler(handler)
            handler.close()


def cmd_sweep(config: RunConfig) -> int:
    problem, opts = _build(config)
    with _RunDirectory(config.out_dir) as out:
        handler = _setup_log(out, config.deterministic)
        try:
            lo, hi = config.sweep_lambda_min, config.sweep_lambda_max
            grid = np.linspace(lo, hi, config.sweep_steps)
            if config.sweep_relative:
                base = check_min_formula(problem, opts).lambda_star
                grid = grid * base
            table = sweep_lambda(problem, grid, opts=opts)
            lam_star = table.threshold.lambda_star if table.threshold else math.nan
            rows = [
                [
                    row.lam,
                    row.lam / lam_star,
                    row.classification,
                    row.branch or "",
                    row.level,
                    row.residual,
                    row.norm,
                    row.converged,
                ]
                for row in table.rows
            ]
            if "csv" in config.formats:
                write_csv(
                    out / "sweep.csv",
                    [
                        "lambda",
                        "lambda_over_threshold",
                        "classification",
                        "branch",
                        "level",
                        "residual",
                        "norm",
                        "converged",
                    ],
                    rows,
                )
            if "json" in config.formats:
                write_json(
                    out / "sweep.json",
                    {
                        "lambda_star": table.threshold.lambda_star if table.threshold else None,
                        "rows": [
                            {
                                "lambda": row.lam,
                                "classification": row.classification,
                                "level": row.level,
                                "residual": row.residual,
                            }
                            for row in table.rows
                        ],
                    },
                )
            if "svg" in config.formats and table.rows:
                class_index = {"no_nontrivial": 0, "threshold_degenerate": 1, "exists_positive": 2}
                xs = np.array([row.lam for row in table.rows])
                ys = np.array([class_index[row.classification] for row in table.rows], dtype=float)
                svg_plot(
                    out / "sweep.svg",
                    [(xs, ys, "class (0 none, 1 threshold, 2 exists)")],
                    "existence classification across lambda",
                    "lambda",
                    "classification",
                    markers=True,
                )
            # Degenerate rows sit exactly at the threshold, where descent
            # has no nontrivial target and sublinear contraction; their
            # converged flag is diagnostic, not a failure.
            ok = all(
                row.converged for row in table.rows if row.classification != "threshold_degenerate"
            ) and not any(row.anomaly for row in table.rows)
            log.info("sweep of %d lambdas done", len(table.rows))
            return 0 if ok else 2
        finally:
            log.removeHandler(handler)
            handler.close()


def cmd_rn(config: RunConfig) -> int:
    if config.regime != WHOLE_SPACE:
        print("error: rn requires params.regime = whole_space", file=sys.stderr)
        return 1
    problem, opts = _build(config)  # validates weights on the base grid
    params = problem.params
    with _RunDirectory(config.out_dir) as out:
        handler = _setup_log(out, config.deterministic)
        try:
            try:
                generator = weight_generator(config.a_spec)
            except ConfigError:
                generator = decay_weight(params)
            results = rn_principal(
                params,
                list(config.rn_radii),
                a_generator=generator,
                n_per_unit=config.rn_n_per_unit,
                opts=opts,
            )
            rows = [
                [radius, int(round(config.rn_n_per_unit * 2 * radius)), res.lam, res.residual, res.converged, res.ray_escape]
                for radius, res in zip(config.rn_radii, results)
            ]
            if "csv" in config.formats:
                write_csv(
                    out / "rn.csv",
                    ["radius", "n", "lambda", "residual", "converged", "ray_escape"],
                    rows,
                )
            lam_inf = results[-1].lam
            radius = config.rn_radii[-1]
            n = max(4, int(round(config.rn_n_per_unit * 2 * radius)))
            grid = build_grid(-radius, radius, n)
            family_problem = build_problem(grid, params, generator(grid.nodes))
            family_rows = []
            family_ok = True
            for factor in config.rn_family_factors:
                lam = factor * lam_inf
                endpoint = find_descent_endpoint(family_problem, lam, results[-1].direction)
                cp = mountain_pass(family_problem, lam, endpoint, opts=opts, tol_mp=1e-4)
                nontrivial = float(np.max(np.abs(cp.u))) > 1e-8
                family_ok = family_ok and cp.converged and nontrivial
                family_rows.append([lam, cp.level, cp.residual, cp.converged])
            if "csv" in config.formats:
                write_csv(
                    out / "rn_family.csv",
                    ["lambda", "level", "residual", "converged"],
                    family_rows,
                )
            if "json" in config.formats:
                write_json(
                    out / "rn.json",
                    {
                        "radii": list(config.rn_radii),
                        "lambdas": [res.lam for res in results],
                        "family": [
                            {"lambda": row[0], "level": row[1], "residual": row[2]}
                            for row in family_rows
                        ],
                    },
                )
            if "svg" in config.formats:
                svg_plot(
                    out / "rn.svg",
                    [(np.asarray(config.rn_radii), np.array([r.lam for r in results]), "lambda(R)")],
                    "truncated-domain eigenvalue vs radius",
                    "R",
                    "lambda",
                )
            ok = all(res.converged for res in results) and family_ok
            log.info("rn sweep radii=%s lambdas=%s", list(config.rn_radii), [r.lam for r in results])
            return 0 if ok else 2
        finally:
            log.removeHandler(handler)
            handler.close()


def cmd_verify(config: RunConfig) -> int:
    with _RunDirectory(config.out_dir) as out:
        handler = _setup_log(out, config.deterministic)
        try:
            suites = {}
            all_clean = True
            for name in SUITE_NAMES:
                report = inequality_suite(name, config.verify_samples, config.seed)
                suites[name] = {
                    "samples": report.samples,
                    "violations": report.violations,
                    "worst_slack": report.worst_slack,
                    "estimated_constant": report.estimated_constant,
                }
                all_clean = all_clean and report.violations == 0
                log.info(
                    "suite %s: %d samples, %d violations", name, report.samples, report.violations
                )
            if "json" in config.formats:
                write_json(out / "verify.json", {"suites": suites, "pass": all_clean})
            return 0 if all_clean else 2
        finally:
            log.removeHandler(handler)
            handler.close()


# ---------------------------------------------------------------------------
# entry point


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fracpq",
        description="Variational solver for the fractional (p,q)-Laplacian eigenvalue problem",
    )
    parser.add_argument("command", choices=["eig", "solve", "sweep", "rn", "verify"])
    parser.add_argument("config", nargs="?", default=None, help="INI config file (optional)")
    args, extra = parser.parse_known_args(argv)
    try:
        config = load_config(args.config, overrides=extra)
        handler = {
            "eig": cmd_eig,
            "solve": cmd_solve,
            "sweep": cmd_sweep,
            "rn": cmd_rn,
            "verify": cmd_verify,
        }[args.command]
        return handler(config)
    except (ConfigError, ParameterError, InfeasibleWeightError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (MinFormulaError, MonotonicityError, NoDescentDirectionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
