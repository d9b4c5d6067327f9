"""Command-line entry point.

Commands:
    scenario NAME       run a registered scenario and write ``report.json``
    solve MU NU         solve the transport problem between two measure files
    evolve FIELD        apply a Lax-Oleinik evolution to a potential field

Exit codes: 0 success (an infeasible transport problem is a valid answer),
1 a scenario assertion failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .geometry import CostParams
from .grid import UniformGrid
from .measures import DiscreteMeasure, MeasureError
from .potentials import PotentialField
from .scenarios import SCENARIOS, UnknownScenarioError
from .scenarios import run as run_scenario
from .svg import coupling_figure, grid_heatmap
from .transport import GAP_TOL, TransportError, build_cost_matrix, certify, solve_primal, support_pairs
from .weakkam import lax_forward, regularized_field

log = logging.getLogger("lorentzot")

EXIT_OK = 0
EXIT_ASSERTION = 1
EXIT_USAGE = 2


class ConfigError(ValueError):
    """Invalid configuration file or flag combination."""


def _unit_interval(text) -> float:
    try:
        p = float(text)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"p must be a number, got {text!r}") from None
    if not 0.0 < p < 1.0:
        raise argparse.ArgumentTypeError(f"p must lie in (0, 1), got {p}")
    return p


@dataclass
class RunConfig:
    """Settings shared by all commands; file values are overridden by flags."""

    p: float = 0.5
    seed: int | None = None
    n: int | None = None
    trials: int | None = None
    tol_gap: float = GAP_TOL
    out: str = "out"
    plots: bool = False
    t: float | None = None
    s: float | None = None
    tau: float | None = None
    grid: dict | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        data = _read_json(path)
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls(**data)
        try:
            cfg.validate()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad configuration value: {exc}") from None
        return cfg

    def validate(self) -> None:
        try:
            _unit_interval(self.p)
        except argparse.ArgumentTypeError as exc:
            raise ConfigError(str(exc)) from None
        if self.tol_gap <= 0:
            raise ConfigError("tol_gap must be positive")
        for name in ("n", "trials"):
            v = getattr(self, name)
            if v is not None and int(v) < 1:
                raise ConfigError(f"{name} must be positive")

    def grid_spec(self) -> UniformGrid | None:
        """Grid from ``{"bounds": [lower, upper], "step": h}``."""
        if self.grid is None:
            return None
        unknown = set(self.grid) - {"bounds", "step"}
        if unknown or "bounds" not in self.grid or "step" not in self.grid:
            raise ConfigError("grid needs exactly the keys 'bounds' and 'step'")
        lower, upper = self.grid["bounds"]
        try:
            return UniformGrid.from_bounds(lower, upper, float(self.grid["step"]))
        except ValueError as exc:
            raise ConfigError(f"bad grid: {exc}") from None


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc.msg}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig keys")
    common.add_argument("--p", type=_unit_interval, help="cost exponent in (0, 1)")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output directory")
    common.add_argument("--plots", action="store_true", default=None, help="also write SVG figures")
    common.add_argument("--tol-gap", dest="tol_gap", type=float, help="duality gap tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lorentzot", description="Lorentzian optimal transport toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    sc = sub.add_parser("scenario", parents=[common], help="run a reproduction scenario")
    sc.add_argument("name", help="one of: " + ", ".join(SCENARIOS))
    sc.add_argument("--n", type=int, help="sample size")
    sc.add_argument("--trials", type=int, help="number of random trials")

    so = sub.add_parser("solve", parents=[common], help="solve a transport problem")
    so.add_argument("mu", help="source measure JSON")
    so.add_argument("nu", help="target measure JSON")

    ev = sub.add_parser("evolve", parents=[common], help="evolve a potential field")
    ev.add_argument("field", help="potential field JSON")
    ev.add_argument("--t", type=float, help="forward time")
    ev.add_argument("--s", type=float, help="regularization base time")
    ev.add_argument("--tau", type=float, help="regularization step")
    return parser


def _merge(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    cfg.validate()
    return cfg


def cmd_scenario(name: str, cfg: RunConfig) -> int:
    if name not in SCENARIOS:
        raise UnknownScenarioError(name)
    log.info("running scenario %s", name)
    report = run_scenario(name, p=cfg.p, seed=cfg.seed, n=cfg.n, trials=cfg.trials,
                          tol_gap=cfg.tol_gap, plots=cfg.plots)
    report.write(cfg.out, plots=cfg.plots)
    for line in report.summary_lines():
        print(line)
    print(f"{'PASS' if report.passed else 'FAIL'} {name}")
    return EXIT_OK if report.passed else EXIT_ASSERTION


def _load_measure(path) -> DiscreteMeasure:
    data = _read_json(path)
    try:
        return DiscreteMeasure.from_json(data)
    except (MeasureError, KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None


def cmd_solve(mu_path, nu_path, cfg: RunConfig) -> int:
    mu, nu = _load_measure(mu_path), _load_measure(nu_path)
    log.info("solving %d x %d problem", len(mu), len(nu))
    params = CostParams(p=cfg.p)
    try:
        matrix = build_cost_matrix(mu, nu, params)
    except TransportError as exc:
        raise ConfigError(str(exc)) from None
    result = certify(solve_primal(matrix, mu, nu), matrix, cfg.tol_gap)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "result.json").write_text(json.dumps(result.to_json(), sort_keys=True, indent=2) + "\n")
    if cfg.plots and result.optimal and mu.dim == 1:
        xs, ys = support_pairs(result)
        (out / "coupling.svg").write_text(coupling_figure(xs, ys, "optimal coupling"))
    print(f"{result.status.value} value={result.primal_value!r}")
    return EXIT_OK


def cmd_evolve(field_path, cfg: RunConfig) -> int:
    try:
        field = PotentialField.from_json(_read_json(field_path))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"{field_path}: {exc}") from None
    grid = cfg.grid_spec()
    log.info("evolving %d values", len(field))
    carrier = grid.points() if grid is not None else field.points
    params = CostParams(p=cfg.p)
    if cfg.t is not None and (cfg.s is not None or cfg.tau is not None):
        raise ConfigError("give either --t or --s with --tau, not both")
    if cfg.t is not None:
        if cfg.t < 0:
            raise ConfigError("--t must be non-negative")
        evolved = lax_forward(field, cfg.t, carrier, params)
    elif cfg.s is not None and cfg.tau is not None:
        if cfg.s <= 0 or cfg.tau <= 0:
            raise ConfigError("--s and --tau must be positive")
        evolved = regularized_field(field, cfg.s, cfg.tau, carrier, params).field
    else:
        raise ConfigError("evolve needs --t, or --s together with --tau")
    evolved = PotentialField(evolved.points, evolved.values, evolved.provenance, grid, evolved.time)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "field.json").write_text(json.dumps(evolved.to_json(), sort_keys=True, indent=2) + "\n")
    (out / "field.csv").write_text(evolved.to_csv())
    if cfg.plots and grid is not None and len(grid.shape) == 2:
        (out / "field.svg").write_text(grid_heatmap(evolved.values, grid, "evolved field"))
    print(f"wrote {len(evolved)} values to {out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _merge(args)
        if args.command == "scenario":
            return cmd_scenario(args.name, cfg)
        if args.command == "solve":
            return cmd_solve(args.mu, args.nu, cfg)
        return cmd_evolve(args.field, cfg)
    except UnknownScenarioError as exc:
        print(f"error: unknown scenario {exc.args[0]!r}; choose from {', '.join(SCENARIOS)}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
