"""Scenario configuration, pipeline orchestration and CSV emission.

Subcommands: ``solve`` (curves and strategy for one scenario), ``compare``
(constraint cases plus ordering report), ``sweep`` (one ambiguity weight
over a value list plus monotonicity report), ``simulate`` (Monte Carlo
consistency report). Exit codes: 0 success, 2 configuration/validation
error, 3 failed ordering or monotonicity assertion, 4 failed Monte Carlo
consistency check.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import market, strategy
from .constraints import Box, ConsumptionBand, ExposureSet, FullSpace, NonnegativeOrthant
from .curves import PositivityLossError, TimeGrid, solve_curves
from .market import AmbiguityProfile, MarketModel, SingularCovarianceError, StepFunction
from .simulate import SimConfig, check_value_consistency
from .strategy import CaseSpec, ordering_checks, solve_case, sweep_checks, sweep_curves

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERTION = 3
EXIT_MC = 4


class ConfigError(ValueError):
    """The scenario file is missing, malformed or fails validation."""


@dataclass
class Scenario:
    """Fully parsed scenario: model, ambiguity, constraints, solver and MC settings."""

    model: MarketModel
    profile: AmbiguityProfile
    exposure: ExposureSet
    band: ConsumptionBand
    grid_steps: int
    mc_paths: int
    mc_seed: int
    mc_antithetic: bool
    cases: list[CaseSpec]
    case_profiles: dict[str, AmbiguityProfile]
    output_dir: str

    def grid(self) -> TimeGrid:
        return TimeGrid(self.model.horizon, self.grid_steps)

    def profile_for(self, name: str) -> AmbiguityProfile:
        return self.case_profiles.get(name, self.profile)


@dataclass
class RunReport:
    """Per-command manifest: written files, assertion outcomes, timings."""

    files: list[str] = field(default_factory=list)
    assertions: list[tuple[str, bool]] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        return all(ok for _, ok in self.assertions)


def _number(block: dict, key: str, where: str) -> float:
    if key not in block:
        raise ConfigError(f"missing '{key}' in {where} block")
    value = block[key]
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError as exc:
            raise ConfigError(f"'{key}' in {where} block is not numeric") from exc
    if not isinstance(value, (int, float)):
        raise ConfigError(f"'{key}' in {where} block is not numeric")
    return float(value)


def _rate_entry(block: dict, key: str, where: str):
    value = block.get(key)
    if isinstance(value, dict):
        if "breaks" not in value or "values" not in value:
            raise ConfigError(f"piecewise '{key}' needs 'breaks' and 'values' lists")
        return StepFunction(np.asarray(value["breaks"], float), np.asarray(value["values"], float))
    return _number(block, key, where)


def _exposure_from(block: dict, where: str) -> ExposureSet:
    tag = block.get("exposure", "full")
    if tag == "full":
        return FullSpace()
    if tag == "nonnegative":
        return NonnegativeOrthant()
    if tag == "box":
        if "lower" not in block or "upper" not in block:
            raise ConfigError(f"box exposure in {where} needs 'lower' and 'upper' lists")
        return Box(np.asarray(block["lower"], float), np.asarray(block["upper"], float))
    raise ConfigError(f"unknown exposure tag '{tag}' in {where} (full|nonnegative|box)")


def _band_from(block: dict, where: str) -> ConsumptionBand:
    floor = float(block.get("consumption_floor", 0.0))
    ceiling = block.get("consumption_ceiling", math.inf)
    ceiling = math.inf if ceiling is None else float(ceiling)
    try:
        return ConsumptionBand(floor, ceiling)
    except ValueError as exc:
        raise ConfigError(f"bad consumption band in {where}: {exc}") from exc


def load_config(path: str | Path) -> Scenario:
    """Parse and validate a scenario file (YAML with nested blocks)."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path} does not contain a mapping")

    mkt = raw.get("market")
    if not isinstance(mkt, dict):
        raise ConfigError("missing 'market' block")
    model = MarketModel(
        horizon=_number(mkt, "horizon", "market"),
        rate=_rate_entry(mkt, "rate", "market"),
        discount=_rate_entry(mkt, "discount", "market"),
        drift=np.asarray(mkt.get("drift", ()), float),
        volatility=np.asarray(mkt.get("volatility", ((),)), float),
        risk_aversion=_number(mkt, "risk_aversion", "market"),
        bequest_weight=_number(mkt, "bequest_weight", "market"),
        initial_wealth=float(mkt.get("initial_wealth", 1.0)),
    )

    amb = raw.get("ambiguity", {})
    profile = AmbiguityProfile(np.asarray(amb.get("eta", np.zeros(model.n_factors)), float))

    problems = market.validate(model, profile)
    if problems:
        raise ConfigError("invalid scenario: " + "; ".join(problems))

    cons = raw.get("constraints", {})
    exposure = _exposure_from(cons, "constraints")
    band = _band_from(cons, "constraints")

    solver = raw.get("solver", {})
    grid_steps = int(solver.get("grid_steps", 3000))

    sim = raw.get("simulate", {})
    mc_paths = int(sim.get("paths", 50000))
    mc_seed = int(sim.get("seed", 0))
    mc_antithetic = bool(sim.get("antithetic", False))

    cases: list[CaseSpec] = []
    case_profiles: dict[str, AmbiguityProfile] = {}
    for entry in raw.get("cases", []) or []:
        if "name" not in entry:
            raise ConfigError("every case needs a 'name'")
        name = str(entry["name"])
        cases.append(CaseSpec(name, _exposure_from(entry, name), _band_from(entry, name)))
        if "eta" in entry:
            case_profile = AmbiguityProfile(np.asarray(entry["eta"], float))
            if market.validate(model, case_profile):
                raise ConfigError(f"invalid eta override in case {name}")
            case_profiles[name] = case_profile

    return Scenario(
        model=model,
        profile=profile,
        exposure=exposure,
        band=band,
        grid_steps=grid_steps,
        mc_paths=mc_paths,
        mc_seed=mc_seed,
        mc_antithetic=mc_antithetic,
        cases=cases,
        case_profiles=case_profiles,
        output_dir=str(raw.get("output_dir", "results")),
    )


def _fmt(value: float) -> str:
    return format(float(value), ".10g")


def _write_csv(path: Path, header: list[str], rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _write_strategy_csv(path: Path, scenario: Scenario, profile, exposure, band) -> tuple[str, str]:
    """Solve one scenario and write the curve and exposure tables."""
    model = scenario.model
    g = model.risk_aversion
    curves = solve_curves(model, profile, exposure, band, scenario.grid())
    c_star = np.array([strategy.optimal_consumption(y, band) for y in curves.y])
    value = strategy.value_function(1.0, curves.y, g)
    loss = strategy.utility_loss(curves.y, curves.ytilde, g)
    rows = zip(curves.grid.nodes, curves.y, curves.y0, curves.ytilde, c_star, value, loss)
    curve_file = _write_csv(path, ["t", "Y", "Y0", "Ytilde", "c_star", "V_at_1", "L"], rows)

    snap = strategy.snapshot(model, profile, exposure, band, curves, node=0)
    exposure_rows = [(i + 1, snap.p_star[i], snap.phi_star[i]) for i in range(len(snap.p_star))]
    exposure_file = _write_csv(
        path.with_name(path.name.replace("strategy", "exposure")),
        ["i", "p_star_i", "phi_star_i"],
        exposure_rows,
    )
    return curve_file, exposure_file


def cmd_solve(scenario: Scenario, out_dir: Path) -> RunReport:
    """Solve the configured scenario and write strategy.csv / exposure.csv."""
    report = RunReport()
    start = time.perf_counter()
    out_dir.mkdir(parents=True, exist_ok=True)
    curve_file, exposure_file = _write_strategy_csv(
        out_dir / "strategy.csv", scenario, scenario.profile, scenario.exposure, scenario.band
    )
    report.files += [curve_file, exposure_file]
    report.timings["solve"] = time.perf_counter() - start
    return report


def cmd_compare(scenario: Scenario, out_dir: Path) -> RunReport:
    """Solve every configured case and write per-case tables plus orderings.txt."""
    report = RunReport()
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = scenario.cases or strategy.table_cases()
    model = scenario.model
    grid = scenario.grid()

    results = {}
    for spec in cases:
        start = time.perf_counter()
        result = solve_case(model, scenario.profile_for(spec.name), spec, grid)
        results[spec.name] = result
        rows = zip(
            grid.nodes, result.curves.y, result.curves.y0, result.curves.ytilde,
            result.c_star, result.value_at_1, result.loss,
        )
        report.files.append(
            _write_csv(out_dir / f"case_{spec.name}.csv",
                       ["t", "Y", "Y0", "Ytilde", "c_star", "V_at_1", "L"], rows)
        )
        report.timings[spec.name] = time.perf_counter() - start

    lines = []
    if {"C1", "C2", "C3", "C4", "C5", "NC"} <= results.keys():
        for check in ordering_checks(results, model.risk_aversion):
            report.assertions.append((check.name, check.passed))
            lines.append(f"{check.name}: {'PASS' if check.passed else 'FAIL'} "
                         f"(worst gap {_fmt(check.worst_gap)})")
    ordering_file = out_dir / "orderings.txt"
    ordering_file.write_text("\n".join(lines) + ("\n" if lines else ""))
    report.files.append(str(ordering_file))
    return report


def cmd_sweep(scenario: Scenario, index: int, values: list[float], out_dir: Path) -> RunReport:
    """Sweep one ambiguity weight and write per-value tables plus monotonicity.txt."""
    if not isinstance(scenario.exposure, NonnegativeOrthant):
        raise ConfigError("sweep requires the nonnegative (no-short-selling) exposure constraint")
    report = RunReport()
    out_dir.mkdir(parents=True, exist_ok=True)
    model = scenario.model
    start = time.perf_counter()
    result = sweep_curves(
        model, scenario.profile.eta, index - 1, values, scenario.band, scenario.grid()
    )
    report.timings["sweep"] = time.perf_counter() - start

    for row, value in enumerate(result.values):
        rows = zip(result.grid.nodes, result.c_star[row], result.value_at_1[row])
        report.files.append(
            _write_csv(out_dir / f"sweep_eta{index}_{_fmt(value)}.csv",
                       ["t", "c_star", "V_at_1"], rows)
        )

    lines = []
    for check in sweep_checks(result, model.risk_aversion):
        report.assertions.append((check.name, check.passed))
        lines.append(f"{check.name}: {'PASS' if check.passed else 'FAIL'} "
                     f"(worst gap {_fmt(check.worst_gap)})")
    mono_file = out_dir / "monotonicity.txt"
    mono_file.write_text("\n".join(lines) + "\n")
    report.files.append(str(mono_file))
    return report


def cmd_simulate(scenario: Scenario, out_dir: Path) -> RunReport:
    """Run the Monte Carlo consistency check per configured case and write mc_report.csv."""
    report = RunReport()
    out_dir.mkdir(parents=True, exist_ok=True)
    model = scenario.model
    sim = SimConfig(
        n_paths=scenario.mc_paths,
        grid=scenario.grid(),
        seed=scenario.mc_seed,
        antithetic=scenario.mc_antithetic,
    )

    targets = (
        [(spec.name, scenario.profile_for(spec.name), spec.exposure, spec.band) for spec in scenario.cases]
        if scenario.cases
        else [("base", scenario.profile, scenario.exposure, scenario.band)]
    )
    rows = []
    for name, profile, exposure, band in targets:
        start = time.perf_counter()
        outcome = check_value_consistency(model, profile, exposure, band, sim)
        report.timings[name] = time.perf_counter() - start
        report.assertions.append((f"mc consistency {name}", outcome.passed))
        rows.append((name, outcome.estimate, outcome.stderr, outcome.analytic, outcome.z_score))

    lines = ["case,estimate,stderr,analytic_v,z_score"]
    for name, est, err, ana, z in rows:
        lines.append(f"{name},{_fmt(est)},{_fmt(err)},{_fmt(ana)},{_fmt(z)}")
    mc_file = out_dir / "mc_report.csv"
    mc_file.write_text("\n".join(lines) + "\n")
    report.files.append(str(mc_file))
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustmerton",
        description="Robust investment-consumption curves, strategies and Monte Carlo checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in [
        ("solve", "solve the configured scenario and write strategy/exposure tables"),
        ("compare", "solve all configured constraint cases and check orderings"),
        ("sweep", "sweep one ambiguity weight and check monotonicity"),
        ("simulate", "Monte Carlo consistency check of the analytic value"),
    ]:
        cmd = sub.add_parser(name, help=helptext)
        cmd.add_argument("--config", required=True, help="scenario file (YAML)")
        cmd.add_argument("--out", default=None, help="output directory (default from config)")
        cmd.add_argument("--grid", type=int, default=None, help="override solver grid steps")
        cmd.add_argument("--seed", type=int, default=None, help="override Monte Carlo seed")
        if name == "sweep":
            cmd.add_argument("--index", type=int, required=True,
                             help="1-based coordinate of the ambiguity weight to sweep")
            cmd.add_argument("--values", required=True,
                             help="comma-separated weight values, e.g. 0,1,2,3,4,5")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        scenario = load_config(args.config)
        if args.grid is not None:
            scenario.grid_steps = args.grid
        if args.seed is not None:
            scenario.mc_seed = args.seed
        out_dir = Path(args.out) if args.out else Path(scenario.output_dir)

        if args.command == "solve":
            report = cmd_solve(scenario, out_dir)
        elif args.command == "compare":
            report = cmd_compare(scenario, out_dir)
        elif args.command == "sweep":
            try:
                values = [float(v) for v in args.values.split(",") if v != ""]
            except ValueError as exc:
                raise ConfigError(f"bad --values list: {exc}") from exc
            if not values:
                raise ConfigError("--values list is empty")
            if not 1 <= args.index <= scenario.profile.eta.shape[0]:
                raise ConfigError("--index out of range for the ambiguity weight vector")
            report = cmd_sweep(scenario, args.index, values, out_dir)
        else:
            report = cmd_simulate(scenario, out_dir)
    except (ConfigError, SingularCovarianceError, PositivityLossError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for path in report.files:
        print(f"wrote {path}")
    for name, passed in report.assertions:
        print(f"{'PASS' if passed else 'FAIL'} {name}")
    if not report.all_passed:
        return EXIT_MC if args.command == "simulate" else EXIT_ASSERTION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
