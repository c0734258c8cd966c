#!/usr/bin/env python3
"""
CLI for jumpsnakes experiments.

Each subcommand reads a run configuration, solves what it needs and writes JSON
reports and CSV tables to the output directory. Exit codes: 0 pass, 1 error,
2 acceptance violated, 3 adjoint singularity.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from jumpsnakes.adjoint.export import write_adjoint_csv, write_guard_log
from jumpsnakes.adjoint.first_order import FirstOrderAdjoint, oracle_deviation, solve_first_order_adjoint
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint, solve_second_order_adjoint
from jumpsnakes.base.exceptions import JumpsnakesError, SingularityError
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.base.reports import write_report, write_table
from jumpsnakes.config import RunConfig, apply_overrides, build_noise, build_problem, load_config, resolve_candidate
from jumpsnakes.fbsolve.export import write_solution_csv
from jumpsnakes.fbsolve.norms import lp_norm_report
from jumpsnakes.fbsolve.picard import FBSDEPSolution, evaluate_cost, picard_solve
from jumpsnakes.maxprinciple.expansion import expansion_check
from jumpsnakes.maxprinciple.orders import order_experiment
from jumpsnakes.maxprinciple.variations import first_variation_backward, first_variation_simulate, second_variation_simulate
from jumpsnakes.maxprinciple.verify import gap_rows, verify_mp
from jumpsnakes.model.database import get_problem_database
from jumpsnakes.model.problem import Problem
from jumpsnakes.model.validation import validate_problem

logger: logging.Logger = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_ERROR: int = 1
EXIT_VIOLATION: int = 2
EXIT_SINGULAR: int = 3


@dataclass
class RunContext:
    """The problem, noise and candidate control a configuration describes, and where reports go."""

    cfg: RunConfig
    problem: Problem
    noise: NoiseBundle
    control: np.ndarray
    out: Path

    @classmethod
    def from_config(cls, cfg: RunConfig) -> RunContext:
        problem = build_problem(cfg)
        noise = build_noise(cfg, problem)
        control = resolve_candidate(cfg, problem, noise.grid, noise.n_paths)
        return cls(cfg=cfg, problem=problem, noise=noise, control=control, out=Path(cfg.run.out))

    def report(self, name: str, command: str, payload: Union[BaseModel, dict[str, Any]], notes: Sequence[str] = ()) -> Path:
        return write_report(self.out / name, command, payload, self.cfg.resolved(), self.noise.content_hash(), notes)

    def solve(self) -> FBSDEPSolution:
        return picard_solve(self.problem, self.control, self.noise, self.cfg.regression, settings=self.cfg.picard)

    def first_order(self, sol: FBSDEPSolution) -> FirstOrderAdjoint:
        cfg = self.cfg
        return solve_first_order_adjoint(self.problem, sol, self.control, self.noise, cfg.regression, cfg.adjoint, allow_unconverged=cfg.picard.allow_unconverged)

    def adjoints(self, sol: FBSDEPSolution) -> tuple[FirstOrderAdjoint, SecondOrderAdjoint]:
        cfg = self.cfg
        fo = self.first_order(sol)
        so = solve_second_order_adjoint(self.problem, sol, fo, self.control, self.noise, cfg.regression, cfg.adjoint)
        return fo, so


# 🌟 - Commands
def cmd_solve(cfg: RunConfig) -> int:
    """Solve the state system for the candidate control and report its cost."""
    ctx = RunContext.from_config(cfg)
    sol = ctx.solve()
    write_solution_csv(sol, ctx.out / "solution.csv", cfg.run.export_paths)
    ctx.report("picard.json", "solve", sol.picard)

    cost = evaluate_cost(sol, allow_unconverged=True)
    norms = lp_norm_report(sol, ctx.problem, ctx.noise)
    oracle_cost = ctx.problem.oracle.cost if ctx.problem.oracle else None
    notes = [] if sol.picard.converged else [f"not converged after {sol.picard.iterations} iterations"]
    ctx.report("cost.json", "solve", {"cost": cost.model_dump(), "oracle_cost": oracle_cost, "norms": norms.model_dump()}, notes)

    if not sol.picard.converged:
        print(f"✗ {ctx.problem.name}: Picard iteration did not converge ({sol.picard.iterations} iterations, last distance {sol.picard.distances[-1]:.3e})")
        return EXIT_VIOLATION
    print(f"✓ {ctx.problem.name}: J(u) = {cost.value:.6g} ± {cost.standard_error:.2g} after {sol.picard.iterations} iterations")
    return EXIT_OK


def cmd_adjoint(cfg: RunConfig) -> int:
    """Solve both adjoint equations along the solved trajectory."""
    ctx = RunContext.from_config(cfg)
    sol = ctx.solve()
    fo, so = ctx.adjoints(sol)
    write_adjoint_csv(fo, so, ctx.noise.grid, ctx.out / "adjoint.csv", cfg.run.export_paths)
    write_guard_log([], ctx.out / "guards.csv")

    deviation = oracle_deviation(ctx.problem, fo)
    notes = []
    if fo.projected_jump_partials:
        notes.append("f-partials replaced by their regression onto the state (predictable projection)")
    if not (fo.bounded and so.bounded):
        notes.append(f"adjoint exceeded the cap {cfg.adjoint.bound:g}")
    payload = {
        "p0": fo.p0,
        "P0": so.P0,
        "max_abs_p": fo.max_abs_p,
        "max_abs_P": so.max_abs_P,
        "bounded": fo.bounded and so.bounded,
        "oracle_deviation": deviation,
    }
    ctx.report("adjoint.json", "adjoint", payload, notes)
    print(f"✓ {ctx.problem.name}: p0 = {fo.p0:.6g}, P0 = {so.P0:.6g}" + (f", max |p - oracle| = {deviation:.3g}" if deviation is not None else ""))
    return EXIT_OK


def cmd_verify_mp(cfg: RunConfig) -> int:
    """Check script H(u) >= script H(u_bar) on the configured lattice."""
    ctx = RunContext.from_config(cfg)
    sol = ctx.solve()
    fo, so = ctx.adjoints(sol)
    report = verify_mp(ctx.problem, sol, fo, so, ctx.noise, cfg.mp)
    ctx.report("mp.json", "verify-mp", report)
    header, rows = gap_rows(report)
    write_table(ctx.out / "mp_gaps.csv", header, rows)

    if report.passed:
        print(f"✓ {ctx.problem.name}: no violations over {report.evaluated} lattice points (min gap {report.min_gap:.4g})")
        return EXIT_OK
    print(f"✗ {ctx.problem.name}: {report.violations} violations ({report.violation_fraction:.3%}), min gap {report.min_gap:.4g} at {report.argmin}")
    return EXIT_VIOLATION


def cmd_spike_order(cfg: RunConfig) -> int:
    """Fit the convergence order of each configured statistic in the spike width."""
    ctx = RunContext.from_config(cfg)
    spike = cfg.spike.resolve(ctx.problem)
    sol = ctx.solve()
    fo: Optional[FirstOrderAdjoint] = None
    if any(s in ("first_variation", "remainder") for s in cfg.order.selectors):
        fo = ctx.first_order(sol)

    code = EXIT_OK
    for selector in cfg.order.selectors:
        fit = order_experiment(
            ctx.problem,
            ctx.control,
            selector,
            cfg.order.epsilons,
            spike,
            ctx.noise,
            cfg.order.beta,
            cfg.order.band,
            cfg.regression,
            cfg.picard,
            cfg.adjoint,
            reference=sol,
            first_order=fo,
            threads=cfg.run.threads,
        )
        notes = ["statistics below the Monte Carlo noise floor; slope not fitted"] if fit.inconclusive else []
        ctx.report(f"order_{selector}.json", "spike-order", fit, notes)
        header, rows = fit.table()
        write_table(ctx.out / f"order_{selector}.csv", header, rows)

        if fit.inconclusive:
            print(f"! {ctx.problem.name}: {selector} inconclusive (statistics at the noise floor)")
        elif fit.within_band:
            print(f"✓ {ctx.problem.name}: {selector} slope {fit.slope:.3f} (expected {fit.expected_slope:g})")
        else:
            print(f"✗ {ctx.problem.name}: {selector} slope {fit.slope:.3f} outside {fit.expected_slope:g} ± {fit.band:.0%}")
            code = EXIT_VIOLATION
    return code


def cmd_expansion(cfg: RunConfig) -> int:
    """Compare spike cost gaps with eps * G and check the variational identities."""
    ctx = RunContext.from_config(cfg)
    spike = cfg.spike.resolve(ctx.problem)
    sol = ctx.solve()
    fo, so = ctx.adjoints(sol)
    report = expansion_check(
        ctx.problem,
        ctx.control,
        spike,
        ctx.noise,
        cfg.expansion.epsilons,
        cfg.regression,
        cfg.picard,
        cfg.adjoint,
        reference=sol,
        first_order=fo,
        second_order=so,
    )

    var = first_variation_simulate(ctx.problem, sol, fo, spike, ctx.noise)
    identity = first_variation_backward(ctx.problem, sol, fo, var, ctx.noise, cfg.regression)
    second = second_variation_simulate(ctx.problem, sol, fo, so, var, ctx.noise, cfg.regression, cfg.picard).second_order
    payload = {
        "expansion": report.model_dump(mode="json"),
        "first_variation": identity.model_dump(mode="json"),
        "second_variation": second.model_dump(mode="json") if second is not None else None,
    }
    notes = [] if second is None or second.within() else [f"|Y2_0 - Y*_0| = {second.difference:.3g} exceeds its band"]
    ctx.report("expansion.json", "expansion", payload, notes)

    if report.passed:
        print(f"✓ {ctx.problem.name}: G = {report.G:.6g}, final residual {report.residuals[-1]:.3g} <= {report.final_bound:.3g}")
        return EXIT_OK
    print(
        f"✗ {ctx.problem.name}: G = {report.G:.6g}; decreasing={report.decreasing}, "
        f"final_ok={report.final_ok}, sign_consistent={report.sign_consistent}"
    )
    return EXIT_VIOLATION


def cmd_validate(cfg: RunConfig) -> int:
    """Audit the declared derivatives of the configured problem."""
    problem = build_problem(cfg)
    report = validate_problem(problem, seed=cfg.run.seed, strict=False)
    write_report(Path(cfg.run.out) / "validation.json", "validate", report, cfg.resolved())
    if report.passed:
        print(f"✓ {problem.name}: derivatives consistent, C0 = {report.C0:g}")
        for line in report.budget_exceeded:
            print(f"  ! {line}")
        return EXIT_OK
    print(f"✗ {problem.name}: {len(report.findings)} derivative mismatches")
    for finding in report.findings[:10]:
        print(f"  {finding.coefficient}_{finding.argument}: declared {finding.declared:.6g}, finite difference {finding.finite_difference:.6g}")
    return EXIT_VIOLATION


def list_problems() -> int:
    """List the builtin problem registry."""
    db = get_problem_database()
    names = db.list_problems()
    print("=== Builtin problems ===")
    for i, name in enumerate(names, 1):
        print(f"  {i:2d}. {name:<22} {db.describe(name)}")
    print(f"\nTotal problems available: {len(names)}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "solve": cmd_solve,
    "adjoint": cmd_adjoint,
    "verify-mp": cmd_verify_mp,
    "spike-order": cmd_spike_order,
    "expansion": cmd_expansion,
    "validate": cmd_validate,
}


# -
def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run configuration (TOML)")
    common.add_argument("--problem", help="Builtin problem name; replaces [coefficients] builtin")
    common.add_argument("--seed", type=int, help="Noise seed")
    common.add_argument("--paths", type=int, help="Number of Monte Carlo paths")
    common.add_argument("--steps", type=int, help="Number of time steps")
    common.add_argument("--out", help="Output directory (default: ./jumpsnakes-out)")
    common.add_argument("--threads", type=int, help="Worker threads for noise generation and epsilon sweeps")
    common.add_argument("-v", "--verbose", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(
        prog="jumpsnakes",
        description="Coupled forward-backward SDEs with jumps and the stochastic maximum principle",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  %(prog)s list-problems                           # Show the builtin registry
  %(prog)s solve --problem linear_bsde             # Solve and report the cost
  %(prog)s adjoint --problem lq_jump --paths 2000  # First- and second-order adjoints
  %(prog)s verify-mp --config runs/lq_jump.toml    # Hamiltonian inequality on a lattice
  %(prog)s spike-order --config runs/orders.toml   # Convergence orders in epsilon
        """,
    )
    subparsers = parser.add_subparsers(dest="command", help="Available commands")
    subparsers.add_parser("solve", parents=[common], help="Solve the state system and report the cost")
    subparsers.add_parser("adjoint", parents=[common], help="Solve the first- and second-order adjoint equations")
    subparsers.add_parser("verify-mp", parents=[common], help="Check the maximum principle on a lattice of controls")
    subparsers.add_parser("spike-order", parents=[common], help="Fit convergence orders in the spike width")
    subparsers.add_parser("expansion", parents=[common], help="Compare spike cost gaps with their first-order expansion")
    subparsers.add_parser("validate", parents=[common], help="Audit the declared coefficient derivatives")
    subparsers.add_parser("list-problems", help="List the builtin problems")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point."""
    parser = _build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_ERROR
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    if args.command == "list-problems":
        return list_problems()

    out = Path(args.out) if args.out else None
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, problem=args.problem, seed=args.seed, paths=args.paths, steps=args.steps, out=args.out, threads=args.threads)
        out = Path(cfg.run.out)
        return COMMANDS[args.command](cfg)
    except SingularityError as e:
        log = write_guard_log(e.violations, (out or Path(RunConfig().run.out)) / "guards.csv")
        print(f"✗ Adjoint singularity: {e}")
        print(f"  {len(e.violations)} guard violations written to {log}")
        return EXIT_SINGULAR
    except (JumpsnakesError, OSError) as e:
        print(f"✗ {args.command} failed: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
