"""Pointwise check of the maximum principle: script H(u) >= script H(u_bar) over sampled controls."""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from jumpsnakes.adjoint.first_order import FirstOrderAdjoint
from jumpsnakes.adjoint.partials import step_partials
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.fbsolve.picard import FBSDEPSolution
from jumpsnakes.maxprinciple.hamiltonian import hamiltonian_gap, script_hamiltonian, subset_point
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

IDENTITY_TOL: float = 1e-10


class MPConfig(BaseModel):
    """Lattice of the check: evenly spaced steps, the first paths, and a control grid."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n_times: int = Field(default=20, ge=1)
    n_paths: int = Field(default=200, ge=1)
    grid_points: int = Field(default=41, ge=1)
    half_width: float = Field(default=2.0, gt=0.0)
    relative: bool = True
    tol: float = Field(default=1e-2, ge=0.0)


class MPReport(BaseModel):
    """Gaps script H(u_i) - script H(u_bar) on the lattice (minimum over marks).

    `gaps` has shape (times, paths, controls); cells at steps containing a jump, or with a
    control outside the admissible set, are NaN and do not count.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    problem: str
    steps: list[int]
    times: list[float]
    n_paths: int
    controls: list[float]
    relative: bool
    tol: float
    min_gap: float
    argmin: Optional[dict[str, float]] = None
    violation_fraction: float
    violations: int
    evaluated: int
    excluded_fraction: float
    max_identity_error: float
    gaps: Optional[np.ndarray] = Field(default=None, exclude=True)

    @computed_field
    @property
    def passed(self) -> bool:
        return self.violations == 0


def lattice_steps(n_steps: int, n_times: int) -> np.ndarray:
    return np.unique(np.linspace(0, n_steps - 1, min(n_times, n_steps)).round().astype(int))


# 🌟 - Verify
def verify_mp(
    problem: Problem,
    sol: FBSDEPSolution,
    fo: FirstOrderAdjoint,
    so: SecondOrderAdjoint,
    noise: NoiseBundle,
    cfg: MPConfig = MPConfig(),
) -> MPReport:
    """Evaluate the gaps and count violations gap < -tol (1 + |script H(u_bar)|).

    The control grid is u_bar + linspace(-half_width, half_width) when `relative`, else the
    sampler of the problem's control set. Steps containing a jump of the path are excluded.
    """
    coefs = problem.coefficients
    steps = lattice_steps(noise.n_steps, cfg.n_times)
    rows = np.arange(min(cfg.n_paths, noise.n_paths))
    grid = np.linspace(-cfg.half_width, cfg.half_width, cfg.grid_points) if cfg.relative else problem.controls.sample_grid(cfg.grid_points)
    if cfg.relative and cfg.grid_points % 2 == 1:
        grid[cfg.grid_points // 2] = 0.0
    jump_steps = noise.jump_step_mask()

    gaps = np.full((steps.size, rows.size, grid.size), np.nan)
    violated = np.zeros(gaps.shape, dtype=bool)
    max_identity = 0.0
    excluded = 0
    for a, k in enumerate(steps):
        point = subset_point(step_partials(problem, sol, noise, int(k)).point, rows)
        p = fo.p[rows, k, None]
        q = fo.q[rows, k]
        P = so.P[rows, k, None]
        active = ~jump_steps[rows, k]
        excluded += int(np.count_nonzero(~active)) * grid.size
        scale = 1.0 + np.max(np.abs(script_hamiltonian(coefs, point, point.u, p, q, P, np.zeros_like(q))), axis=1)
        for c, value in enumerate(grid):
            u = point.u + value if cfg.relative else np.full_like(point.u, value)
            admissible = problem.controls.contains(u[:, 0])
            gap, identity = hamiltonian_gap(coefs, point, u, p, q, P)
            max_identity = max(max_identity, float(np.max(identity)))
            valid = active & admissible
            worst = gap.min(axis=1)
            gaps[a, valid, c] = worst[valid]
            violated[a, valid, c] = worst[valid] < -cfg.tol * scale[valid]

    if max_identity > IDENTITY_TOL:
        logger.warning(f"{problem.name}: script-H identity error {max_identity:.3e} exceeds {IDENTITY_TOL:.0e}")
    evaluated = int(np.count_nonzero(~np.isnan(gaps)))
    violations = int(np.count_nonzero(violated))
    argmin = None
    min_gap = float("nan")
    if evaluated:
        flat = int(np.nanargmin(gaps))
        a, r, c = np.unravel_index(flat, gaps.shape)
        min_gap = float(gaps[a, r, c])
        argmin = {"t": noise.grid.t(int(steps[a])), "path": float(rows[r]), "control": float(grid[c])}

    report = MPReport(
        problem=problem.name,
        steps=[int(k) for k in steps],
        times=[noise.grid.t(int(k)) for k in steps],
        n_paths=int(rows.size),
        controls=[float(v) for v in grid],
        relative=cfg.relative,
        tol=cfg.tol,
        min_gap=min_gap,
        argmin=argmin,
        violation_fraction=violations / evaluated if evaluated else 0.0,
        violations=violations,
        evaluated=evaluated,
        excluded_fraction=excluded / gaps.size if gaps.size else 0.0,
        max_identity_error=max_identity,
        gaps=gaps,
    )
    logger.info(f"{problem.name}: min gap {min_gap:.4g}, violation fraction {report.violation_fraction:.3%} over {evaluated} lattice points")
    return report


def gap_rows(report: MPReport) -> tuple[list[str], np.ndarray]:
    """CSV rows `t,path,control,gap` of the evaluated lattice points."""
    header = ["t", "path", "control", "gap"]
    if report.gaps is None:
        return header, np.empty((0, 4))
    a, r, c = np.nonzero(~np.isnan(report.gaps))
    rows = np.column_stack([np.asarray(report.times)[a], r.astype(np.float64), np.asarray(report.controls)[c], report.gaps[a, r, c]])
    return header, rows
