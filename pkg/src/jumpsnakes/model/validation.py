"""Finite-difference audit of declared derivatives, growth and the f_z = 0 requirement."""

from __future__ import annotations

import logging
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from jumpsnakes.base.exceptions import ValidationFailure
from jumpsnakes.model.coefficients import ARGUMENTS, Coefficient
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)

_BUDGET_OF_ARGUMENT = {"x": "L1", "y": "L2", "z": "L3", "zt": "L4"}
_MAX_FINDINGS = 50


class ValidationFinding(BaseModel):
    coefficient: str
    argument: str
    order: int
    point: dict[str, float]
    declared: float
    finite_difference: float


class ValidationReport(BaseModel):
    """Outcome of `validate_problem`."""

    problem: str
    passed: bool
    sample_count: int
    seed: int
    findings: list[ValidationFinding] = Field(default_factory=list)
    lipschitz_ratios: dict[str, dict[str, float]] = Field(default_factory=dict)
    growth_constants: dict[str, float] = Field(default_factory=dict)
    budget: dict[str, float] = Field(default_factory=dict)
    C0: float = 0.0
    budget_term_p2: float = 0.0
    budget_exceeded: list[str] = Field(default_factory=list)
    max_abs_f_z: float = 0.0


def _sample_points(problem: Problem, n: int, rng: np.random.Generator) -> dict[str, np.ndarray]:
    controls = problem.controls
    if controls.kind == "box":
        u = rng.uniform(controls.u_min, controls.u_max, size=n)
    else:
        u = rng.choice(np.asarray(controls.values, dtype=np.float64), size=n)
    return {
        "t": rng.uniform(0.0, problem.T, size=n),
        "x": rng.uniform(-2.0, 2.0, size=n),
        "y": rng.uniform(-2.0, 2.0, size=n),
        "z": rng.uniform(-2.0, 2.0, size=n),
        "zt": rng.uniform(-2.0, 2.0, size=n),
        "u": u,
        "e": rng.choice(problem.markspace.marks_array, size=n),
    }


def _call(fn: Any, pts: dict[str, np.ndarray]) -> np.ndarray:
    return fn(pts["t"], pts["x"], pts["y"], pts["z"], pts["zt"], pts["u"], pts["e"])


def _point(pts: dict[str, np.ndarray], i: int) -> dict[str, float]:
    return {k: float(v[i]) for k, v in pts.items()}


def _audit_coefficient(name: str, coefficient: Coefficient, pts: dict[str, np.ndarray]) -> list[ValidationFinding]:
    findings: list[ValidationFinding] = []
    value = _call(coefficient.value, pts)
    grad = _call(coefficient.gradient, pts)
    hess = _call(coefficient.hessian, pts)
    for i, arg in enumerate(ARGUMENTS):
        h = 1e-5 * (1.0 + np.abs(pts[arg]))
        up, down = dict(pts), dict(pts)
        up[arg] = pts[arg] + h
        down[arg] = pts[arg] - h

        fd_first = (_call(coefficient.value, up) - _call(coefficient.value, down)) / (2.0 * h)
        bad = np.abs(fd_first - grad[i]) > 1e-5 * (1.0 + np.abs(value))
        for k in np.flatnonzero(bad):
            findings.append(ValidationFinding(coefficient=name, argument=arg, order=1, point=_point(pts, k), declared=float(grad[i][k]), finite_difference=float(fd_first[k])))

        fd_second = (_call(coefficient.gradient, up) - _call(coefficient.gradient, down)) / (2.0 * h)
        bad2 = np.abs(fd_second - hess[:, i]) > 1e-5 * (1.0 + np.abs(grad))
        for j, k in zip(*np.nonzero(bad2)):
            findings.append(ValidationFinding(coefficient=name, argument=f"{ARGUMENTS[j]},{arg}", order=2, point=_point(pts, k), declared=float(hess[j, i][k]), finite_difference=float(fd_second[j][k])))
    return findings


# 🌟 - Validate problem
def validate_problem(problem: Problem, sample_count: int = 64, seed: int = 0, *, strict: bool = True) -> ValidationReport:
    """Audit the declared partials of every coefficient by central finite differences.

    Derivative mismatches beyond 1e-5 (1 + |value|) fail the audit and raise `ValidationFailure`
    when `strict`. Observed Lipschitz maxima and growth constants above the declared budget are
    reported and logged, not failed.
    """
    rng = np.random.default_rng(seed)
    pts = _sample_points(problem, sample_count, rng)
    coefs = problem.coefficients

    findings: list[ValidationFinding] = []
    ratios: dict[str, dict[str, float]] = {}
    growth: dict[str, float] = {}
    exceeded: list[str] = []
    budget = problem.budget.model_dump()
    scale = 1.0 + sum(np.abs(pts[k]) for k in ("x", "y", "z", "zt", "u"))

    for name, coefficient in coefs.items():
        findings.extend(_audit_coefficient(name, coefficient, pts))
        grad = _call(coefficient.gradient, pts)
        ratios[name] = {arg: float(np.max(np.abs(grad[i]))) for i, arg in enumerate(ARGUMENTS)}
        growth[name] = float(np.max(np.abs(_call(coefficient.value, pts)) / scale))
        for arg, observed in ratios[name].items():
            declared = budget[_BUDGET_OF_ARGUMENT[arg]]
            if arg != "x" and name in ("b", "sigma", "f") and observed > declared + 1e-12:
                exceeded.append(f"{name}_{arg}: observed {observed:.4g} > {_BUDGET_OF_ARGUMENT[arg]} = {declared:.4g}")
        if name in ("b", "sigma", "f") and problem.budget.growth > 0.0 and growth[name] > problem.budget.growth + 1e-12:
            exceeded.append(f"{name} growth: observed {growth[name]:.4g} > growth = {problem.budget.growth:.4g}")

    # f must not depend on Z, declared or observed
    f_grad = _call(coefs.f.gradient, pts)
    max_f_z = float(np.max(np.abs(f_grad[ARGUMENTS.index("z")])))
    h = 1e-5 * (1.0 + np.abs(pts["z"]))
    up, down = dict(pts), dict(pts)
    up["z"], down["z"] = pts["z"] + h, pts["z"] - h
    fd_f_z = (_call(coefs.f.value, up) - _call(coefs.f.value, down)) / (2.0 * h)
    max_f_z = max(max_f_z, float(np.max(np.abs(fd_f_z))))
    if max_f_z > 0.0:
        k = int(np.argmax(np.abs(fd_f_z)))
        findings.append(ValidationFinding(coefficient="f", argument="z", order=1, point=_point(pts, k), declared=float(f_grad[2][k]), finite_difference=float(fd_f_z[k])))

    # terminal map
    phi = coefs.phi
    x = pts["x"]
    hx = 1e-5 * (1.0 + np.abs(x))
    fd_phi = (phi.value(x + hx) - phi.value(x - hx)) / (2.0 * hx)
    for k in np.flatnonzero(np.abs(fd_phi - phi.dx(x)) > 1e-5 * (1.0 + np.abs(phi.value(x)))):
        findings.append(ValidationFinding(coefficient="phi", argument="x", order=1, point={"x": float(x[k])}, declared=float(phi.dx(x)[k]), finite_difference=float(fd_phi[k])))
    fd_phi2 = (phi.dx(x + hx) - phi.dx(x - hx)) / (2.0 * hx)
    for k in np.flatnonzero(np.abs(fd_phi2 - phi.dxx(x)) > 1e-5 * (1.0 + np.abs(phi.dx(x)))):
        findings.append(ValidationFinding(coefficient="phi", argument="x,x", order=2, point={"x": float(x[k])}, declared=float(phi.dxx(x)[k]), finite_difference=float(fd_phi2[k])))

    for line in exceeded:
        logger.warning(f"Problem '{problem.name}': {line}")

    report = ValidationReport(
        problem=problem.name,
        passed=not findings,
        sample_count=sample_count,
        seed=seed,
        findings=findings[:_MAX_FINDINGS],
        lipschitz_ratios=ratios,
        growth_constants=growth,
        budget=budget,
        C0=problem.budget.C0,
        budget_term_p2=problem.budget.budget_term(2.0, problem.T),
        budget_exceeded=exceeded,
        max_abs_f_z=max_f_z,
    )
    if findings and strict:
        first = findings[0]
        raise ValidationFailure(
            f"Problem '{problem.name}' failed validation with {len(findings)} mismatches; first: "
            f"{first.coefficient}_{first.argument} declared {first.declared:.6g} vs finite difference "
            f"{first.finite_difference:.6g} at {first.point}",
            report=report,
        )
    return report
