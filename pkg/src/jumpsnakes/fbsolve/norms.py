"""Monte Carlo estimates of the solution norms and the data norms of the a priori L^p estimate."""

from __future__ import annotations

import logging

import numpy as np
from pydantic import BaseModel, Field

from jumpsnakes.base.markspace import integrate_marks, l2_norm_marks
from jumpsnakes.base.noise import NoiseBundle
from jumpsnakes.fbsolve.picard import FBSDEPSolution
from jumpsnakes.model.problem import Problem

logger: logging.Logger = logging.getLogger(__name__)


class NormReport(BaseModel):
    """Solution side: E sup|X|^p, E sup|Y|^p, E(int ||Z||^2 dt)^{p/2}, E(int int |Zt|^2 N)^{p/2}.

    Data side (`data`): |x0|^p, |phi(0)|^p and the coefficient norms at zero state.
    """

    p: float
    sup_x: float
    sup_y: float
    z_energy: float
    jump_energy: float
    data: dict[str, float] = Field(default_factory=dict)

    def solution_side(self) -> dict[str, float]:
        return {"sup_x": self.sup_x, "sup_y": self.sup_y, "z_energy": self.z_energy, "jump_energy": self.jump_energy}


def lp_norm_report(sol: FBSDEPSolution, problem: Problem, noise: NoiseBundle, p: float = 2.0) -> NormReport:
    if p < 2.0:
        raise ValueError(f"The L^p estimate needs p >= 2, got {p}")
    ms = noise.markspace
    dt = noise.grid.dt
    counts = noise.dN.astype(np.float64)
    half = p / 2.0

    sup_x = float(np.mean(np.max(np.abs(sol.X), axis=1) ** p))
    sup_y = float(np.mean(np.max(np.abs(sol.Y), axis=1) ** p))
    z_energy = float(np.mean((dt * integrate_marks(ms, np.square(sol.Z)).sum(axis=1)) ** half))
    jump_energy = float(np.mean((np.square(sol.Zt) * counts).sum(axis=(1, 2)) ** half))

    coefs = problem.coefficients
    n, K = noise.n_paths, noise.n_steps
    zeros_col = np.zeros((n, 1))
    zeros_marks = np.zeros((n, ms.size))
    b_path = np.zeros(n)
    g_path = np.zeros(n)
    sigma_path = np.zeros(n)
    f_path = np.zeros(n)
    for k in range(K):
        args = (noise.grid.t(k), zeros_col, zeros_col, zeros_marks, zeros_marks, sol.control[:, k, None], ms.marks_array)
        b_path += dt * l2_norm_marks(ms, coefs.b.value(*args))
        g_path += dt * l2_norm_marks(ms, coefs.g.value(*args))
        sigma_path += dt * integrate_marks(ms, np.square(coefs.sigma.value(*args)))
        f_path += (np.square(coefs.f.value(*args)) * counts[:, k]).sum(axis=1)

    data = {
        "x0": abs(problem.x0) ** p,
        "phi0": float(abs(coefs.phi.value(np.zeros(1))[0]) ** p),
        "b0": float(np.mean(b_path**p)),
        "g0": float(np.mean(g_path**p)),
        "sigma0": float(np.mean(sigma_path**half)),
        "f0": float(np.mean(f_path**half)),
    }
    report = NormReport(p=p, sup_x=sup_x, sup_y=sup_y, z_energy=z_energy, jump_energy=jump_energy, data=data)
    for name, value in {**report.solution_side(), **data}.items():
        if not np.isfinite(value):
            raise ValueError(f"Norm estimate '{name}' is not finite")
    return report
