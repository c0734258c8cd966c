"""CSV export of solved grid processes."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Union

import numpy as np

from jumpsnakes.base.reports import write_table
from jumpsnakes.fbsolve.picard import FBSDEPSolution

logger: logging.Logger = logging.getLogger(__name__)


def solution_table(sol: FBSDEPSolution, max_paths: Optional[int] = None) -> tuple[list[str], np.ndarray]:
    """Rows `path,step,t,X,Y,Zbar,Ztilde_0..` for every knot; Z columns are NaN at the last knot."""
    n, K1 = sol.X.shape
    K = K1 - 1
    m = sol.markspace.size
    paths = n if max_paths is None else min(n, max_paths)
    header = ["path", "step", "t", "X", "Y", "Zbar"] + [f"Ztilde_{j}" for j in range(m)]

    path_col = np.repeat(np.arange(paths), K1)
    step_col = np.tile(np.arange(K1), paths)
    t_col = np.tile(sol.grid.knots, paths)
    zbar = np.full((paths, K1), np.nan)
    zbar[:, :K] = sol.Zbar[:paths]
    zt = np.full((paths, K1, m), np.nan)
    zt[:, :K] = sol.Zt[:paths]
    rows = np.column_stack([path_col, step_col, t_col, sol.X[:paths].ravel(), sol.Y[:paths].ravel(), zbar.ravel(), zt.reshape(-1, m)])
    return header, rows


def write_solution_csv(sol: FBSDEPSolution, path: Union[str, Path], max_paths: Optional[int] = None) -> Path:
    header, rows = solution_table(sol, max_paths)
    return write_table(path, header, rows)
