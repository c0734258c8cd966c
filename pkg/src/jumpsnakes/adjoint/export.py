"""CSV export of the adjoint processes and of guard violations."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from jumpsnakes.adjoint.first_order import FirstOrderAdjoint
from jumpsnakes.adjoint.second_order import SecondOrderAdjoint
from jumpsnakes.base.exceptions import GuardViolation
from jumpsnakes.base.noise import TimeGrid
from jumpsnakes.base.reports import write_table

logger: logging.Logger = logging.getLogger(__name__)

GUARD_HEADER = "t,path,mark,guard_name,value"


def adjoint_table(fo: FirstOrderAdjoint, so: Optional[SecondOrderAdjoint], grid: TimeGrid, max_paths: Optional[int] = None) -> tuple[list[str], np.ndarray]:
    """Rows `path,step,t,p,P,q_j..,qt_j..,K1_j..,K2_j..`; per-step columns are NaN at the last knot."""
    n, K1 = fo.p.shape
    K = K1 - 1
    m = fo.q.shape[2]
    paths = n if max_paths is None else min(n, max_paths)
    header = ["path", "step", "t", "p", "P"]
    for name in ("q", "qt", "K1", "K2"):
        header += [f"{name}_{j}" for j in range(m)]

    def knotted(values: np.ndarray) -> np.ndarray:
        padded = np.full((paths, K1, m), np.nan)
        padded[:, :K] = values[:paths]
        return padded.reshape(-1, m)

    P = so.P[:paths] if so is not None else np.full((paths, K1), np.nan)
    rows = np.column_stack(
        [
            np.repeat(np.arange(paths), K1),
            np.tile(np.arange(K1), paths),
            np.tile(grid.knots, paths),
            fo.p[:paths].ravel(),
            P.ravel(),
            knotted(fo.q),
            knotted(fo.qt),
            knotted(fo.K1),
            knotted(fo.K2),
        ]
    )
    return header, rows


def write_adjoint_csv(fo: FirstOrderAdjoint, so: Optional[SecondOrderAdjoint], grid: TimeGrid, path: Union[str, Path], max_paths: Optional[int] = None) -> Path:
    header, rows = adjoint_table(fo, so, grid, max_paths)
    return write_table(path, header, rows)


def write_guard_log(violations: Sequence[GuardViolation], path: Union[str, Path]) -> Path:
    """One line per violation; the guard name column is text so this is written directly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [GUARD_HEADER] + [f"{v.t!r},{v.path},{v.mark},{v.guard_name},{v.value!r}" for v in violations]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(violations)} guard violation(s) to {path}")
    return path
