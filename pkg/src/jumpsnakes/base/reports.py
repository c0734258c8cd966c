"""Report envelopes and plain-text writers shared by the solvers and the CLI."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field

logger: logging.Logger = logging.getLogger(__name__)


class ReportEnvelope(BaseModel):
    """Every JSON report: the command, its resolved config, the noise hash and the payload."""

    command: str
    noise_hash: Optional[str] = None
    config: dict[str, Any] = Field(default_factory=dict)
    payload: dict[str, Any] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)


def write_report(
    path: Union[str, Path],
    command: str,
    payload: Union[BaseModel, dict[str, Any]],
    config: Optional[dict[str, Any]] = None,
    noise_hash: Optional[str] = None,
    notes: Sequence[str] = (),
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    body = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else dict(payload)
    envelope = ReportEnvelope(command=command, noise_hash=noise_hash, config=config or {}, payload=body, notes=list(notes))
    path.write_text(envelope.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_table(path: Union[str, Path], header: Sequence[str], rows: np.ndarray) -> Path:
    """Write a numeric table as CSV with a plain header line and round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    if rows.size and rows.shape[1] != len(header):
        raise ValueError(f"Table has {rows.shape[1]} columns but {len(header)} header names")
    np.savetxt(path, rows, delimiter=",", header=",".join(header), comments="", fmt="%.17g")
    logger.info(f"Wrote {path}")
    return path
