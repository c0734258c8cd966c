"""Reproducible Brownian increments and marked Poisson jumps on a uniform time grid."""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri

from jumpsnakes.base.exceptions import DimensionError, EmptyBundleError, NoiseIndexError
from jumpsnakes.base.markspace import MarkSpace, MarkVector, VectorLike

logger: logging.Logger = logging.getLogger(__name__)

# Paths are generated in fixed-size blocks, each block drawn in full and then truncated,
# so path p always sees the same numbers whatever n_paths is.
BLOCK_SIZE: int = 4096

_BROWNIAN, _COUNTS, _TIMES, _MARKS = range(4)
_HEADER = np.dtype([("seed", "<u8"), ("n_steps", "<i8"), ("n_paths", "<i8"), ("n_marks", "<i8")])


# -
@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid 0 = t_0 < ... < t_K = T."""

    T: float
    n_steps: int

    def __post_init__(self) -> None:
        if not self.T > 0.0:
            raise ValueError(f"Horizon T must be positive, got {self.T}")
        if self.n_steps < 1:
            raise ValueError(f"Need at least one time step, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def knots(self) -> np.ndarray:
        knots = np.arange(self.n_steps + 1, dtype=np.float64) * self.dt
        knots[-1] = self.T  # pinned, not accumulated
        return knots

    def t(self, step: int) -> float:
        if step == self.n_steps:
            return float(self.T)
        return step * self.dt

    def step_of(self, t: float) -> int:
        """Index k of the step whose interval (t_k, t_{k+1}] contains t (t = 0 maps to step 0)."""
        k = int(np.searchsorted(self.knots, t, side="left")) - 1
        return min(max(k, 0), self.n_steps - 1)


# -
@dataclass(frozen=True)
class NoiseBundle:
    """Per-path driving noise: Brownian increments, exact jump events and per-step tallies.

    Jump events are stored in CSR form: the jumps of path p are
    `jump_times[jump_offsets[p]:jump_offsets[p+1]]` (sorted) with matching `jump_marks`.
    `dN[p, k, j]` counts the jumps of path p with mark j in (t_k, t_{k+1}].
    """

    grid: TimeGrid
    markspace: MarkSpace
    seed: int
    dW: np.ndarray
    dN: np.ndarray
    jump_times: np.ndarray
    jump_marks: np.ndarray
    jump_offsets: np.ndarray
    antithetic: bool = False
    _jump_mask: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        n, K = self.dW.shape
        if K != self.grid.n_steps:
            raise DimensionError(f"dW has {K} steps but the grid has {self.grid.n_steps}")
        if self.dN.shape != (n, K, self.markspace.size):
            raise DimensionError(f"dN shape {self.dN.shape} does not match ({n}, {K}, {self.markspace.size})")
        for arr in (self.dW, self.dN, self.jump_times, self.jump_marks, self.jump_offsets):
            arr.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return int(self.dW.shape[0])

    @property
    def n_steps(self) -> int:
        return self.grid.n_steps

    def jumps(self, path: int) -> list[tuple[float, int]]:
        """Jump events (time, mark index) of one path, in time order."""
        self._check_path(path)
        lo, hi = int(self.jump_offsets[path]), int(self.jump_offsets[path + 1])
        return [(float(t), int(j)) for t, j in zip(self.jump_times[lo:hi], self.jump_marks[lo:hi])]

    def jump_counts(self) -> np.ndarray:
        """Total number of jumps on each path."""
        return np.diff(self.jump_offsets)

    def jump_step_mask(self) -> np.ndarray:
        """Boolean (path, step) mask of steps containing at least one jump."""
        if self._jump_mask is None:
            mask = self.dN.sum(axis=2) > 0
            mask.setflags(write=False)
            object.__setattr__(self, "_jump_mask", mask)
        return self._jump_mask

    def compensated(self, v: np.ndarray) -> np.ndarray:
        """Integral of v against the compensated measure over every (path, step).

        `v` has shape (m,) or (n_paths, n_steps, m); the result has shape (n_paths, n_steps).
        """
        v = np.asarray(v, dtype=np.float64)
        weights = self.markspace.weights_array
        jumps = self.dN @ v if v.ndim == 1 else (self.dN * v).sum(axis=-1)
        return jumps - self.grid.dt * (v @ weights)

    def content_hash(self) -> str:
        """SHA-256 of the generation parameters; identical bundles share it."""
        payload = {
            "seed": int(self.seed),
            "T": float(self.grid.T),
            "n_steps": int(self.grid.n_steps),
            "marks": list(self.markspace.marks),
            "weights": list(self.markspace.weights),
            "n_paths": self.n_paths,
            "antithetic": bool(self.antithetic),
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()

    def _check_path(self, path: int) -> None:
        if not 0 <= path < self.n_paths:
            raise NoiseIndexError(f"Path {path} outside 0..{self.n_paths - 1}")

    def _check_step(self, step: int) -> None:
        if not 0 <= step < self.n_steps:
            raise NoiseIndexError(f"Step {step} outside 0..{self.n_steps - 1}")

    # --- binary audit dump ---
    def dump(self, path: Union[str, Path]) -> Path:
        """Write the bundle as little-endian binary: header, dW, dN, then grid, marks and jump table."""
        path = Path(path)
        n, K, m = self.dN.shape
        header = np.array([(np.uint64(self.seed % 2**64), K, n, m)], dtype=_HEADER)
        with open(path, mode="wb") as fh:
            header.tofile(fh)
            self.dW.astype("<f8").tofile(fh)
            self.dN.astype("<i8").tofile(fh)
            np.array([self.grid.T], dtype="<f8").tofile(fh)
            np.asarray(self.markspace.marks, dtype="<f8").tofile(fh)
            np.asarray(self.markspace.weights, dtype="<f8").tofile(fh)
            np.array([int(self.antithetic)], dtype="<i8").tofile(fh)
            self.jump_offsets.astype("<i8").tofile(fh)
            self.jump_times.astype("<f8").tofile(fh)
            self.jump_marks.astype("<i8").tofile(fh)
        logger.info(f"Noise bundle written to {path}")
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> NoiseBundle:
        with open(path, mode="rb") as fh:
            header = np.fromfile(fh, dtype=_HEADER, count=1)[0]
            K, n, m = int(header["n_steps"]), int(header["n_paths"]), int(header["n_marks"])
            dW = np.fromfile(fh, dtype="<f8", count=n * K).reshape(n, K)
            dN = np.fromfile(fh, dtype="<i8", count=n * K * m).reshape(n, K, m).astype(np.int16)
            T = float(np.fromfile(fh, dtype="<f8", count=1)[0])
            marks = np.fromfile(fh, dtype="<f8", count=m)
            weights = np.fromfile(fh, dtype="<f8", count=m)
            antithetic = bool(np.fromfile(fh, dtype="<i8", count=1)[0])
            offsets = np.fromfile(fh, dtype="<i8", count=n + 1)
            total = int(offsets[-1])
            times = np.fromfile(fh, dtype="<f8", count=total)
            jump_marks = np.fromfile(fh, dtype="<i8", count=total)
        return cls(
            grid=TimeGrid(T=T, n_steps=K),
            markspace=MarkSpace(marks=tuple(marks), weights=tuple(weights)),
            seed=int(header["seed"]),
            dW=dW,
            dN=dN,
            jump_times=times,
            jump_marks=jump_marks,
            jump_offsets=offsets,
            antithetic=antithetic,
        )


# --- counter-based streams ---
def _stream(seed: int, block: int, channel: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(entropy=seed % 2**64, spawn_key=(block, channel))
    return np.random.Generator(np.random.Philox(sequence))


def _open_uniforms(gen: np.random.Generator, size: Union[int, tuple[int, ...]]) -> np.ndarray:
    """Uniforms strictly inside (0, 1) on the 2^-53 lattice."""
    bits = gen.integers(0, 2**53, size=size, dtype=np.int64)
    return (bits + 0.5) * 2.0**-53


def _generate_block(grid: TimeGrid, ms: MarkSpace, seed: int, block: int, rows: int, antithetic: bool) -> tuple[np.ndarray, ...]:
    K = grid.n_steps
    dW = np.sqrt(grid.dt) * ndtri(_open_uniforms(_stream(seed, block, _BROWNIAN), (BLOCK_SIZE, K)))
    if antithetic:
        dW[1::2] = -dW[0::2]

    counts = _stream(seed, block, _COUNTS).poisson(ms.total_mass * grid.T, size=BLOCK_SIZE)
    total = int(counts.sum())
    times = grid.T * _open_uniforms(_stream(seed, block, _TIMES), total)
    cumulative = np.cumsum(ms.probabilities)
    marks = np.searchsorted(cumulative, _open_uniforms(_stream(seed, block, _MARKS), total), side="right")
    np.minimum(marks, ms.size - 1, out=marks)

    owner = np.repeat(np.arange(BLOCK_SIZE), counts)
    order = np.lexsort((times, owner))
    times, marks, owner = times[order], marks[order], owner[order]
    keep = owner < rows
    return dW[:rows], counts[:rows], times[keep], marks[keep]


# 🌟 - Generate noise
def generate_noise(
    grid: TimeGrid,
    ms: MarkSpace,
    n_paths: int,
    seed: int,
    *,
    threads: int = 1,
    antithetic: bool = False,
    jump_coefficients_present: bool = False,
) -> NoiseBundle:
    """Generate Brownian increments and marked jumps for `n_paths` paths.

    Jump times follow a Poisson process with intensity `ms.total_mass`, marks are drawn with
    probabilities nu_j / lambda, and Brownian increments are N(0, dt) via the inverse normal CDF.
    The result does not depend on `threads`.
    """
    if n_paths < 1:
        raise EmptyBundleError(f"Cannot generate a noise bundle with {n_paths} paths")
    if antithetic and BLOCK_SIZE % 2:
        raise ValueError("Antithetic pairing needs an even block size")
    if jump_coefficients_present and ms.total_mass * grid.T < 1e-12:
        logger.warning("Jump coefficient is present but the jump intensity is negligible; no jumps will occur")

    n_blocks = -(-n_paths // BLOCK_SIZE)
    rows = [min(BLOCK_SIZE, n_paths - b * BLOCK_SIZE) for b in range(n_blocks)]

    def job(b: int) -> tuple[np.ndarray, ...]:
        return _generate_block(grid, ms, seed, b, rows[b], antithetic)

    if threads > 1 and n_blocks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(job, range(n_blocks)))
    else:
        blocks = [job(b) for b in range(n_blocks)]

    dW = np.concatenate([blk[0] for blk in blocks], axis=0)
    counts = np.concatenate([blk[1] for blk in blocks])
    times = np.concatenate([blk[2] for blk in blocks])
    marks = np.concatenate([blk[3] for blk in blocks]).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)

    dN = np.zeros((n_paths, grid.n_steps, ms.size), dtype=np.int16)
    if times.size:
        owner = np.repeat(np.arange(n_paths), counts)
        steps = np.searchsorted(grid.knots, times, side="left") - 1
        np.clip(steps, 0, grid.n_steps - 1, out=steps)
        np.add.at(dN, (owner, steps, marks), 1)

    logger.debug(f"Generated {n_paths} paths x {grid.n_steps} steps with {times.size} jumps (seed={seed})")
    return NoiseBundle(
        grid=grid,
        markspace=ms,
        seed=int(seed),
        dW=dW,
        dN=dN,
        jump_times=times,
        jump_marks=marks,
        jump_offsets=offsets,
        antithetic=antithetic,
    )


def compensated_increment(bundle: NoiseBundle, ms: MarkSpace, path: int, step: int, v: VectorLike) -> float:
    """Integral of v against N(de,dt) - nu(de)dt over one step of one path."""
    bundle._check_path(path)
    bundle._check_step(step)
    values = v.as_array() if isinstance(v, MarkVector) else np.asarray(v, dtype=np.float64)
    if values.shape != (ms.size,):
        raise DimensionError(f"Mark vector of length {values.size} does not match {ms.size} marks")
    counts = bundle.dN[path, step].astype(np.float64)
    jumps = float(np.dot(values, counts))
    return jumps - bundle.grid.dt * float(np.dot(ms.weights_array, values))
