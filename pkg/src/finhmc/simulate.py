"""Seeded trajectory sampling and empirical kernel estimation.

Randomness comes from numpy's counter-based Philox generator. An
:class:`RngState` names a ``(seed, stream)`` pair; each stream is an
independent child of the seed (``SeedSequence`` spawn key), so replicate ``k``
always sees the same numbers no matter how replicates are scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .models import HmcModel, SigmaPModel, SigmaSModel

__all__ = [
    "RngState",
    "PathSample",
    "RandomMapEmission",
    "sample_hmc",
    "sample_sigma_p",
    "sample_sigma_s",
    "sample",
    "empirical_kernel",
    "EmpiricalKernel",
]

ALGORITHM = "philox4x64"


@dataclass(frozen=True)
class RngState:
    seed: int
    stream: int = 0
    algorithm: str = ALGORITHM

    def generator(self) -> np.random.Generator:
        if self.algorithm != ALGORITHM:
            raise ValueError(f"unsupported RNG algorithm {self.algorithm!r}")
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, stream: int) -> "RngState":
        return RngState(self.seed, stream, self.algorithm)


@dataclass(frozen=True)
class RandomMapEmission:
    """One draw of the random map ``h_t``: ``columns[i]`` is the output of state ``i``."""

    columns: tuple


@dataclass(frozen=True)
class PathSample:
    """One trajectory; ``x`` has length ``T+1``.

    ``y`` has length ``T+1`` for HMC / sigma_p samples and ``T`` for sigma_s
    samples (``y_0..y_{T-1}``). ``channel`` holds the full random maps when
    recorded by :func:`sample_hmc`.
    """

    x: tuple
    y: tuple
    channel: tuple | None = None

    @property
    def horizon(self) -> int:
        return len(self.x) - 1


def _cdf(columns: np.ndarray) -> np.ndarray:
    """Column-wise cumulative sums as floats, normalized so trailing zero-mass
    outcomes sit exactly at 1 and can never be drawn."""
    c = np.cumsum(np.asarray(columns, dtype=float), axis=0)
    return c / c[-1:, :]


def _draw(cdf_col: np.ndarray, u: float) -> int:
    return int(np.searchsorted(cdf_col, u, side="right"))


def _check_horizon(T: int) -> None:
    if not isinstance(T, (int, np.integer)) or T < 0:
        raise ValueError(f"horizon must be a nonnegative integer, got {T!r}")


def sample_hmc(model: HmcModel, T: int, rng: RngState,
               record_channel: bool = False) -> PathSample:
    """Sample ``X_t = A X_{t-1} + eps_t``, ``Y_t = H_t X_t``.

    A full random map ``H_t`` (one output per state, independent of ``X``) is
    drawn at every step; ``y_t`` reads the column at ``x_t``.
    """
    _check_horizon(T)
    gen = rng.generator()
    n = model.n
    p0_cdf = _cdf(np.asarray(model.p0).reshape(-1, 1))[:, 0]
    a_cdf = _cdf(model.A)
    g_cdf = _cdf(model.G)
    ux = gen.random(T + 1)
    uh = gen.random((T + 1, n))
    # H[t, i] = h_t(e_i); vectorized per state column
    H = np.empty((T + 1, n), dtype=np.int64)
    for i in range(n):
        H[:, i] = np.searchsorted(g_cdf[:, i], uh[:, i], side="right")
    x = np.empty(T + 1, dtype=np.int64)
    x[0] = _draw(p0_cdf, ux[0])
    for t in range(1, T + 1):
        x[t] = _draw(a_cdf[:, x[t - 1]], ux[t])
    y = H[np.arange(T + 1), x]
    channel = tuple(RandomMapEmission(tuple(int(v) for v in row)) for row in H) \
        if record_channel else None
    return PathSample(tuple(int(v) for v in x), tuple(int(v) for v in y), channel)


def sample_sigma_p(model: SigmaPModel, T: int, rng: RngState) -> PathSample:
    """``(x0, y0) ~ q0``; ``(x_{t+1}, y_{t+1})`` from column ``x_t`` of the stacked blocks."""
    _check_horizon(T)
    gen = rng.generator()
    n = model.n
    q0_cdf = _cdf(np.asarray(model.q0).reshape(-1, 1))[:, 0]
    k_cdf = _cdf(model.stacked)
    u = gen.random(T + 1)
    k = _draw(q0_cdf, u[0])
    xs, ys = [k % n], [k // n]
    for t in range(1, T + 1):
        k = _draw(k_cdf[:, xs[-1]], u[t])
        xs.append(k % n)
        ys.append(k // n)
    return PathSample(tuple(xs), tuple(ys))


def sample_sigma_s(model: SigmaSModel, T: int, rng: RngState) -> PathSample:
    """``x0 ~ p0``; ``(y_t, x_{t+1})`` from column ``x_t`` of the stacked blocks."""
    _check_horizon(T)
    gen = rng.generator()
    n = model.n
    p0_cdf = _cdf(np.asarray(model.p0).reshape(-1, 1))[:, 0]
    k_cdf = _cdf(model.stacked)
    u = gen.random(T + 1)
    xs, ys = [_draw(p0_cdf, u[0])], []
    for t in range(T):
        k = _draw(k_cdf[:, xs[-1]], u[t + 1])
        ys.append(k // n)
        xs.append(k % n)
    return PathSample(tuple(xs), tuple(ys))


def sample(model, T: int, rng: RngState) -> PathSample:
    if isinstance(model, HmcModel):
        return sample_hmc(model, T, rng)
    if isinstance(model, SigmaPModel):
        return sample_sigma_p(model, T, rng)
    if isinstance(model, SigmaSModel):
        return sample_sigma_s(model, T, rng)
    raise TypeError(f"unsupported model type {type(model).__name__}")


@dataclass(frozen=True)
class EmpiricalKernel:
    """Column-normalized ``Z`` transition counts; unvisited columns are zero."""

    matrix: np.ndarray
    counts: np.ndarray
    visited: tuple

    @property
    def unvisited(self) -> tuple:
        return tuple(k for k, v in enumerate(self.visited) if not v)


def empirical_kernel(samples: Iterable[PathSample], n: int, m: int) -> EmpiricalKernel:
    """Estimate the ``nm x nm`` transition matrix of ``Z_t = Y_t (x) X_t``.

    Only time steps where both ``y_t`` and ``y_{t+1}`` exist are counted.
    """
    samples: Sequence[PathSample] = list(samples)
    if not samples:
        raise ValueError("empirical_kernel needs at least one sample")
    counts = np.zeros((n * m, n * m), dtype=np.int64)
    for s in samples:
        steps = min(len(s.x), len(s.y)) - 1
        if steps < 1:
            continue
        x = np.asarray(s.x[:steps + 1])
        y = np.asarray(s.y[:steps + 1])
        z = y * n + x
        np.add.at(counts, (z[1:], z[:-1]), 1)
    totals = counts.sum(axis=0)
    if not totals.any():
        raise ValueError("empirical_kernel: samples contain no transitions")
    visited = tuple(bool(v) for v in totals > 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mat = np.where(totals > 0, counts / np.maximum(totals, 1), 0.0)
    return EmpiricalKernel(mat, counts, visited)
