"""Delay-coordinate phase-space reconstruction and embedding-dimension selection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .core import RunConfig, TimeSeriesEnsemble
from .errors import BadIndex, SeriesTooShort

CAO_SATURATION = 0.05
CAO_STOCHASTIC_BAND = 0.15


@dataclass(frozen=True)
class StateSpace:
    """Delay vectors stored column-wise.

    Column ``j`` holds the values at times ``j .. j+d-1`` of every included
    series, and its prediction target is time ``j + d`` (``target_index_offset``).
    ``source_dims[k] = (series, lag)`` says row ``k`` is ``series`` at time
    ``t + lag`` where ``t = j + d - 1`` is the state time, so ``lag`` runs
    from ``-(d-1)`` to ``0``.
    """

    states: np.ndarray
    lag: int
    source_dims: tuple
    target_index_offset: int

    @property
    def n_states(self) -> int:
        return self.states.shape[1]

    def rows_of(self, series: int) -> np.ndarray:
        return np.array([k for k, (s, _) in enumerate(self.source_dims) if s == series], dtype=int)


def _check_length(t: int, d: int) -> None:
    if d < 1:
        raise ValueError(f"embedding dimension must be >= 1, got {d}")
    if t <= d:
        raise SeriesTooShort(f"series of length {t} cannot be embedded with d={d} (need T > d)")


def _block(series: np.ndarray, d: int) -> np.ndarray:
    t = series.shape[0]
    return np.lib.stride_tricks.sliding_window_view(series, d)[: t - d].T


def delay_embed_single(series, d: int, index: int = 0) -> StateSpace:
    """Embed one series; ``index`` is only used to label ``source_dims``."""
    series = np.asarray(series, dtype=float)
    _check_length(series.shape[0], d)
    dims = tuple((index, k - (d - 1)) for k in range(d))
    return StateSpace(np.ascontiguousarray(_block(series, d)), d, dims, d)


def delay_embed_ensemble(
    ensemble: TimeSeriesEnsemble, d: int, exclude: Optional[int] = None
) -> StateSpace:
    """Stack per-series delay blocks in series order, optionally skipping one series."""
    n, t = ensemble.data.shape
    _check_length(t, d)
    if exclude is not None and not 0 <= exclude < n:
        raise BadIndex(f"exclude={exclude} outside [0, {n})")
    keep = [i for i in range(n) if i != exclude]
    states = np.vstack([_block(ensemble.data[i], d) for i in keep])
    dims = tuple((i, k - (d - 1)) for i in keep for k in range(d))
    return StateSpace(states, d, dims, d)


@dataclass(frozen=True)
class CaoResult:
    dimension: int
    e1: np.ndarray  # E1(d) for d = 1 .. d_max
    e2: np.ndarray  # E2(d) for d = 1 .. d_max
    stochastic: bool


def _nearest_other(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Index of and max-norm distance to each point's nearest neighbour at non-zero distance."""
    m = points.shape[0]
    tree = cKDTree(points)
    k = min(m, 8)
    while True:
        dist, idx = tree.query(points, k=k, p=np.inf)
        dist = dist.reshape(m, k)
        idx = idx.reshape(m, k)
        positive = dist > 0
        found = positive.any(axis=1)
        if found.all() or k == m:
            break
        k = min(m, 4 * k)
    first = np.argmax(positive, axis=1)
    rows = np.arange(m)
    nn_dist = np.where(found, dist[rows, first], np.nan)
    return idx[rows, first], nn_dist


def _cao_e(x: np.ndarray, d: int) -> tuple[float, float]:
    """Mean neighbour-distance growth E(d) and mean one-step separation E*(d)."""
    m = x.shape[0] - d
    points = np.lib.stride_tricks.sliding_window_view(x, d)[:m]
    nn, dist = _nearest_other(points)
    ok = np.isfinite(dist)
    i = np.flatnonzero(ok)
    step = np.abs(x[i + d] - x[nn[ok] + d])
    grown = np.maximum(dist[ok], step)
    return float(np.mean(grown / dist[ok])), float(np.mean(step))


def cao_statistics(series, d_max: int) -> CaoResult:
    """Cao's E1/E2 statistics for d = 1 .. d_max and the dimension they imply.

    The chosen dimension is the smallest d with ``|E1(d+1)/E1(d) - 1| <= 0.05``.
    If every E2(d) stays within 0.15 of 1 the series is flagged stochastic and
    ``d_max`` is returned; the same fallback applies when E1 never saturates.
    """
    x = np.asarray(series, dtype=float)
    if d_max < 1:
        raise ValueError("d_max must be >= 1")
    if x.shape[0] < 10 * d_max:
        raise SeriesTooShort(
            f"Cao's method with d_max={d_max} needs T >= {10 * d_max}, got T={x.shape[0]}"
        )
    e, e_star = zip(*(_cao_e(x, d) for d in range(1, d_max + 2)))
    e = np.array(e)
    e_star = np.array(e_star)
    e1 = e[1:] / e[:-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        e2 = e_star[1:] / e_star[:-1]
    stochastic = bool(np.all(np.abs(e2 - 1) <= CAO_STOCHASTIC_BAND))
    dim = d_max
    if not stochastic:
        for d in range(1, d_max):
            if abs(e1[d] / e1[d - 1] - 1) <= CAO_SATURATION:
                dim = d
                break
    return CaoResult(dim, e1, e2, stochastic)


def cao_dimension(series, d_max: int = 10) -> int:
    return cao_statistics(series, d_max).dimension


def select_lag(ensemble: TimeSeriesEnsemble, config: RunConfig) -> int:
    """Resolve ``config.d``; ``"auto"`` takes the largest per-series Cao dimension."""
    if config.d != "auto":
        return int(config.d)
    return max(cao_dimension(row, config.d_max) for row in ensemble.data)
