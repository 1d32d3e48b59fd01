"""Bivariate local-model cross-mapping and its IAAFT surrogate significance test."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .causality import fdr_mask
from .core import TimeSeriesEnsemble, derive_rng
from .errors import DegenerateNeighborhood, SeriesTooShort


@dataclass(frozen=True)
class CrossMapScore:
    score: np.ndarray  # (s, r): correlation of x_s recovered from the states of x_r
    neighbor_count: int
    embedding_dim: int


@dataclass(frozen=True)
class SurrogateNull:
    samples: np.ndarray

    @property
    def count(self) -> int:
        return self.samples.size


def _neighbor_weights(series: np.ndarray, d: int, k: int):
    """Neighbour indices and simplex weights for every delay state of ``series``.

    States are indexed by their last time point; neighbours within ``d``
    samples of the query (itself included) are excluded.
    """
    t = series.shape[0]
    m = t - d + 1
    if m < k + 2 * d + 1:
        raise SeriesTooShort(
            f"T={t} leaves too few states for k={k} neighbours with a Theiler window of {d}"
        )
    states = np.lib.stride_tricks.sliding_window_view(series, d)
    kq = min(m, k + 2 * d + 1)
    dist, idx = cKDTree(states).query(states, k=kq)
    dist = dist.reshape(m, kq)
    idx = idx.reshape(m, kq)
    allowed = np.abs(idx - np.arange(m)[:, None]) > d
    # stable argsort keeps distance order among allowed entries
    pick = np.argsort(~allowed, axis=1, kind="stable")[:, :k]
    rows = np.arange(m)[:, None]
    nd = dist[rows, pick]
    ni = idx[rows, pick]
    nearest = nd[:, :1]
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(nearest > 0, np.exp(-nd / nearest), (nd == 0).astype(float))
    if np.any(nd[:, -1] == 0):
        warnings.warn(
            "all neighbours at distance zero; using uniform weights", DegenerateNeighborhood, stacklevel=3
        )
    return ni + (d - 1), w / w.sum(axis=1, keepdims=True)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    return float(np.dot(a, b) / den) if den > 0 else 0.0


def _cross_map(sources: np.ndarray, target: np.ndarray, d: int, k: int) -> np.ndarray:
    """Correlation between each source row and its estimate from ``target``'s states."""
    times, w = _neighbor_weights(target, d, k)
    truth = sources[:, d - 1 :]
    est = np.einsum("smk,mk->sm", sources[:, times], w)
    return np.array([_pearson(e, x) for e, x in zip(est, truth)])


def cross_map_score(ensemble: TimeSeriesEnsemble, d: int, k: int | None = None) -> CrossMapScore:
    """Local-model cross-mapping score for every ordered pair.

    Entry (s, r) measures how well the delay states of x_r recover x_s. Good
    recovery of x_s from x_r means x_s influences x_r.
    """
    k = d + 1 if k is None else k
    data = ensemble.data
    n, t = data.shape
    if t <= d + k:
        raise SeriesTooShort(f"need T > d + k = {d + k}, got T={t}")
    score = np.full((n, n), np.nan)
    for r in range(n):
        row = _cross_map(data, data[r], d, k)
        for s in range(n):
            if s != r:
                score[s, r] = row[s]
    return CrossMapScore(score, k, d)


def _spectrum_error(x: np.ndarray, target_amp: np.ndarray) -> float:
    return float(np.linalg.norm(np.abs(np.fft.rfft(x)) - target_amp) / np.linalg.norm(target_amp))


def iaaft_surrogate(series, max_iter: int = 100, seed=0) -> np.ndarray:
    """Iterative amplitude-adjusted Fourier transform surrogate.

    The output is always a permutation of the input values; iteration stops
    once the Fourier-amplitude mismatch stops improving.
    """
    x = np.asarray(series, dtype=float)
    if x.shape[0] < 8:
        raise SeriesTooShort(f"IAAFT needs at least 8 samples, got {x.shape[0]}")
    if np.ptp(x) == 0:
        return x.copy()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ordered = np.sort(x)
    amp = np.abs(np.fft.rfft(x))
    best = rng.permutation(x)
    best_err = _spectrum_error(best, amp)
    current = best
    for _ in range(max_iter):
        spec = np.fft.rfft(current)
        phase = np.exp(1j * np.angle(spec))
        shaped = np.fft.irfft(amp * phase, n=x.shape[0])
        current = ordered[np.argsort(np.argsort(shaped, kind="stable"), kind="stable")]
        err = _spectrum_error(current, amp)
        if err >= best_err:
            break
        best, best_err = current, err
    return best


def surrogate_null(ensemble: TimeSeriesEnsemble, d: int, k: int, n_surrogates: int, seed: int) -> SurrogateNull:
    """Cross-map scores between IAAFT surrogates of randomly paired, distinct series."""
    data = ensemble.data
    n = data.shape[0]
    samples = np.empty(n_surrogates)
    for i in range(n_surrogates):
        rng = derive_rng(seed, "baselines", "surrogate-pair", i)
        a, b = rng.choice(n, size=2, replace=False)
        sa = iaaft_surrogate(data[a], seed=rng)
        sb = iaaft_surrogate(data[b], seed=rng)
        samples[i] = _cross_map(sa[None, :], sb, d, k)[0]
    return SurrogateNull(samples)


def empirical_pvalues(observed, null: SurrogateNull) -> np.ndarray:
    """``(1 + #{null >= observed}) / (1 + count)``, elementwise; NaN stays NaN."""
    obs = np.asarray(observed, dtype=float)
    ordered = np.sort(null.samples)
    exceed = null.count - np.searchsorted(ordered, np.nan_to_num(obs, nan=np.inf), side="left")
    p = (1.0 + exceed) / (1.0 + null.count)
    return np.where(np.isnan(obs), np.nan, p)


def lm_pvalues(ensemble: TimeSeriesEnsemble, scores: CrossMapScore, n_surrogates: int = 100, seed: int = 0) -> np.ndarray:
    if n_surrogates < 100:
        raise ValueError(f"need at least 100 surrogates for 0.01 p-value resolution, got {n_surrogates}")
    null = surrogate_null(ensemble, scores.embedding_dim, scores.neighbor_count, n_surrogates, seed)
    return empirical_pvalues(scores.score, null)


def lm_significance(
    ensemble: TimeSeriesEnsemble,
    scores: CrossMapScore,
    n_surrogates: int = 100,
    alpha: float = 0.05,
    seed: int = 0,
) -> np.ndarray:
    """FDR-thresholded significance mask from the pooled surrogate null."""
    p = lm_pvalues(ensemble, scores, n_surrogates, seed)
    return mask_from_pvalues(p, alpha)


def mask_from_pvalues(p: np.ndarray, alpha: float) -> np.ndarray:
    n = p.shape[0]
    off = ~np.eye(n, dtype=bool)
    mask = np.zeros((n, n), dtype=bool)
    # an edge whose score never beats a null sample (p == 1) carries no evidence
    mask[off] = fdr_mask(p[off], alpha) & (p[off] < 1)
    return mask
