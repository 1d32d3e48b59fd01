"""Large-scale nonlinear Granger causality: GRBF-feature regressions and F tests."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import AffinityMatrix, RunConfig, TimeSeriesEnsemble, derive_rng, normalize
from .embedding import delay_embed_ensemble, delay_embed_single, select_lag
from .errors import BadDegreesOfFreedom, DegenerateSystem, InsufficientSamples, ShapeMismatch
from .grbf import activations, fit_codebook, prune_centers

log = logging.getLogger(__name__)

RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class RegressionFit:
    weights: np.ndarray  # R x P
    rss_per_target: np.ndarray
    n_samples: int
    n_params: int
    rank: int
    ridge: bool = False


def least_squares_fit(features, targets) -> RegressionFit:
    """Multi-target least squares ``targets ~ weights @ features`` without intercept.

    Uses a column-pivoted QR factorisation. Columns whose pivot falls below the
    numerical rank threshold get zero weight; a ridge solve with
    ``lambda = 1e-8 * trace(F F^T) / P`` is the fallback if the triangular
    solve does not give finite weights.
    """
    a = np.asarray(features, dtype=float)
    b = np.asarray(targets, dtype=float)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeMismatch("features and targets must be 2-D (rows x samples)")
    p, n = a.shape
    if b.shape[1] != n:
        raise ShapeMismatch(f"features have {n} samples, targets {b.shape[1]}")
    if n <= p:
        raise ShapeMismatch(f"need more samples than features (n={n}, P={p})")

    design = a.T
    rhs = b.T
    q, r, piv = scipy.linalg.qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = max(n, p) * np.finfo(float).eps * (diag[0] if diag.size else 0.0)
    rank = int(np.sum(diag > tol))
    coef = np.zeros((p, rhs.shape[1]))
    ridge = False
    if rank > 0:
        sol = scipy.linalg.solve_triangular(r[:rank, :rank], q[:, :rank].T @ rhs)
        coef[piv[:rank]] = sol
    if not np.all(np.isfinite(coef)):
        ridge = True
        lam = RIDGE_SCALE * np.trace(design.T @ design) / p
        aug = np.vstack([design, math.sqrt(lam) * np.eye(p)])
        coef = np.linalg.lstsq(aug, np.vstack([rhs, np.zeros((p, rhs.shape[1]))]), rcond=None)[0]
        if not np.all(np.isfinite(coef)):
            raise DegenerateSystem("least-squares weights are not finite even with ridge")
    resid = rhs - design @ coef
    return RegressionFit(coef.T, np.sum(resid**2, axis=0), n, p, rank, ridge)


def f_statistic(rss_r: float, rss_u: float, p_u: int, p_r: int, n: int) -> float:
    """Nested-model F statistic; a negative numerator is clamped to zero."""
    if p_u <= p_r:
        raise BadDegreesOfFreedom(f"p_u={p_u} must exceed p_r={p_r}")
    if n <= p_u + 1:
        raise BadDegreesOfFreedom(f"n={n} must exceed p_u + 1 = {p_u + 1}")
    if not rss_u > 0:
        raise ValueError("unrestricted RSS must be positive")
    num = max(rss_r - rss_u, 0.0) / (p_u - p_r)
    return num / (rss_u / (n - p_u - 1))


def _beta_cf(a: float, b: float, x: float) -> float:
    # modified Lentz evaluation of the incomplete-beta continued fraction
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > tiny else tiny)
    h = d
    for m in range(1, 20001):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > tiny else tiny)
        c = 1.0 + aa / c
        c = c if abs(c) > tiny else tiny
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_pvalue(f: float, df1: int, df2: int) -> float:
    """Upper-tail probability P(F(df1, df2) > f)."""
    if df1 < 1 or df2 < 1:
        raise BadDegreesOfFreedom(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    if f <= 0:
        return 1.0
    if math.isinf(f):
        return 0.0
    x = df2 / (df2 + df1 * f)
    return min(1.0, max(0.0, betainc_regularized(df2 / 2.0, df1 / 2.0, x)))


def fdr_mask(p_values, alpha: float) -> np.ndarray:
    """Benjamini-Hochberg step-up procedure; returns a boolean mask."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    if m == 0:
        return np.zeros(0, dtype=bool)
    ranked = np.sort(p)
    passed = np.flatnonzero(ranked <= alpha * np.arange(1, m + 1) / m)
    if passed.size == 0:
        return np.zeros(p.shape, dtype=bool)
    return p <= ranked[passed[-1]]


def _source_row(s, data, z_space, global_cb, config, d, name):
    w = delay_embed_single(data[s], d, index=s)
    g_cb = fit_codebook(w, config.c_g, derive_rng(config.seed, "grbf", "source-codebook", name))
    g = activations(w, g_cb)
    rows = np.array([k for k, (src, _) in enumerate(z_space.source_dims) if src != s])
    f = activations(z_space.states[rows], prune_centers(global_cb, z_space.source_dims, s))
    others = np.delete(data[:, d:], s, axis=0)
    unrestricted = least_squares_fit(np.vstack([f, g]), others)
    restricted = least_squares_fit(f, others)
    return unrestricted, restricted


def lsngc_affinity(ensemble: TimeSeriesEnsemble, config: RunConfig = RunConfig(), workers: int = 1) -> AffinityMatrix:
    """Directed lsNGC affinity for every ordered pair of series.

    Entry (s, r) of the result is the F statistic for "s drives r", computed
    from one restricted and one unrestricted fit per source s over all other
    series at once. The per-source work is spread over ``workers`` threads;
    the output does not depend on the worker count.
    """
    norm = normalize(ensemble)
    n_series, t = norm.data.shape
    d = select_lag(norm, config)
    n = t - d
    p_u = config.c_f + config.c_g
    p_r = config.c_f
    if n <= p_u + 1:
        need = p_u + d + 2
        raise InsufficientSamples(
            f"T={t} is too short for c_f={config.c_f}, c_g={config.c_g}, d={d}: "
            f"need T >= {need}",
            min_length=need,
        )
    data = norm.data
    z_space = delay_embed_ensemble(norm, d)
    global_cb = fit_codebook(z_space, config.c_f, derive_rng(config.seed, "grbf", "global-codebook"))

    def job(s):
        return _source_row(s, data, z_space, global_cb, config, d, norm.series_names[s])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fits = list(pool.map(job, range(n_series)))
    else:
        fits = [job(s) for s in range(n_series)]

    df1, df2 = p_u - p_r, n - p_u - 1
    f_stat = np.full((n_series, n_series), np.nan)
    p_val = np.full((n_series, n_series), np.nan)
    clamped = 0
    ridge = 0
    for s, (unr, res) in enumerate(fits):
        targets = [r for r in range(n_series) if r != s]
        ridge += unr.ridge + res.ridge
        for k, r in enumerate(targets):
            rss_r, rss_u = res.rss_per_target[k], unr.rss_per_target[k]
            if rss_r < rss_u:
                clamped += 1
            f_stat[s, r] = f_statistic(rss_r, rss_u, p_u, p_r, n)
            p_val[s, r] = f_pvalue(f_stat[s, r], df1, df2)

    off = ~np.eye(n_series, dtype=bool)
    significant = np.zeros((n_series, n_series), dtype=bool)
    significant[off] = fdr_mask(p_val[off], config.alpha)
    if clamped:
        log.debug("%d F numerators clamped to zero", clamped)
    diagnostics = {
        "d": d,
        "n_samples": n,
        "df1": df1,
        "df2": df2,
        "clamped_numerators": clamped,
        "ridge_fits": ridge,
        "config": config.to_dict(),
    }
    return AffinityMatrix(f_stat, p_val, significant, norm.series_names, diagnostics)


def log_transform(matrix: AffinityMatrix, epsilon: float = 1e-12) -> np.ndarray:
    """Entrywise ``log(F + epsilon)``; the diagonal stays NaN."""
    with np.errstate(invalid="ignore"):
        out = np.log(matrix.f_stat + epsilon)
    np.fill_diagonal(out, np.nan)
    return out
