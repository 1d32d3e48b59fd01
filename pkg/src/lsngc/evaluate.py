"""Network-recovery scoring and the repeated-simulation benchmark harness."""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

from .baselines import cross_map_score, lm_significance
from .causality import log_transform, lsngc_affinity
from .core import AdjacencyMatrix, RunConfig
from .embedding import select_lag
from .errors import DegenerateTruth, DivergedTrajectory
from .simulate import SimulationSpec, generate, with_seed

log = logging.getLogger(__name__)

METHODS = ("lsngc", "lm")
METRICS = ("auc", "sensitivity", "specificity", "combined")
MAX_REDRAWS = 10

# externally reported reference medians; annotations only, never asserted
REFERENCE_MEDIANS = {
    "five_linear": {"lsngc_auc": 1.0, "lm_auc": 0.87, "kgc_auc": 0.82},
    "five_nonlinear": {"lm_auc": 0.62, "lsngc_auc_worst_length": "0.82 / 0.84 (two reported values)"},
    "zachary_undirected": {"kgc_auc": "0.52 / 0.51 (two reported values)"},
    "zachary_directed": {"kgc_auc": "0.52 / 0.51 (two reported values)"},
}


@dataclass(frozen=True)
class RecoveryScore:
    auc: float
    sensitivity: float
    specificity: float
    combined: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "combined", (self.sensitivity + self.specificity) / 2)


def _labels(scores, truth):
    scores = np.asarray(scores, dtype=float)
    edges = truth.edges if isinstance(truth, AdjacencyMatrix) else np.asarray(truth)
    if scores.shape != edges.shape:
        raise ValueError(f"score shape {scores.shape} does not match truth shape {edges.shape}")
    off = ~np.eye(edges.shape[0], dtype=bool)
    labels = edges[off].astype(bool)
    if labels.all() or not labels.any():
        raise DegenerateTruth("truth needs at least one edge and one non-edge off the diagonal")
    return scores[off], labels


def roc_auc(scores, truth) -> float:
    """Mann-Whitney AUC over the off-diagonal entries; ties count one half."""
    values, labels = _labels(scores, truth)
    ranks = rankdata(values)
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def sens_spec(mask, truth) -> tuple[float, float]:
    predicted, labels = _labels(np.asarray(mask, dtype=float), truth)
    predicted = predicted.astype(bool)
    tp = np.sum(predicted & labels)
    tn = np.sum(~predicted & ~labels)
    return float(tp / labels.sum()), float(tn / (~labels).sum())


def _quantile(v: np.ndarray, q: float) -> float:
    # linear interpolation between order statistics at h = (n - 1) q
    h = (v.size - 1) * q
    lo = int(np.floor(h))
    hi = min(lo + 1, v.size - 1)
    return float(v[lo] + (h - lo) * (v[hi] - v[lo]))


def boxplot_stats(values: Sequence[float]) -> dict:
    """Median, quartiles (linear interpolation) and 1.5 IQR whiskers."""
    v = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = (_quantile(v, q) for q in (0.25, 0.5, 0.75))
    iqr = q3 - q1
    inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
    return {
        "median": float(med),
        "q1": float(q1),
        "q3": float(q3),
        "whisker_low": float(inside.min()),
        "whisker_high": float(inside.max()),
    }


@dataclass
class BenchmarkReport:
    method: str
    network: str
    T: int
    per_run: list
    seeds: list
    redraws: list = field(default_factory=list)

    def stats(self) -> dict:
        return {m: boxplot_stats([getattr(s, m) for s in self.per_run]) for m in METRICS}

    def median(self, metric: str = "auc") -> float:
        return self.stats()[metric]["median"]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "network": self.network,
            "T": self.T,
            "runs": len(self.per_run),
            "seeds": self.seeds,
            "redraws": self.redraws,
            "stats": self.stats(),
            "per_run": [asdict(s) for s in self.per_run],
            "reference_medians": REFERENCE_MEDIANS.get(self.network, {}),
        }

    def csv_rows(self) -> list:
        return [
            [self.network, self.method, self.T, i, s.auc, s.sensitivity, s.specificity]
            for i, s in enumerate(self.per_run)
        ]


def analysis_config(config: RunConfig, seed: int, T: int) -> RunConfig:
    """Per-run config: the run seed, and Cao's search capped at T // 10 for short series."""
    cfg = replace(config, seed=seed)
    if cfg.d == "auto" and T < 10 * cfg.d_max:
        cfg = replace(cfg, d_max=max(1, T // 10))
    return cfg


def score_run(ensemble, truth, method: str, config: RunConfig, n_surrogates: int = 100) -> RecoveryScore:
    if method == "lsngc":
        aff = lsngc_affinity(ensemble, config)
        auc = roc_auc(log_transform(aff, config.epsilon_log), truth)
        sens, spec = sens_spec(aff.significant, truth)
    elif method == "lm":
        d = select_lag(ensemble, config)
        cm = cross_map_score(ensemble, d)
        auc = roc_auc(cm.score, truth)
        mask = lm_significance(ensemble, cm, n_surrogates, config.alpha, config.seed)
        sens, spec = sens_spec(mask, truth)
    else:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    return RecoveryScore(auc, sens, spec)


def _job(args):
    spec, method, config, n_surrogates = args
    ensemble, truth = generate(spec)
    return score_run(ensemble, truth, method, config, n_surrogates)


def _draw_specs(network: SimulationSpec, runs: int, T: int):
    """Simulation specs for seeds seed+0 .. seed+runs-1, replacing diverged ones by reserve seeds."""
    specs, redraws = [], []
    reserve = network.seed + runs
    for i in range(runs):
        spec = with_seed(network, network.seed + i, T)
        while True:
            try:
                generate(spec)
                break
            except DivergedTrajectory as exc:
                if len(redraws) >= MAX_REDRAWS:
                    raise DivergedTrajectory(
                        f"more than {MAX_REDRAWS} diverged runs for {network.model} at T={T}", seed=exc.seed
                    ) from exc
                log.warning("run %d (seed %d) diverged; redrawing with seed %d", i, spec.seed, reserve)
                redraws.append({"run": i, "failed_seed": spec.seed, "seed": reserve})
                spec = with_seed(network, reserve, T)
                reserve += 1
        specs.append(spec)
    return specs, redraws


def run_benchmark(
    network: SimulationSpec,
    method: str,
    runs: int,
    lengths: Sequence[int],
    config: RunConfig = RunConfig(),
    workers: int = 1,
    n_surrogates: int = 100,
) -> list:
    """Simulate ``runs`` realisations per length, analyse each, and aggregate."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
    reports = []
    for T in lengths:
        specs, redraws = _draw_specs(network, runs, T)
        jobs = [(s, method, analysis_config(config, s.seed, T), n_surrogates) for s in specs]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                scores = list(pool.map(_job, jobs))
        else:
            scores = [_job(j) for j in jobs]
        reports.append(BenchmarkReport(method, network.model, T, scores, [s.seed for s in specs], redraws))
    return reports
