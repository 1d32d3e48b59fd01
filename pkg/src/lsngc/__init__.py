"""Large-scale nonlinear Granger causality for short multivariate time series."""
from .core import (
    AdjacencyMatrix,
    AffinityMatrix,
    RunConfig,
    TimeSeriesEnsemble,
    normalize,
    read_affinity,
    read_ensemble,
    write_affinity,
)
from .causality import lsngc_affinity, log_transform
from .baselines import cross_map_score, lm_significance
from .simulate import SimulationSpec, generate
from .evaluate import roc_auc, run_benchmark, sens_spec

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "AffinityMatrix",
    "RunConfig",
    "SimulationSpec",
    "TimeSeriesEnsemble",
    "cross_map_score",
    "generate",
    "lm_significance",
    "log_transform",
    "lsngc_affinity",
    "normalize",
    "read_affinity",
    "read_ensemble",
    "roc_auc",
    "run_benchmark",
    "sens_spec",
    "write_affinity",
]
