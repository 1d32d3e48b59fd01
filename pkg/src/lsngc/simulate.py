"""Seeded generators for the benchmark networks, each with its ground-truth adjacency."""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import AdjacencyMatrix, TimeSeriesEnsemble, derive_rng
from .errors import DivergedTrajectory

MODELS = (
    "two_logistic",
    "three_fan_out",
    "three_fan_in",
    "five_linear",
    "five_nonlinear",
    "zachary_undirected",
    "zachary_directed",
)

DIVERGENCE_BOUND = 1e6

# Zachary karate club, 1-based node labels, 78 undirected edges
ZACHARY_EDGES = (
    (1, 2), (1, 3), (1, 4), (1, 5), (1, 6), (1, 7), (1, 8), (1, 9), (1, 11), (1, 12),
    (1, 13), (1, 14), (1, 18), (1, 20), (1, 22), (1, 32), (2, 3), (2, 4), (2, 8), (2, 14),
    (2, 18), (2, 20), (2, 22), (2, 31), (3, 4), (3, 8), (3, 9), (3, 10), (3, 14), (3, 28),
    (3, 29), (3, 33), (4, 8), (4, 13), (4, 14), (5, 7), (5, 11), (6, 7), (6, 11), (6, 17),
    (7, 17), (9, 31), (9, 33), (9, 34), (10, 34), (14, 34), (15, 33), (15, 34), (16, 33), (16, 34),
    (19, 33), (19, 34), (20, 34), (21, 33), (21, 34), (23, 33), (23, 34), (24, 26), (24, 28), (24, 30),
    (24, 33), (24, 34), (25, 26), (25, 28), (25, 32), (26, 32), (27, 30), (27, 34), (28, 34), (29, 32),
    (29, 34), (30, 33), (30, 34), (31, 33), (31, 34), (32, 33), (32, 34), (33, 34),
)
ZACHARY_SHA256 = "b79d1c5d3a33d2e5dc3880f894b7fed5b918b8e89eb624e5e3959121dcfe6be3"
ZACHARY_NODES = 34

THREE_NODE_GAMMA = {
    # gamma[j][i]: x_j(t+1) = x_j(t) * (gamma_jj - sum_i gamma_ji * x_i(t))
    "fan_out": {(1, 1): 4.0, (2, 2): 3.1, (3, 3): 2.12, (2, 1): 0.21, (3, 1): -0.636},
    "fan_in": {(1, 1): 4.0, (2, 2): 3.6, (3, 3): 2.12, (3, 1): 0.636, (3, 2): -0.636},
}

FIVE_NODE_EDGES = ((1, 2), (1, 3), (1, 4), (4, 5), (5, 4))


def _check_zachary_table() -> None:
    digest = hashlib.sha256(repr(sorted(ZACHARY_EDGES)).encode()).hexdigest()
    if digest != ZACHARY_SHA256 or len(ZACHARY_EDGES) != 78:
        raise RuntimeError("embedded Zachary edge list is corrupted")


_check_zachary_table()


@dataclass(frozen=True)
class SimulationSpec:
    model: str = "two_logistic"
    T: int = 500
    burn_in: int = 50
    seed: int = 0
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.T < 10:
            raise ValueError(f"T must be >= 10, got {self.T}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")

    def param(self, name, default):
        return float(self.overrides.get(name, default))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "T": self.T,
            "burn_in": self.burn_in,
            "seed": self.seed,
            "overrides": dict(self.overrides),
        }


def _adjacency(n, edges, directed=True) -> AdjacencyMatrix:
    a = np.zeros((n, n), dtype=np.int8)
    for s, r in edges:
        a[s - 1, r - 1] = 1
    return AdjacencyMatrix(a, directed=directed)


def _guard(x, spec: SimulationSpec, step: int) -> None:
    if not np.all(np.isfinite(x)) or np.max(np.abs(x)) > DIVERGENCE_BOUND:
        raise DivergedTrajectory(
            f"{spec.model} trajectory left |x| <= {DIVERGENCE_BOUND:g} at step {step} (seed={spec.seed})",
            seed=spec.seed,
        )


def _finish(traj: np.ndarray, spec: SimulationSpec) -> TimeSeriesEnsemble:
    data = traj[:, -spec.T :]
    return TimeSeriesEnsemble(data, tuple(f"x{i + 1}" for i in range(data.shape[0])))


def _initial(spec, label, n, initial):
    if initial is not None:
        x0 = np.asarray(initial, dtype=float)
        if x0.shape != (n,):
            raise ValueError(f"initial state must have shape ({n},)")
        return x0
    return derive_rng(spec.seed, "simulate", label).uniform(0.0, 1.0, n)


def gen_two_logistic(spec: SimulationSpec, initial=None):
    """Two coupled logistic maps; x1 drives x2.

    The first stored sample is the initial state, so with ``burn_in=0`` column
    1 is the first iterate.
    """
    r1 = spec.param("r1", 3.7)
    r2 = spec.param("r2", 3.8)
    g12 = spec.param("gamma_12", 0.0)
    g21 = spec.param("gamma_21", 0.32)
    length = spec.burn_in + spec.T
    x = np.empty((2, length))
    x[:, 0] = _initial(spec, "two_logistic/initial", 2, initial)
    for t in range(length - 1):
        x1, x2 = x[0, t], x[1, t]
        x[0, t + 1] = x1 * (r1 - r1 * x1 - g12 * x2)
        x[1, t + 1] = x2 * (r2 - r2 * x2 - g21 * x1)
        _guard(x[:, t + 1], spec, t + 1)
    edges = [(s, r) for s, r, g in ((1, 2, g21), (2, 1, g12)) if g != 0]
    return _finish(x, spec), _adjacency(2, edges)


def gen_three_node(spec: SimulationSpec, variant: str = "fan_out", initial=None):
    if variant not in THREE_NODE_GAMMA:
        raise ValueError(f"variant must be 'fan_out' or 'fan_in', got {variant!r}")
    gamma = np.zeros((3, 3))
    for (j, i), v in THREE_NODE_GAMMA[variant].items():
        gamma[j - 1, i - 1] = v
    for key, v in spec.overrides.items():
        if key.startswith("gamma_") and len(key) == 8:
            gamma[int(key[6]) - 1, int(key[7]) - 1] = float(v)
    length = spec.burn_in + spec.T
    x = np.empty((3, length))
    # same stream for both variants so x1 matches for equal seeds
    x[:, 0] = _initial(spec, "three_node/initial", 3, initial)
    growth = np.diag(gamma)
    for t in range(length - 1):
        x[:, t + 1] = x[:, t] * (growth - gamma @ x[:, t])
        _guard(x[:, t + 1], spec, t + 1)
    edges = [(i + 1, j + 1) for j in range(3) for i in range(3) if i != j and gamma[j, i] != 0]
    return _finish(x, spec), _adjacency(3, edges)


def five_node_recursion(innovations: np.ndarray, nonlinear: bool, spec: Optional[SimulationSpec] = None) -> np.ndarray:
    """Run the 5-node autoregressive system driven by ``innovations`` (5 x L).

    Three zero-valued warm-up lags precede the first driven step; they are not
    part of the returned 5 x L trajectory.
    """
    w = np.asarray(innovations, dtype=float)
    r2 = math.sqrt(2.0)
    lags = 3
    x = np.zeros((5, w.shape[1] + lags))
    drive = np.square if nonlinear else (lambda v: v)
    for t in range(lags, x.shape[1]):
        x1_2 = drive(x[0, t - 2])
        x[0, t] = w[0, t - lags] + 0.95 * r2 * x[0, t - 1] - 0.9025 * x[0, t - 2]
        x[1, t] = w[1, t - lags] + 0.5 * x1_2
        x[2, t] = w[2, t - lags] - 0.4 * x[0, t - 3]
        x[3, t] = w[3, t - lags] - 0.5 * x1_2 + 0.5 * r2 * x[3, t - 1] + 0.25 * r2 * x[4, t - 1]
        x[4, t] = w[4, t - lags] - 0.5 * r2 * x[3, t - 1] + 0.5 * r2 * x[4, t - 1]
        if spec is not None:
            _guard(x[:, t], spec, t - lags)
    return x[:, lags:]


def gen_five_node(spec: SimulationSpec, variant: str = "linear", innovations=None):
    """Five-node network; each series is driven by unit-variance Gaussian innovations."""
    if variant not in ("linear", "nonlinear"):
        raise ValueError(f"variant must be 'linear' or 'nonlinear', got {variant!r}")
    length = spec.burn_in + spec.T
    if innovations is None:
        innovations = derive_rng(spec.seed, "simulate", "five_node/innovations").standard_normal((5, length))
    elif np.shape(innovations) != (5, length):
        raise ValueError(f"innovations must have shape (5, {length})")
    x = five_node_recursion(innovations, variant == "nonlinear", spec)
    return _finish(x, spec), _adjacency(5, FIVE_NODE_EDGES)


def zachary_network(variant: str, rng: Optional[np.random.Generator] = None, n_bidirectional: int = 5) -> AdjacencyMatrix:
    """Zachary topology as a directed adjacency.

    ``undirected`` keeps both directions of every edge. ``directed`` orients
    each edge by a fair coin and then adds the reverse of ``n_bidirectional``
    randomly chosen edges.
    """
    if variant == "undirected":
        edges = list(ZACHARY_EDGES) + [(v, u) for u, v in ZACHARY_EDGES]
        return _adjacency(ZACHARY_NODES, edges, directed=False)
    if variant != "directed":
        raise ValueError(f"variant must be 'undirected' or 'directed', got {variant!r}")
    flips = rng.random(len(ZACHARY_EDGES)) < 0.5
    oriented = [(v, u) if f else (u, v) for (u, v), f in zip(ZACHARY_EDGES, flips)]
    upgrade = rng.choice(len(oriented), size=n_bidirectional, replace=False)
    edges = oriented + [oriented[k][::-1] for k in sorted(upgrade)]
    return _adjacency(ZACHARY_NODES, edges)


def zachary_recursion(x0, coupling: np.ndarray, a: float, s: float, noise: np.ndarray, spec: Optional[SimulationSpec] = None) -> np.ndarray:
    """Iterate the coupled quadratic maps; ``coupling[i, j]`` is the influence of j on i."""
    length = noise.shape[1] + 1
    x = np.empty((coupling.shape[0], length))
    x[:, 0] = x0
    keep = 1.0 - coupling.sum(axis=1)
    for t in range(1, length):
        fx = 1.0 - a * x[:, t - 1] ** 2
        x[:, t] = keep * fx + coupling @ fx + s * noise[:, t - 1]
        if spec is not None:
            _guard(x[:, t], spec, t)
    return x


def gen_zachary(spec: SimulationSpec, variant: str = "undirected", initial=None, noise=None):
    a = spec.param("a", 1.8)
    s = spec.param("s", 0.01)
    c = spec.param("c", 0.025 if variant == "undirected" else 0.05)
    rng = derive_rng(spec.seed, "simulate", "zachary/network")
    truth = zachary_network(variant, rng, int(spec.overrides.get("n_bidirectional", 5)))
    coupling = c * truth.edges.T.astype(float)
    length = spec.burn_in + spec.T
    x0 = _initial(spec, "zachary/initial", ZACHARY_NODES, initial)
    if noise is None:
        noise = derive_rng(spec.seed, "simulate", "zachary/noise").standard_normal((ZACHARY_NODES, length - 1))
    x = zachary_recursion(x0, coupling, a, s, np.asarray(noise, dtype=float), spec)
    return _finish(x, spec), truth


def generate(spec: SimulationSpec):
    """Dispatch on ``spec.model``; returns ``(ensemble, truth)``."""
    if spec.model == "two_logistic":
        return gen_two_logistic(spec)
    if spec.model.startswith("three_"):
        return gen_three_node(spec, spec.model[len("three_"):])
    if spec.model.startswith("five_"):
        return gen_five_node(spec, spec.model[len("five_"):])
    return gen_zachary(spec, spec.model[len("zachary_"):])


def with_seed(spec: SimulationSpec, seed: int, T: Optional[int] = None) -> SimulationSpec:
    return replace(spec, seed=seed, T=spec.T if T is None else T)
