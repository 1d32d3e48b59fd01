"""k-means codebooks and normalized Gaussian (GRBF) activations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .embedding import StateSpace
from .errors import BadIndex, DimensionMismatch, TooFewPoints

MAX_ITER = 300


@dataclass(frozen=True)
class GrbfCodebook:
    centers: np.ndarray  # D x c, one center per column
    sigma: float

    @property
    def c(self) -> int:
        return self.centers.shape[1]

    @classmethod
    def from_centers(cls, centers: np.ndarray) -> "GrbfCodebook":
        return cls(centers, kernel_width(centers))


def _objective(x, centers, labels) -> float:
    return float(np.sum((x - centers[labels]) ** 2))


def _plus_plus(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = x.shape[0]
    chosen = [int(rng.integers(m))]
    d2 = cdist(x, x[chosen], "sqeuclidean")[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(m, p=d2 / total))
        else:
            nxt = int(rng.integers(m))
        chosen.append(nxt)
        d2 = np.minimum(d2, cdist(x, x[nxt : nxt + 1], "sqeuclidean")[:, 0])
    return x[chosen].copy()


def kmeans(points: np.ndarray, k: int, seed=0) -> np.ndarray:
    """Lloyd's k-means from a k-means++ start; returns the D x k centers.

    ``seed`` may be an integer or a ``numpy.random.Generator``. Empty clusters
    are moved onto the point farthest from its current center.
    """
    x = np.asarray(points, dtype=float).T
    m = x.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if m < k:
        raise TooFewPoints(f"cannot form {k} clusters from {m} points")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)

    centers = _plus_plus(x, k, rng)
    labels = None
    prev_obj = np.inf
    for _ in range(MAX_ITER):
        d2 = cdist(x, centers, "sqeuclidean")
        new_labels = np.argmin(d2, axis=1)
        counts = np.bincount(new_labels, minlength=k)
        if np.any(counts == 0):
            own = d2[np.arange(m), new_labels]
            taken = set()
            for j in np.flatnonzero(counts == 0):
                order = np.argsort(-own, kind="stable")
                far = next(int(i) for i in order if int(i) not in taken)
                taken.add(far)
                centers[j] = x[far]
                own[far] = 0.0
            d2 = cdist(x, centers, "sqeuclidean")
            new_labels = np.argmin(d2, axis=1)
            counts = np.bincount(new_labels, minlength=k)
        obj = float(d2[np.arange(m), new_labels].sum())
        assert obj <= prev_obj * (1 + 1e-9) + 1e-12, "k-means objective increased"
        prev_obj = obj
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            if counts[j]:
                centers[j] = x[labels == j].mean(axis=0)
    return centers.T.copy()


def kernel_width(centers: np.ndarray) -> float:
    """Mean Euclidean distance over all center pairs (1.0 for a single center)."""
    centers = np.asarray(centers, dtype=float)
    if centers.shape[1] < 2:
        return 1.0
    sigma = float(np.mean(pdist(centers.T)))
    # coincident centers give no usable width
    return sigma if sigma > 0 else 1.0


def activations(states, codebook: GrbfCodebook) -> np.ndarray:
    """Normalized Gaussian activations, shape c x M; every column sums to one."""
    w = states.states if isinstance(states, StateSpace) else np.asarray(states, dtype=float)
    if w.shape[0] != codebook.centers.shape[0]:
        raise DimensionMismatch(
            f"states have dimension {w.shape[0]}, centers {codebook.centers.shape[0]}"
        )
    expo = -cdist(codebook.centers.T, w.T, "sqeuclidean") / codebook.sigma**2
    expo -= expo.max(axis=0, keepdims=True)
    act = np.exp(expo)
    act /= act.sum(axis=0, keepdims=True)
    return act


def prune_centers(codebook: GrbfCodebook, layout, exclude: int) -> GrbfCodebook:
    """Drop the coordinate block belonging to series ``exclude`` and recompute the width.

    ``layout`` is the ``source_dims`` of the state space the centers live in.
    """
    layout = layout.source_dims if isinstance(layout, StateSpace) else layout
    drop = [k for k, (s, _) in enumerate(layout) if s == exclude]
    if not drop:
        raise BadIndex(f"series {exclude} does not occur in the center layout")
    keep = np.setdiff1d(np.arange(len(layout)), drop)
    return GrbfCodebook.from_centers(codebook.centers[keep])


def fit_codebook(states, k: int, rng) -> GrbfCodebook:
    w = states.states if isinstance(states, StateSpace) else states
    return GrbfCodebook.from_centers(kmeans(w, k, rng))
