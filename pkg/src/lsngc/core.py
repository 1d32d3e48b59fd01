"""Shared domain types, seed derivation and file I/O."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import ConstantSeries, IoError, ParseError, RaggedRows, TooShort

# z-scores are snapped onto this dyadic grid; see normalize()
Z_GRID = 2.0 ** -30
MIN_STD = 1e-12


def _frozen(a, dtype=float) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class TimeSeriesEnsemble:
    """N series x T time points, one series per row."""

    data: np.ndarray
    series_names: tuple = ()
    normalized: bool = False

    def __post_init__(self):
        data = _frozen(self.data)
        if data.ndim != 2:
            raise ValueError(f"ensemble data must be 2-D, got shape {data.shape}")
        n, t = data.shape
        if n < 2 or t < 2:
            raise ValueError(f"need N >= 2 and T >= 2, got N={n}, T={t}")
        if not np.all(np.isfinite(data)):
            raise ValueError("ensemble contains non-finite values")
        names = tuple(str(s) for s in self.series_names) or tuple(f"x{i + 1}" for i in range(n))
        if len(names) != n:
            raise ValueError(f"{len(names)} series names for {n} series")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "series_names", names)

    @property
    def n_series(self) -> int:
        return self.data.shape[0]

    @property
    def n_times(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AdjacencyMatrix:
    """Ground-truth network; ``edges[s, r] == 1`` means s -> r."""

    edges: np.ndarray
    directed: bool = True

    def __post_init__(self):
        edges = _frozen(self.edges, dtype=np.int8)
        if edges.ndim != 2 or edges.shape[0] != edges.shape[1]:
            raise ValueError(f"adjacency must be square, got shape {edges.shape}")
        if not np.isin(edges, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.any(np.diag(edges)):
            raise ValueError("adjacency diagonal must be zero")
        if not self.directed and not np.array_equal(edges, edges.T):
            raise ValueError("undirected adjacency must be symmetric")
        object.__setattr__(self, "edges", edges)

    @property
    def n_edges(self) -> int:
        return int(self.edges.sum())


@dataclass(frozen=True)
class AffinityMatrix:
    """Directed lsNGC scores. Diagonal entries of f_stat/p_value are NaN and never used."""

    f_stat: np.ndarray
    p_value: np.ndarray
    significant: np.ndarray
    series_names: tuple = ()
    diagnostics: dict = field(default_factory=dict)

    diagonal_policy = "undefined: NaN in memory, null on disk, excluded from every computation"

    def __post_init__(self):
        f = _frozen(self.f_stat)
        p = _frozen(self.p_value)
        sig = _frozen(self.significant, dtype=bool)
        n = f.shape[0]
        if f.shape != (n, n) or p.shape != (n, n) or sig.shape != (n, n):
            raise ValueError("f_stat, p_value and significant must be equal N x N matrices")
        off = ~np.eye(n, dtype=bool)
        if np.any(f[off] < 0) or np.any(~np.isfinite(f[off])):
            raise ValueError("off-diagonal F statistics must be finite and non-negative")
        if np.any((p[off] < 0) | (p[off] > 1)):
            raise ValueError("p-values must lie in [0, 1]")
        if np.any(np.diag(sig)):
            raise ValueError("significance mask diagonal must be empty")
        names = tuple(self.series_names) or tuple(f"x{i + 1}" for i in range(n))
        object.__setattr__(self, "f_stat", f)
        object.__setattr__(self, "p_value", p)
        object.__setattr__(self, "significant", sig)
        object.__setattr__(self, "series_names", names)

    @property
    def n_series(self) -> int:
        return self.f_stat.shape[0]


Lag = Union[int, str]


@dataclass(frozen=True)
class RunConfig:
    """Analysis parameters.

    ``d`` is either an explicit embedding dimension or ``"auto"`` (Cao's method,
    searched up to ``d_max``).
    """

    d: Lag = "auto"
    c_f: int = 25
    c_g: int = 5
    alpha: float = 0.05
    seed: int = 0
    epsilon_log: float = 1e-12
    d_max: int = 10

    def __post_init__(self):
        if isinstance(self.d, str):
            if self.d != "auto":
                raise ValueError(f"d must be a positive integer or 'auto', got {self.d!r}")
        elif int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if self.c_f < 1 or self.c_g < 1:
            raise ValueError("codebook sizes c_f and c_g must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not self.epsilon_log > 0:
            raise ValueError("epsilon_log must be positive")
        if self.d_max < 1:
            raise ValueError("d_max must be >= 1")

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "c_f": self.c_f,
            "c_g": self.c_g,
            "alpha": self.alpha,
            "seed": self.seed,
            "epsilon_log": self.epsilon_log,
            "d_max": self.d_max,
        }


def derive_rng(seed: int, module: str, purpose: str, index: object = 0) -> np.random.Generator:
    """Independent generator for one (module, purpose, index) stream.

    The stream depends only on the labels, never on call order, so parallel
    workers and re-runs see the same numbers.
    """
    label = f"{module}/{purpose}/{index}".encode()
    words = np.frombuffer(hashlib.blake2b(label, digest_size=16).digest(), dtype="<u4")
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(w) for w in words))
    return np.random.Generator(np.random.PCG64(ss))


def normalize(ensemble: TimeSeriesEnsemble) -> TimeSeriesEnsemble:
    """Z-score every series (sample standard deviation, divisor T-1).

    The z-scores are rounded onto a 2**-30 grid. Rescaling a series by a*x + b
    perturbs the unrounded z-scores only at the last-ulp level, so after
    rounding the downstream pipeline sees identical bits. The rounding moves
    the mean and standard deviation by less than 5e-10.
    """
    x = ensemble.data
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, ddof=1, keepdims=True)
    bad = np.flatnonzero(std[:, 0] < MIN_STD)
    if bad.size:
        names = [ensemble.series_names[i] for i in bad]
        raise ConstantSeries(f"series with (near) zero variance cannot be normalized: {names}")
    z = (x - mean) / std
    z = np.rint(z / Z_GRID) * Z_GRID
    return TimeSeriesEnsemble(z, ensemble.series_names, normalized=True)


# --- file I/O ---------------------------------------------------------------


def read_ensemble(path) -> TimeSeriesEnsemble:
    """Read a CSV with a header of series names and one time point per row."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if not rows:
        raise TooShort(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise RaggedRows(f"{path}:{lineno}: expected {len(header)} columns, found {len(row)}")
        try:
            parsed = [float(cell) for cell in row]
        except ValueError as exc:
            raise ParseError(f"{path}:{lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in parsed):
            raise ParseError(f"{path}:{lineno}: non-finite value")
        values.append(parsed)
    if len(values) < 2:
        raise TooShort(f"{path}: need at least 2 time points, found {len(values)}")
    if len(header) < 2:
        raise TooShort(f"{path}: need at least 2 series, found {len(header)}")
    return TimeSeriesEnsemble(np.array(values).T, header)


def write_ensemble(ensemble: TimeSeriesEnsemble, path) -> None:
    rows = [list(ensemble.series_names)]
    rows += [[repr(float(v)) for v in col] for col in ensemble.data.T]
    _write_rows(rows, path)


def _write_rows(rows, path) -> None:
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            csv.writer(fh, lineterminator="\n").writerows(rows)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _write_json(doc, path) -> None:
    path = Path(path)
    try:
        path.write_text(json.dumps(doc, indent=1, allow_nan=False) + "\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def _read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from None


def matrix_to_json(m: np.ndarray, kind=float) -> list:
    """Row-major nested lists with the diagonal written as null."""
    n = m.shape[0]
    return [[None if i == j else kind(m[i, j]) for j in range(n)] for i in range(n)]


def matrix_from_json(rows, fill=np.nan, dtype=float) -> np.ndarray:
    out = np.array([[fill if v is None else v for v in row] for row in rows], dtype=dtype)
    if out.ndim != 2 or out.shape[0] != out.shape[1]:
        raise ParseError(f"expected a square matrix, got shape {out.shape}")
    return out


def write_matrix_csv(m: np.ndarray, names, path) -> None:
    n = m.shape[0]
    rows = [["source"] + list(names)]
    for i in range(n):
        rows.append([names[i]] + ["" if i == j else repr(float(m[i, j])) for j in range(n)])
    _write_rows(rows, path)


def write_affinity(matrix: AffinityMatrix, path) -> None:
    """Write ``path`` as JSON and the F statistics alongside it as CSV.

    JSON schema::

        {"method": "lsngc", "series_names": [...],
         "f_stat": [[null, F01, ...], ...],     # row = source, column = target
         "p_value": [[null, p01, ...], ...],
         "significant": [[null, 0 | 1, ...], ...],
         "diagonal": "undefined", "diagnostics": {...}}
    """
    path = Path(path)
    doc = {
        "method": "lsngc",
        "series_names": list(matrix.series_names),
        "f_stat": matrix_to_json(matrix.f_stat),
        "p_value": matrix_to_json(matrix.p_value),
        "significant": matrix_to_json(matrix.significant, kind=int),
        "diagonal": "undefined",
        "diagnostics": matrix.diagnostics,
    }
    _write_json(doc, path)
    write_matrix_csv(matrix.f_stat, matrix.series_names, path.with_suffix(".csv"))


def read_affinity(path) -> AffinityMatrix:
    doc = _read_json(path)
    try:
        return AffinityMatrix(
            f_stat=matrix_from_json(doc["f_stat"]),
            p_value=matrix_from_json(doc["p_value"]),
            significant=matrix_from_json(doc["significant"], fill=0, dtype=int).astype(bool),
            series_names=tuple(doc.get("series_names", ())),
            diagnostics=doc.get("diagnostics", {}),
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing key {exc}") from None


def write_adjacency(adj: AdjacencyMatrix, names: Sequence[str], path) -> None:
    rows = [["source"] + list(names)]
    rows += [[names[i]] + [str(int(v)) for v in adj.edges[i]] for i in range(len(names))]
    _write_rows(rows, path)


def read_adjacency(path) -> AdjacencyMatrix:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 3:
        raise TooShort(f"{path}: adjacency needs a header and at least 2 rows")
    try:
        edges = np.array([[int(v) for v in r[1:]] for r in rows[1:]])
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None
    return AdjacencyMatrix(edges, directed=not np.array_equal(edges, edges.T))
