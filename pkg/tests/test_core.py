import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from lsngc.core import (
    AdjacencyMatrix,
    AffinityMatrix,
    RunConfig,
    TimeSeriesEnsemble,
    derive_rng,
    normalize,
    read_affinity,
    read_ensemble,
    write_affinity,
    write_ensemble,
)
from lsngc.errors import ConstantSeries, IoError, ParseError, RaggedRows, TooShort


def test_normalize_three_point_row():
    ens = TimeSeriesEnsemble(np.array([[1.0, 2.0, 3.0], [0.0, 5.0, 1.0]]))
    out = normalize(ens)
    np.testing.assert_allclose(out.data[0], [-1.0, 0.0, 1.0], atol=1e-9)
    assert out.normalized


def test_normalize_constant_row_rejected():
    ens = TimeSeriesEnsemble(np.array([[5.0, 5.0, 5.0], [1.0, 2.0, 4.0]]))
    with pytest.raises(ConstantSeries):
        normalize(ens)


finite_rows = arrays(
    np.float64,
    st.tuples(st.integers(2, 4), st.integers(3, 40)),
    elements=st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False),
)


@settings(max_examples=200, deadline=None)
@given(finite_rows)
def test_normalize_moments_and_idempotence(data):
    if np.any(data.std(axis=1, ddof=1) < 1e-3):
        return
    z = normalize(TimeSeriesEnsemble(data))
    np.testing.assert_allclose(z.data.mean(axis=1), 0.0, atol=1e-8)
    np.testing.assert_allclose(z.data.std(axis=1, ddof=1), 1.0, atol=1e-8)
    np.testing.assert_allclose(normalize(z).data, z.data, atol=1e-9)


@settings(max_examples=100, deadline=None)
@given(finite_rows, st.floats(0.01, 100), st.floats(-100, 100))
def test_normalize_removes_positive_affine_maps(data, a, b):
    if np.any(data.std(axis=1, ddof=1) < 1e-3):
        return
    z1 = normalize(TimeSeriesEnsemble(data)).data
    z2 = normalize(TimeSeriesEnsemble(a * data + b)).data
    np.testing.assert_allclose(z1, z2, atol=1e-8)


def test_ensemble_invariants():
    with pytest.raises(ValueError):
        TimeSeriesEnsemble(np.ones((1, 5)))
    with pytest.raises(ValueError):
        TimeSeriesEnsemble(np.array([[1.0, np.nan], [1.0, 2.0]]))
    ens = TimeSeriesEnsemble(np.zeros((3, 4)))
    assert ens.series_names == ("x1", "x2", "x3")
    with pytest.raises(ValueError):
        ens.data[0, 0] = 1.0


def test_adjacency_invariants():
    with pytest.raises(ValueError):
        AdjacencyMatrix(np.eye(2))
    with pytest.raises(ValueError):
        AdjacencyMatrix(np.array([[0, 1], [0, 0]]), directed=False)
    assert AdjacencyMatrix(np.array([[0, 1], [1, 0]]), directed=False).n_edges == 2


def test_run_config_validation():
    for bad in ({"c_f": 0}, {"c_g": 0}, {"alpha": 0.0}, {"alpha": 1.0}, {"d": 0}, {"d": "fixed"}):
        with pytest.raises(ValueError):
            RunConfig(**bad)


def test_derive_rng_is_label_keyed():
    a = derive_rng(3, "grbf", "x", 1).random(4)
    assert np.array_equal(a, derive_rng(3, "grbf", "x", 1).random(4))
    assert not np.array_equal(a, derive_rng(3, "grbf", "x", 2).random(4))
    assert not np.array_equal(a, derive_rng(3, "simulate", "x", 1).random(4))
    assert not np.array_equal(a, derive_rng(4, "grbf", "x", 1).random(4))


def test_read_ensemble_shape(tmp_path):
    rng = np.random.default_rng(0)
    ens = TimeSeriesEnsemble(rng.standard_normal((3, 500)), ["a", "b", "c"])
    path = tmp_path / "e.csv"
    write_ensemble(ens, path)
    back = read_ensemble(path)
    assert (back.n_series, back.n_times) == (3, 500)
    assert back.series_names == ("a", "b", "c")
    assert not back.normalized
    assert np.array_equal(back.data, ens.data)


def test_read_ensemble_errors(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("a,b\n")
    with pytest.raises(TooShort):
        read_ensemble(p)
    p.write_text("a,b\n1,2\n3,oops\n4,5\n")
    with pytest.raises(ParseError, match=":3:"):
        read_ensemble(p)
    p.write_text("a,b\n1,2\n3\n")
    with pytest.raises(RaggedRows):
        read_ensemble(p)
    with pytest.raises(IoError):
        read_ensemble(tmp_path / "missing.csv")


def _affinity():
    f = np.array([[np.nan, 3.25], [0.125, np.nan]])
    p = np.array([[np.nan, 0.01], [0.7, np.nan]])
    sig = np.array([[False, True], [False, False]])
    return AffinityMatrix(f, p, sig, ("x1", "x2"), {"d": 2})


def test_write_affinity_schema_and_round_trip(tmp_path):
    aff = _affinity()
    path = tmp_path / "aff.json"
    write_affinity(aff, path)
    doc = json.loads(path.read_text())
    for key in ("f_stat", "p_value", "significant"):
        assert doc[key][0][0] is None and doc[key][1][1] is None
    assert (tmp_path / "aff.csv").exists()
    back = read_affinity(path)
    np.testing.assert_array_equal(back.f_stat, aff.f_stat)
    np.testing.assert_array_equal(back.p_value, aff.p_value)
    np.testing.assert_array_equal(back.significant, aff.significant)


def test_write_affinity_unwritable(tmp_path):
    with pytest.raises(IoError):
        write_affinity(_affinity(), tmp_path / "no" / "such" / "dir.json")


def test_affinity_invariants():
    with pytest.raises(ValueError):
        AffinityMatrix(np.array([[np.nan, -1.0], [1.0, np.nan]]), np.full((2, 2), 0.5),
                       np.zeros((2, 2), bool), ("a", "b"))
    with pytest.raises(ValueError):
        AffinityMatrix(np.array([[np.nan, 1.0], [1.0, np.nan]]), np.array([[np.nan, 1.5], [0.5, np.nan]]),
                       np.zeros((2, 2), bool), ("a", "b"))
