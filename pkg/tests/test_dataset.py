"""Parsing, occupancy accounting, and exact statistics."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from griddp.dataset import (
    Dataset,
    OccupancyArray,
    grid_stats,
    parse_dataset,
    parse_occupancy,
    population_stats,
)
from griddp.errors import (
    DuplicateEntry,
    EmptyDataset,
    EmptyValues,
    MalformedRow,
    NonPositiveCount,
    UnknownGrid,
    ValueOutOfRange,
)


def test_parse_dataset_round_trip(tiny_dataset_text):
    ds = parse_dataset(tiny_dataset_text, 5.0)
    assert ds.grids() == ["g1", "g2"]
    assert ds.users_in("g1") == ["u1", "u2"]
    assert ds.values("g1", "u1") == (1.0, 2.0)
    assert ds.grid_values("g2") == [0.5, 4.0]


def test_parse_dataset_accumulates_repeated_pairs(tiny_dataset_text):
    ds = parse_dataset(tiny_dataset_text, 5.0)
    occ = ds.occupancy()
    assert occ.count("g1", "u1") == 2
    assert occ.count("g2", "u3") == 1


def test_parse_dataset_rejects_out_of_range(tiny_dataset_text):
    with pytest.raises(ValueOutOfRange):
        parse_dataset(tiny_dataset_text, 2.0)
    with pytest.raises(ValueOutOfRange):
        parse_dataset("user,grid,value\nu1,g1,-0.1\n", 2.0)


def test_parse_rejects_malformed_rows():
    with pytest.raises(MalformedRow):
        parse_dataset("user,grid,value\nu1,g1\n", 1.0)
    with pytest.raises(MalformedRow):
        parse_dataset("user,grid,value\nu1,g1,notanumber\n", 1.0)
    with pytest.raises(MalformedRow):
        parse_dataset("wrong,header,here\nu1,g1,0.5\n", 1.0)
    with pytest.raises(MalformedRow):
        parse_occupancy("user,grid,count\nu1,,3\n")


def test_parse_empty_inputs():
    with pytest.raises(EmptyDataset):
        parse_dataset("user,grid,value\n", 1.0)
    with pytest.raises(EmptyDataset):
        parse_occupancy("user,grid,count\n\n\n")


def test_parse_occupancy_validation():
    occ = parse_occupancy("user,grid,count\nu1,g1,2\nu2,g1,3\nu1,g2,1\n")
    assert occ.count("g1", "u2") == 3
    with pytest.raises(DuplicateEntry):
        parse_occupancy("user,grid,count\nu1,g1,2\nu1,g1,3\n")
    with pytest.raises(NonPositiveCount):
        parse_occupancy("user,grid,count\nu1,g1,0\n")


def test_occupancy_accessors():
    occ = OccupancyArray({"g1": {"u1": 2, "u2": 2}, "g2": {"u1": 1, "u3": 3}})
    assert occ.grids() == ["g1", "g2"]
    assert occ.users() == ["u1", "u2", "u3"]
    assert occ.users_in("g2") == ["u1", "u3"]
    assert occ.grids_of("u1") == ["g1", "g2"]
    assert occ.counts_in("g2") == [1, 3]
    assert occ.total("g1") == 4
    assert occ.m_star("g2") == 3
    assert occ.max_grids_per_user() == 2
    with pytest.raises(UnknownGrid):
        occ.row("nope")


def test_population_stats_matches_numpy():
    values = [0.3, 1.7, 2.2, 4.9, 0.0]
    n, mean, var = population_stats(values)
    assert n == 5
    assert math.isclose(mean, float(np.mean(values)), rel_tol=1e-12)
    # population variance: divisor n, not n-1
    assert math.isclose(var, float(np.var(values)), rel_tol=1e-12)
    with pytest.raises(EmptyValues):
        population_stats([])


def test_grid_stats_example():
    ds = Dataset({"g": {"u1": [0.0, 1.0, 2.0], "u2": [3.0, 4.0]}}, 4.0)
    st_ = grid_stats(ds, "g")
    assert st_.n == 5
    assert st_.mean == 2.0
    assert st_.variance == 2.0


def test_clipped_values_first_gamma_rule():
    ds = Dataset({"g": {"u1": [5.0, 1.0, 3.0], "u2": [2.0]}}, 5.0)
    kept = ds.clipped_values("g", {"u1": 2, "u2": 0})
    assert kept == [5.0, 1.0]


def test_dataset_validation():
    with pytest.raises(ValueOutOfRange):
        Dataset({"g": {"u": [2.0]}}, 1.0)
    with pytest.raises(EmptyDataset):
        Dataset({}, 1.0)
    with pytest.raises(UnknownGrid):
        Dataset({"g": {"u": [0.5]}}, 1.0).values("h", "u")


@given(
    st.dictionaries(
        st.sampled_from(["g1", "g2", "g3"]),
        st.dictionaries(
            st.sampled_from(["u1", "u2", "u3", "u4"]),
            st.lists(st.floats(min_value=0, max_value=1), min_size=1, max_size=4),
            min_size=1,
            max_size=4,
        ),
        min_size=1,
        max_size=3,
    )
)
def test_occupancy_matches_sample_counts(samples):
    ds = Dataset(samples, 1.0)
    occ = ds.occupancy()
    for g in ds.grids():
        for u in ds.users_in(g):
            assert occ.count(g, u) == len(ds.values(g, u))
