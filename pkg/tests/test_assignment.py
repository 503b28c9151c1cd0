import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import multinomial2_modes
from softmapper.assignment import (InvalidProbabilityError, assigned_groups, check_assignment_matrix, group_members,
                                   mode_assignment, sample_assignment)


@pytest.mark.parametrize("row,expected", [
    ([0.3, 0.2, 0.4, 0.1], [1, 0, 1, 0]),
    ([0.9, 0.05, 0.03, 0.02], [2, 0, 0, 0]),
    ([0.5, 0.5], [1, 1]),
    ([1.0], [2]),
    ([0.0, 1.0, 0.0], [0, 2, 0]),
])
def test_mode_examples(row, expected):
    assert mode_assignment([row]).tolist() == [expected]


def test_mode_boundary_takes_two_group_row():
    # half of the top probability equals the runner-up exactly
    assert mode_assignment([[0.5, 0.25, 0.25]]).tolist() == [[1, 1, 0]]
    assert mode_assignment([[0.25, 0.5, 0.25]]).tolist() == [[1, 1, 0]]


def test_mode_tie_break_uses_lowest_index():
    assert mode_assignment([[0.2, 0.4, 0.4]]).tolist() == [[0, 1, 1]]
    assert mode_assignment([[0.25, 0.25, 0.25, 0.25]]).tolist() == [[1, 1, 0, 0]]


def test_sampling_degenerate_row():
    H = sample_assignment(np.tile([1.0, 0.0, 0.0], (500, 1)), 0)
    assert np.all(H == [2, 0, 0])


def test_sampling_never_selects_zero_probability_columns():
    Q = np.tile([0.0, 0.5, 0.0, 0.5, 0.0], (5000, 1))
    H = sample_assignment(Q, 1)
    assert np.all(H[:, [0, 2, 4]] == 0)


def test_sampling_two_way_frequencies():
    n = 50_000
    H = sample_assignment(np.tile([0.5, 0.5], (n, 1)), 7)
    for pattern, p in (([1, 1], 0.5), ([2, 0], 0.25), ([0, 2], 0.25)):
        freq = np.mean(np.all(H == pattern, axis=1))
        assert abs(freq - p) <= 3 * np.sqrt(p * (1 - p) / n)


def test_sampling_deterministic_per_seed():
    Q = np.random.default_rng(0).dirichlet(np.ones(4), size=200)
    assert np.array_equal(sample_assignment(Q, 3), sample_assignment(Q, 3))
    assert np.array_equal(sample_assignment(Q, np.random.default_rng(3)), sample_assignment(Q, 3))


@pytest.mark.parametrize("Q", [
    [[0.5, 0.6]],
    [[1.2, -0.2]],
    [[np.nan, 1.0]],
])
def test_invalid_rows_name_the_row(Q):
    bad = [[0.5, 0.5]] + Q
    for fn in (mode_assignment, lambda q: sample_assignment(q, 0)):
        with pytest.raises(InvalidProbabilityError) as info:
            fn(bad)
        assert info.value.row == 1


def test_assigned_groups_examples():
    H = np.array([[2, 0, 0, 0], [1, 0, 1, 0], [0, 1, 1, 0]])
    assert assigned_groups(H, 0) == {0}
    assert assigned_groups(H, 1) == {0, 2}
    assert assigned_groups(H, 2) == {1, 2}
    with pytest.raises(IndexError):
        assigned_groups(H, 3)


def test_group_members():
    H = np.array([[2, 0], [1, 1], [0, 2]])
    assert [g.tolist() for g in group_members(H)] == [[0, 1], [1, 2]]


def test_check_assignment_matrix_rejects_bad_rows():
    with pytest.raises(ValueError):
        check_assignment_matrix([[1, 0], [3, -1]])
    with pytest.raises(ValueError):
        check_assignment_matrix([[1, 0]])


@st.composite
def prob_rows(draw, min_k=1, max_k=8):
    K = draw(st.integers(min_k, max_k))
    raw = np.array(draw(st.lists(st.integers(0, 20), min_size=K, max_size=K)), dtype=float)
    if raw.sum() == 0:
        raw[draw(st.integers(0, K - 1))] = 1
    return raw / raw.sum()


@settings(max_examples=300, deadline=None)
@given(prob_rows())
def test_mode_maximises_pmf(q):
    # integer weights make exact ties common
    row = tuple(int(v) for v in mode_assignment([q])[0])
    assert row in multinomial2_modes(q.tolist())


@settings(max_examples=200, deadline=None)
@given(prob_rows(min_k=2), st.randoms(use_true_random=False))
def test_mode_permutation_equivariant(q, rnd):
    # distinct entries so that no tie rule is involved
    q = q + np.arange(q.size) * 1e-6
    q = q / q.sum()
    perm = list(range(q.size))
    rnd.shuffle(perm)
    assert np.array_equal(mode_assignment([q[perm]])[0], mode_assignment([q])[0][perm])


@settings(max_examples=60, deadline=None)
@given(st.lists(prob_rows(min_k=3, max_k=3), min_size=1, max_size=30), st.integers(0, 2**32 - 1))
def test_every_produced_row_has_two_events(rows, seed):
    Q = np.array(rows)
    for H in (sample_assignment(Q, seed), mode_assignment(Q)):
        assert np.all(H.sum(axis=1) == 2)
        assert all(len(assigned_groups(H, i)) in (1, 2) for i in range(len(Q)))
