import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgstd.dataset import Dataset
from mgstd.errors import DomainError, ParameterError
from mgstd.grid import GridSpec, build_grid
from mgstd.transitions import (Digraph, TransitionCounts, build_deterministic_map,
                               build_multivalued_map, classify_pair, count_transitions,
                               transition_probability)

GRID_1D = GridSpec(1, 0.25, 0.5, (0.0,))
A_CELL, B_CELL = 2, 3  # [0, 0.25) and [0.25, 0.5)


def hand_counts():
    return count_transitions(Dataset.from_series([[0.1, 0.1, 0.3]]), GRID_1D)


def synthetic_counts(nu, pairs):
    """TransitionCounts with given occupancies and pair counts, bypassing data."""
    grid = GridSpec(1, 1.0, 5.0, (0.0,))
    cells = np.array(sorted(nu))
    keys = sorted(pairs)
    return TransitionCounts(grid, cells, np.array([nu[c] for c in cells]),
                            np.array([k[0] for k in keys], dtype=np.int64),
                            np.array([k[1] for k in keys], dtype=np.int64),
                            np.array([pairs[k] for k in keys], dtype=np.int64))


def random_dataset(rng, n_series=6, length=30, scale=0.6):
    series = []
    for _ in range(n_series):
        steps = rng.normal(0, scale, size=(length, 2))
        series.append(np.clip(np.cumsum(steps, axis=0) * 0.3, -1.9, 1.9))
    return Dataset.from_series(series)


class TestCounts:
    def test_hand_count(self):
        tc = hand_counts()
        assert tc.occupancy(A_CELL) == 2 and tc.occupancy(B_CELL) == 1
        assert tc.count(A_CELL, A_CELL) == 1 and tc.count(A_CELL, B_CELL) == 1
        assert tc.count(B_CELL, A_CELL) == 0
        assert tc.total_pairs == 2

    def test_empty(self):
        tc = count_transitions(Dataset.from_series([], m=1), GRID_1D)
        assert tc.total_pairs == 0 and tc.cells.size == 0

    def test_disjoint_series(self):
        d = Dataset.from_series([[[-1.5, -1.5], [-1.4, -1.6], [-1.6, -1.4]],
                                 [[1.5, 1.5], [1.4, 1.6], [1.6, 1.4]]])
        grid = build_grid(2, 0.25, (0, 0), d.bound())
        tc = count_transitions(d, grid)
        left = set(grid.locate(d.series(0)).tolist())
        for i, j in zip(tc.src.tolist(), tc.dst.tolist()):
            assert (i in left) == (j in left)

    def test_outside_names_series(self):
        d = Dataset.from_series([[0.1], [0.2, 0.9]], ids=["ok", "bad"])
        with pytest.raises(DomainError, match="bad"):
            count_transitions(d, GRID_1D)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_invariants(self, seed):
        d = random_dataset(np.random.default_rng(seed))
        tc = count_transitions(d, build_grid(2, 0.25, (0.1, 0.05), d.bound()))
        out = {c: 0 for c in tc.cells.tolist()}
        for i, m in zip(tc.src.tolist(), tc.mu.tolist()):
            out[i] += m
        assert all(out[c] <= tc.occupancy(c) for c in out)
        assert tc.total_pairs == sum(n - 1 for n in d.lengths.tolist())
        assert tc.nu.sum() == d.n_points

    def test_tsv(self):
        mu_text, nu_text = hand_counts().to_tsv()
        assert mu_text.splitlines()[0] == "i_cell\tj_cell\tmu"
        assert nu_text.splitlines() == ["i_cell\tnu", "2\t2", "3\t1"]


class TestProbability:
    def test_ten_of_twenty(self):
        tc = synthetic_counts({0: 20, 1: 5}, {(0, 1): 10})
        assert transition_probability(tc, 0, 1) == 0.5

    def test_one_of_two(self):
        tc = synthetic_counts({0: 2, 1: 5}, {(0, 1): 1})
        assert transition_probability(tc, 0, 1) == 0.5

    def test_zero(self):
        tc = synthetic_counts({0: 2, 1: 5}, {(0, 1): 1})
        assert transition_probability(tc, 1, 0) == 0.0

    def test_empty_cell(self):
        tc = synthetic_counts({0: 2}, {})
        with pytest.raises(ParameterError):
            transition_probability(tc, 4, 0)

    def test_row_sums(self):
        tc = hand_counts()
        # the last point of the series has no successor
        assert transition_probability(tc, A_CELL, A_CELL) + \
            transition_probability(tc, A_CELL, B_CELL) == 1.0
        assert transition_probability(tc, B_CELL, A_CELL) == 0.0


class TestClassify:
    def test_forward(self):
        # T_ij = 5/10 = 0.5, T_ji = 4/10 = 0.4
        tc = synthetic_counts({0: 10, 1: 10}, {(0, 1): 5, (1, 0): 4})
        assert classify_pair(tc, 0, 1, 1.1) == "forward"
        assert classify_pair(tc, 1, 0, 1.1) == "backward"

    @pytest.mark.parametrize("rho", [1.0, 1.1, 3.0])
    def test_equal_is_comparable(self, rho):
        tc = synthetic_counts({0: 7, 1: 14}, {(0, 1): 2, (1, 0): 4})
        assert classify_pair(tc, 0, 1, rho) == "comparable"

    def test_one_sided(self):
        tc = synthetic_counts({0: 10, 1: 10}, {(0, 1): 3})
        assert classify_pair(tc, 0, 1, 1.1) == "forward"
        assert classify_pair(tc, 1, 0, 1.1) == "backward"

    def test_none(self):
        tc = synthetic_counts({0: 10, 1: 10}, {})
        assert classify_pair(tc, 0, 1, 1.1) == "none"

    def test_bad_rho(self):
        tc = synthetic_counts({0: 10, 1: 10}, {})
        with pytest.raises(ParameterError):
            classify_pair(tc, 0, 1, 0.9)


class TestMultivaluedMap:
    def test_superiority_and_threshold(self):
        tc = synthetic_counts({0: 50, 1: 50}, {(0, 1): 9, (1, 0): 2})
        g = build_multivalued_map(tc, 1.1, 8)
        assert g.edge_set == {(0, 1)}

    def test_comparable_at_threshold(self):
        tc = synthetic_counts({0: 50, 1: 50}, {(0, 1): 8, (1, 0): 8})
        assert build_multivalued_map(tc, 1.1, 8).edge_set == {(0, 1), (1, 0)}

    def test_self_loop_boundary(self):
        tc = synthetic_counts({0: 50}, {(0, 0): 7})
        assert build_multivalued_map(tc, 1.1, 8).edge_set == frozenset()
        assert build_multivalued_map(tc, 1.1, 7).edge_set == {(0, 0)}

    def test_nodes_are_occupied_cells(self):
        tc = hand_counts()
        g = build_multivalued_map(tc, 1.1, 100)
        assert g.nodes == (A_CELL, B_CELL) and not g.edges

    def test_bad_threshold(self):
        with pytest.raises(ParameterError):
            build_multivalued_map(hand_counts(), 1.1, 0)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.floats(1.0, 3.0), st.integers(1, 5))
    def test_monotone_in_threshold(self, seed, rho, mu):
        d = random_dataset(np.random.default_rng(seed), n_series=10)
        tc = count_transitions(d, build_grid(2, 0.25, (0, 0), d.bound()))
        assert build_multivalued_map(tc, rho, mu + 1).edge_set <= \
            build_multivalued_map(tc, rho, mu).edge_set

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(1, 4))
    def test_subset_of_deterministic(self, seed, mu):
        d = random_dataset(np.random.default_rng(seed))
        grid = build_grid(2, 0.25, (0, 0), d.bound())
        tc = count_transitions(d, grid)
        assert build_multivalued_map(tc, 1.1, mu).edge_set <= \
            build_deterministic_map(d, grid).edge_set

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10 ** 6), st.integers(2, 5))
    def test_duplicated_data_scales_threshold(self, seed, k):
        # repeating every series k times multiplies mu and nu by k
        d = random_dataset(np.random.default_rng(seed))
        dk = Dataset.from_series([d.series(i) for i in range(d.n_series)] * k)
        grid = build_grid(2, 0.25, (0, 0), d.bound())
        a = build_multivalued_map(count_transitions(d, grid), 1.1, 2)
        b = build_multivalued_map(count_transitions(dk, grid), 1.1, 2 * k)
        assert a.edge_set == b.edge_set


class TestDeterministicMap:
    def test_hand_count(self):
        g = build_deterministic_map(Dataset.from_series([[0.1, 0.1, 0.3]]), GRID_1D)
        assert g.edge_set == {(A_CELL, A_CELL), (A_CELL, B_CELL)}

    def test_single_point(self):
        g = build_deterministic_map(Dataset.from_series([[0.1]]), GRID_1D)
        assert g.edges == ()

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10 ** 6))
    def test_matches_permissive_filter(self, seed):
        d = random_dataset(np.random.default_rng(seed))
        grid = build_grid(2, 0.25, (0.03, 0.2), d.bound())
        tc = count_transitions(d, grid)
        g = build_multivalued_map(tc, 1e18, 1)
        assert g.edge_set == build_deterministic_map(d, grid).edge_set


class TestDigraph:
    def test_rejects_unknown_node(self):
        with pytest.raises(ParameterError):
            Digraph((1, 2), ((1, 3),))

    def test_successors(self):
        g = Digraph((3, 1, 2), ((1, 2), (1, 3), (2, 2)))
        assert g.nodes == (1, 2, 3)
        assert g.successors[1] == [2, 3] and g.successors[3] == []
        assert g.has_edge(2, 2) and not g.has_edge(2, 1)

    def test_dot(self):
        text = Digraph((1, 2), ((1, 2),)).to_dot()
        assert "1 -> 2;" in text
