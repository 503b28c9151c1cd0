import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import cdist
from sklearn.metrics import silhouette_score

from oracles import chi2_sf, pearson_chi2
from softmapper.mapper import MapperGraph, Node
from softmapper.metrics import (GroundTruthTopology, MetricReport, chi_square_test, count_ratio, label_histogram,
                                round2, sc_adj, sc_norm, silhouette, subgroup_test, tsr)


def _graph_from_sets(sets, edges=()):
    return MapperGraph([Node(k, np.array(sorted(s))) for k, s in enumerate(sets)], sorted(edges))


def _cycle(n):
    return _graph_from_sets([[k] for k in range(n)], [(k, (k + 1) % n) if k + 1 < n else (0, k) for k in range(n)])


def test_silhouette_line_example():
    pts = np.array([[0.0], [1.0], [10.0], [11.0]])
    sc = silhouette(pts, _graph_from_sets([[0, 1], [2, 3]]))
    # each sample: a = 1, b is 9.5 or 10.5
    expected = np.mean([1 - 1 / 10.5, 1 - 1 / 9.5, 1 - 1 / 9.5, 1 - 1 / 10.5])
    assert sc == pytest.approx(expected, abs=1e-12)
    assert sc == pytest.approx(0.8997493734, abs=1e-9)


def test_silhouette_separated_and_interleaved():
    rng = np.random.default_rng(0)
    blobs = np.vstack([rng.normal(0, 0.1, (50, 2)), rng.normal(20, 0.1, (50, 2))])
    assert silhouette(blobs, _graph_from_sets([range(50), range(50, 100)])) > 0.9
    mixed = rng.normal(0, 1, (200, 2))
    assert abs(silhouette(mixed, _graph_from_sets([range(0, 200, 2), range(1, 200, 2)]))) < 0.2


def test_silhouette_needs_two_nodes():
    with pytest.raises(ValueError):
        silhouette(np.zeros((3, 2)), _graph_from_sets([[0, 1, 2]]))


def test_singleton_node_scores_zero():
    pts = np.array([[0.0], [1.0], [50.0]])
    sc = silhouette(pts, _graph_from_sets([[0, 1], [2]]))
    per_sample = [1 - 1 / 50, 1 - 1 / 49, 0.0]
    assert sc == pytest.approx(np.mean(per_sample), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6), st.integers(8, 60))
def test_silhouette_matches_reference_on_duplicated_samples(seed, n_nodes, n):
    rng = np.random.default_rng(seed)
    pts = rng.normal(size=(n, 2))
    sets = [set() for _ in range(n_nodes)]
    for i in range(n):
        for k in rng.choice(n_nodes, size=rng.integers(1, 3), replace=False):
            sets[k].add(i)
    sets = [s for s in sets if len(s) >= 2]
    if len(sets) < 2:
        return
    g = _graph_from_sets(sets)
    rows = [i for s in sets for i in sorted(s)]
    labels = [k for k, s in enumerate(sets) for _ in s]
    ref = silhouette_score(cdist(pts[rows], pts[rows]), labels, metric="precomputed")
    assert silhouette(pts, g, block=7) == pytest.approx(ref, abs=1e-10)


def test_tsr_examples():
    two_loops = MapperGraph([Node(0, np.array([k])) for k in range(8)],
                            [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (5, 6), (6, 7), (3, 7)])
    assert tsr(two_loops, GroundTruthTopology(components=2, loops=2)) == 1.0
    assert tsr(_cycle(4), GroundTruthTopology(loops=3)) == pytest.approx(1 / 3)
    path = _graph_from_sets([[0], [1]], [(0, 1)])
    assert tsr(path, GroundTruthTopology(loops=0)) == 1.0
    assert tsr(path, GroundTruthTopology(components=2, loops=0)) == pytest.approx(0.75)
    assert tsr(path, GroundTruthTopology(components=2, loops=0), dims=["loops"]) == 1.0


def test_tsr_errors():
    with pytest.raises(ValueError):
        GroundTruthTopology()
    with pytest.raises(ValueError):
        GroundTruthTopology(loops=-1)
    with pytest.raises(ValueError):
        tsr(_cycle(3), GroundTruthTopology(loops=1), dims=["components"])
    with pytest.raises(ValueError):
        tsr(_cycle(3), GroundTruthTopology(loops=1), dims=["holes"])


@given(st.integers(0, 50), st.integers(0, 50))
def test_count_ratio_symmetric_and_exact_only_on_agreement(a, b):
    assert count_ratio(a, b) == count_ratio(b, a)
    assert 0 <= count_ratio(a, b) <= 1
    assert (count_ratio(a, b) == 1) == (a == b)


@pytest.mark.parametrize("norm,ratio,expected,rounded", [
    (0.59, 1.0, 0.795, "0.80"),
    (0.52, 0.29, 0.405, "0.40"),
    (1.0, 1.0, 1.0, "1.00"),
])
def test_sc_adj_examples(norm, ratio, expected, rounded):
    assert sc_adj(norm, ratio) == pytest.approx(expected, abs=1e-12)
    assert round2(sc_adj(norm, ratio)) == rounded


def test_range_checks():
    with pytest.raises(ValueError):
        sc_norm(1.5)
    with pytest.raises(ValueError):
        sc_adj(1.2, 0.5)
    with pytest.raises(ValueError):
        sc_adj(0.5, -0.1)
    assert sc_norm(-1.0) == 0.0 and sc_norm(1.0) == 1.0


@given(st.floats(-1, 1), st.floats(0, 1))
def test_report_invariants_and_json(sc, ratio):
    report = MetricReport.build(sc, ratio)
    assert report.sc_norm == (sc + 1) / 2
    assert abs(report.sc_adj - (report.sc_norm + report.tsr) / 2) <= 1e-9
    assert MetricReport.loads(report.dumps()) == report


def test_report_row():
    assert MetricReport.build(0.18, 1.0).row("TC", "mode") == "TC\tmode\t0.59\t1.00\t0.80"
    assert round2(0.405) == "0.40" and round2(0.845) == "0.84" and round2(1) == "1.00"


def test_chi_square_examples():
    assert chi_square_test([10, 10], [10, 10]) == (0.0, 1.0)
    stat, p = chi_square_test([50, 0], [0, 50])
    assert stat == pytest.approx(100.0)
    assert p < 1e-20
    assert p == pytest.approx(chi2_sf(100.0, 1), rel=1e-9)


def test_chi_square_drops_empty_categories():
    assert chi_square_test([5, 0, 3], [2, 0, 6]) == pytest.approx(chi_square_test([5, 3], [2, 6]))
    assert chi_square_test([4, 0], [7, 0]) == (0.0, 1.0)


@pytest.mark.parametrize("a,b", [([0, 0], [0, 0]), ([1, -1], [2, 2]), ([0, 0], [3, 1]), ([1, np.nan], [1, 1])])
def test_chi_square_errors(a, b):
    with pytest.raises(ValueError):
        chi_square_test(a, b)


def test_chi_square_reference_tail():
    assert chi2_sf(3.841, 1) == pytest.approx(0.05, abs=1e-3)


histograms = st.integers(2, 7).flatmap(lambda c: st.tuples(
    st.lists(st.integers(0, 40), min_size=c, max_size=c).filter(lambda h: sum(h) > 0),
    st.lists(st.integers(0, 40), min_size=c, max_size=c).filter(lambda h: sum(h) > 0)))


@settings(max_examples=150, deadline=None)
@given(histograms, st.randoms(use_true_random=False))
def test_chi_square_matches_hand_computation(pair, rnd):
    a, b = pair
    stat, p = chi_square_test(a, b)
    ref_stat, df = pearson_chi2(a, b)
    assert stat == pytest.approx(ref_stat, rel=1e-9, abs=1e-12)
    if df:
        assert p == pytest.approx(chi2_sf(ref_stat, df), rel=1e-7, abs=1e-300)
    assert chi_square_test(b, a) == pytest.approx((stat, p), rel=1e-12, abs=1e-300)
    perm = list(range(len(a)))
    rnd.shuffle(perm)
    moved = chi_square_test([a[k] for k in perm], [b[k] for k in perm])
    assert moved == pytest.approx((stat, p), rel=1e-9, abs=1e-300)


def test_label_histogram_and_subgroup_test():
    labels = np.array([0, 0, 1, 1, 2, 2])
    assert label_histogram(labels, [0, 2, 3], [0, 1, 2]).tolist() == [1, 2, 0]
    g = _graph_from_sets([[0, 1], [1, 2], [3, 4, 5]], [(0, 1)])
    out = subgroup_test(g, labels, [0, 1])
    assert out["nodes"] == [0, 1]
    assert out["subgroup_counts"] == [2, 1, 0] and out["rest_counts"] == [0, 1, 2]
    assert (out["statistic"], out["p_value"]) == chi_square_test([2, 1, 0], [0, 1, 2])
    with pytest.raises(IndexError):
        subgroup_test(g, labels, [7])
