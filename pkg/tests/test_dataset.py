import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from softmapper.dataset import (CIRCLE_PRESETS, CircleSpec, InvalidSpecError, ParseError, PointCloud,
                                filter_coordinate, filter_mean_distance, generate_circles, generate_cross,
                                load_csv, save_csv, substream)


def test_two_circles_lie_on_their_circles():
    spec = CircleSpec(centers=[(0, 0), (3, 0)], radii=[1, 1], points_per_circle=500)
    pc = generate_circles(spec, 0)
    assert pc.n == 1000 and pc.d == 2
    for idx, (c, r) in enumerate(zip(spec.centers, spec.radii)):
        pts = pc.points[pc.labels == idx]
        assert len(pts) == 500
        assert np.max(np.abs(np.hypot(*(pts - c).T) - r)) <= 1e-9


def test_noise_sd_shows_in_radial_residuals():
    pc = generate_circles(CIRCLE_PRESETS["small_noise"], 3)
    first = pc.points[pc.labels == 0]
    residual = np.hypot(*first.T) - 1.0
    assert 0.08 <= residual.std(ddof=1) <= 0.12


def test_same_seed_same_cloud_bitwise():
    spec = CIRCLE_PRESETS["big_noise"]
    a, b = generate_circles(spec, 11), generate_circles(spec, 11)
    assert a.points.tobytes() == b.points.tobytes()
    assert not np.array_equal(a.points, generate_circles(spec, 12).points)


def test_generator_and_int_seeds_are_both_accepted():
    spec = CIRCLE_PRESETS["two_circles"]
    a = generate_circles(spec, substream(4, "dataset"))
    b = generate_circles(spec, substream(4, "dataset"))
    assert np.array_equal(a.points, b.points)


def test_substreams_are_label_separated():
    x = substream(1, "dataset").random(4)
    y = substream(1, "sampling").random(4)
    assert not np.allclose(x, y)
    assert np.array_equal(x, substream(1, "dataset").random(4))


@pytest.mark.parametrize("kwargs", [
    dict(centers=[(0, 0)], radii=[0.0]),
    dict(centers=[(0, 0)], radii=[-1.0]),
    dict(centers=[(0, 0)], radii=[1.0], points_per_circle=0),
    dict(centers=[(0, 0), (1, 1)], radii=[1.0]),
    dict(centers=[], radii=[]),
    dict(centers=[(0, 0)], radii=[1.0], noise_sd=-0.1),
])
def test_invalid_circle_specs(kwargs):
    with pytest.raises(InvalidSpecError):
        generate_circles(CircleSpec(**kwargs), 0)


def test_cross_has_four_arms():
    pc = generate_cross(seed=0)
    assert pc.n == 1000
    assert set(np.unique(pc.labels)) == {0, 1, 2, 3}
    assert np.all(np.abs(pc.points).min(axis=1) <= 0.1 + 1e-12)


def test_load_csv_plain(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0,0\n1,0\n0,1\n")
    pc = load_csv(p)
    assert (pc.n, pc.d) == (3, 2)
    assert pc.labels is None
    assert pc.points.tolist() == [[0, 0], [1, 0], [0, 1]]


def test_load_csv_with_labels_and_header(tmp_path):
    p = tmp_path / "b.csv"
    p.write_text("x,y,label\n0.5,1.5,3\n2,4,0\n")
    pc = load_csv(p, has_labels=True, header=True)
    assert pc.d == 2
    assert pc.labels.tolist() == [3, 0]


@pytest.mark.parametrize("text,line", [("1,2\n3\n", 2), ("1,2\n3,x\n", 2), ("", None)])
def test_load_csv_errors_name_the_line(tmp_path, text, line):
    p = tmp_path / "bad.csv"
    p.write_text(text)
    with pytest.raises(ParseError) as info:
        load_csv(p)
    assert info.value.line == line
    if line is not None:
        assert f"line {line}" in str(info.value)


def test_csv_round_trip_is_exact(tmp_path):
    pc = generate_circles(CIRCLE_PRESETS["small_noise"], 5)
    p = tmp_path / "c.csv"
    save_csv(pc, p)
    back = load_csv(p, has_labels=True)
    assert np.array_equal(back.points, pc.points)
    assert np.array_equal(back.labels, pc.labels)


def test_filter_coordinate():
    pc = PointCloud(np.array([[1.0, 2.0], [3.0, 4.0]]))
    assert filter_coordinate(pc, 0).tolist() == [1, 3]
    assert filter_coordinate(pc, 1).tolist() == [2, 4]
    with pytest.raises(IndexError):
        filter_coordinate(pc, 2)


def test_filter_mean_distance_examples():
    assert filter_mean_distance(PointCloud(np.array([[0.0, 0.0], [2.0, 0.0]]))).tolist() == [1.0, 1.0]
    assert filter_mean_distance(PointCloud(np.array([[5.0, 1.0]]))).tolist() == [0.0]
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])
    assert np.allclose(filter_mean_distance(PointCloud(tri)), 2 / 3, atol=1e-12)


def test_point_cloud_rejects_non_finite():
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.0, np.nan]]))


clouds = arrays(np.float64, st.tuples(st.integers(1, 25), st.integers(1, 3)),
                elements=st.floats(-50, 50, allow_nan=False, allow_infinity=False))


@settings(max_examples=60, deadline=None)
@given(clouds, st.randoms(use_true_random=False))
def test_mean_distance_permutation_equivariant(pts, rnd):
    perm = list(range(len(pts)))
    rnd.shuffle(perm)
    base = filter_mean_distance(PointCloud(pts))
    moved = filter_mean_distance(PointCloud(pts[perm]))
    assert np.allclose(moved, base[perm], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 25), st.just(2)),
              elements=st.floats(-50, 50, allow_nan=False, allow_infinity=False)),
       st.floats(0, 2 * math.pi), st.floats(-100, 100), st.floats(-100, 100))
def test_mean_distance_rigid_motion_invariant(pts, angle, dx, dy):
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = pts @ rot.T + [dx, dy]
    assert np.allclose(filter_mean_distance(PointCloud(moved)), filter_mean_distance(PointCloud(pts)), atol=1e-9)
