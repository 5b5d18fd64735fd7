import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sp_integrate

from isodense.symmetrize import (Box, ColumnarSet, Disk, ball_radius_for_volume, column_graph_sums,
                                 converge_to_ball, convexity_inequality, hsiang_reflect, perimeter_allowance,
                                 radial_ball_volume, steiner_symmetrize, symmetric_difference,
                                 weighted_perimeter_columnar, weighted_volume_columnar)

H = 1 / 128


def column_mass(col, p, c):
    # independent oracle: scipy quad of exp(c (p^2 + t^2)) over the column's intervals
    return sum(sp_integrate.quad(lambda t: math.exp(c * (p * p + t * t)), a, b, epsabs=1e-14)[0] for a, b in col)


def test_volume_examples():
    sq = ColumnarSet.from_shapes([Box(-1, 1, -1, 1)], h=H, c=0.0)
    assert weighted_volume_columnar(sq) == pytest.approx(4.0, abs=8 * H)
    sq1 = ColumnarSet.from_shapes([Box(-1, 1, -1, 1)], h=H, c=1.0)
    side = sp_integrate.quad(lambda x: math.exp(x * x), -1, 1)[0]
    assert side ** 2 == pytest.approx(8.5574, abs=1e-4)
    assert weighted_volume_columnar(sq1) == pytest.approx(side ** 2, abs=8 * side ** 2 * H)
    assert weighted_volume_columnar(ColumnarSet.empty()) == 0.0


def test_perimeter_examples():
    disk0 = ColumnarSet.ball(1.0, h=H, c=0.0)
    assert weighted_perimeter_columnar(disk0) == pytest.approx(2 * math.pi, rel=0.03)
    disk1 = ColumnarSet.ball(1.0, h=H, c=1.0)
    assert weighted_perimeter_columnar(disk1) == pytest.approx(2 * math.pi * math.e, rel=0.03)
    sq = ColumnarSet.from_shapes([Box(-1, 1, -1, 1)], h=H, c=0.0)
    assert weighted_perimeter_columnar(sq) == pytest.approx(8.0, abs=8 * H)
    assert perimeter_allowance(disk0) == pytest.approx(H * weighted_perimeter_columnar(disk0))


def test_ball_is_fixed_point():
    ball = ColumnarSet.ball(0.8, h=H, c=1.0)
    assert steiner_symmetrize(ball, axis=1) == ball


def test_translated_ball_keeps_column_masses():
    moved = ColumnarSet.from_shapes([Disk(0.0, 0.4, 0.7)], h=H, c=1.0)
    out = steiner_symmetrize(moved, axis=1)
    for p, before, after in zip(moved.p, moved.columns, out.columns):
        if before:
            assert len(after) == 1 and after[0][0] == -after[0][1]
            assert column_mass(after, p, 1.0) == pytest.approx(column_mass(before, p, 1.0), rel=1e-10)
    # per-column masses of the result are the translate's, not the centred ball's
    centred = ColumnarSet.from_shapes([Disk(0.0, 0.0, 0.7)], h=H, c=1.0)
    assert weighted_volume_columnar(out) > weighted_volume_columnar(centred)


def test_mirror_blobs_merge():
    blobs = ColumnarSet.from_shapes([Disk(0.0, 0.6, 0.3), Disk(0.0, -0.6, 0.3)], h=H, c=1.0)
    out = steiner_symmetrize(blobs, axis=1)
    assert all(len(col) <= 1 for col in out.columns)
    for p, before, after in zip(blobs.p, blobs.columns, out.columns):
        if before:
            assert len(before) == 2
            assert column_mass(after, p, 1.0) == pytest.approx(column_mass(before, p, 1.0), rel=1e-10)
    assert weighted_volume_columnar(out) == pytest.approx(weighted_volume_columnar(blobs), rel=1e-12)


def test_axis_zero_symmetrizes_in_x():
    cs = ColumnarSet.from_shapes([Box(0.2, 0.9, -0.3, 0.1)], h=H, c=0.5, theta=math.pi / 2)
    out = steiner_symmetrize(cs, axis=0)
    assert out.theta == cs.theta
    for col in out.columns:
        assert all(a == -b for a, b in col)


def test_json_round_trip():
    cs = ColumnarSet.random_union(3, h=1 / 32, c=1.0)
    back = ColumnarSet.from_json(cs.to_json())
    assert back == cs
    doc = json.loads(cs.to_json())
    assert set(doc) >= {"h", "c", "theta", "window", "columns"}


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0, 1]))
def test_symmetrization_properties(seed, axis):
    theta = 0.0 if axis == 1 else math.pi / 2
    cs = ColumnarSet.random_union(seed, h=1 / 64, c=1.0, theta=theta)
    out = steiner_symmetrize(cs, axis=axis)
    v0, v1 = weighted_volume_columnar(cs), weighted_volume_columnar(out)
    assert abs(v1 - v0) <= 1e-9 * v0
    assert weighted_perimeter_columnar(out) <= weighted_perimeter_columnar(cs) + perimeter_allowance(cs)
    assert steiner_symmetrize(out, axis=axis).columns == out.columns
    for col in out.columns:
        assert len(col) <= 1 and all(a == -b for a, b in col)


def _max_central_slope(cs):
    # per column, largest |central difference| of matched endpoints (inf if unmatched)
    out = np.full(len(cs.columns), np.inf)
    for i in range(1, len(cs.columns) - 1):
        prev, col, nxt = cs.columns[i - 1:i + 2]
        if col and len(prev) == len(col) == len(nxt):
            e0 = np.ravel(prev)
            e1 = np.ravel(nxt)
            out[i] = float(np.max(np.abs(e1 - e0))) / (2 * cs.h)
    return out


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_pointwise_graph_sums(seed):
    cs = ColumnarSet.random_union(seed, h=1 / 64, c=1.0)
    out = steiner_symmetrize(cs, axis=1)
    before, after = column_graph_sums(cs), column_graph_sums(out)
    # graph-like columns only; a jump of one column (a vertical wall) is not a graph
    mild = _max_central_slope(cs) < 1 / math.sqrt(cs.h)
    both = np.isfinite(before) & np.isfinite(after) & mild
    slack = 4 * cs.h * np.maximum(1.0, after[both]) + 1e-12
    assert np.all(before[both] >= after[both] - slack)


def test_hsiang_examples():
    ball = ColumnarSet.ball(0.6, h=H, c=1.0)
    res = hsiang_reflect(ball, hyperplane=1)
    assert res.kept == "+"
    assert res.set == ball
    assert res.volume_plus == pytest.approx(res.volume_minus, rel=1e-12)

    up = ColumnarSet.from_shapes([Disk(0.0, 0.8, 0.3)], h=H, c=1.0)
    res = hsiang_reflect(up, hyperplane=1)
    assert res.volume_minus == 0.0
    assert res.volume_plus == pytest.approx(weighted_volume_columnar(up), rel=1e-12)


def test_hsiang_keeps_cheaper_half():
    # lower half is a thin bar, upper half a lumpy blob: the bar wins
    cs = ColumnarSet.from_shapes([Box(-0.5, 0.5, -0.2, 0.0), Disk(0.3, 0.4, 0.35), Box(-0.5, 0.5, 0.0, 0.05)],
                                 h=H, c=1.0)
    res = hsiang_reflect(cs, hyperplane=1)
    kept_rel = res.relative_perimeter_plus if res.kept == "+" else res.relative_perimeter_minus
    other = res.relative_perimeter_minus if res.kept == "+" else res.relative_perimeter_plus
    assert kept_rel <= other
    vol_kept = res.volume_plus if res.kept == "+" else res.volume_minus
    assert weighted_volume_columnar(res.set) == pytest.approx(2 * vol_kept, rel=1e-12)


def test_ball_radius_bisection():
    for c in (0.0, 0.5, 2.0):
        # closed form: pi (e^{c R^2} - 1) / c, or pi R^2
        R = 0.9
        vol = math.pi * R * R if c == 0 else math.pi * math.expm1(c * R * R) / c
        assert radial_ball_volume(R, c) == pytest.approx(vol, rel=1e-13)
        assert ball_radius_for_volume(vol, c) == pytest.approx(R, rel=1e-12)


def test_converge_centred_ball():
    ball = ColumnarSet.ball(0.5, h=1 / 64, c=1.0)
    res = converge_to_ball(ball)
    assert res.converged
    assert res.logs[0].step_difference == 0.0 and res.logs[1].step_difference < 1e-9
    assert res.ball_difference <= ball.h


def test_converge_off_centre_disk():
    cs = ColumnarSet.from_shapes([Disk(0.5, -0.3, 0.4)], h=1 / 64, c=1.0)
    res = converge_to_ball(cs, seed=1)
    assert res.converged
    assert res.ball_difference <= 5 * cs.h
    assert all(log.within_allowance for log in res.logs)
    csv_text = res.logs_csv()
    assert csv_text.splitlines()[0].startswith("step,angle,volume_before")


def test_symmetric_difference_basics():
    a = ColumnarSet.ball(0.5, h=1 / 64, c=1.0)
    assert symmetric_difference(a, a) == 0.0
    assert symmetric_difference(a, ColumnarSet.empty(h=1 / 64, c=1.0)) == pytest.approx(
        weighted_volume_columnar(a), rel=1e-12)


def test_convexity_examples():
    r = convexity_inequality([1, 1], [1, 1], 1, 1)
    assert r.lhs == r.rhs == 2 * math.sqrt(2) and r.equality
    r = convexity_inequality([2, 1], [1, 1], 1, 1)
    assert r.lhs == pytest.approx(3 * math.sqrt(2)) and not r.equality and r.lhs > r.rhs
    with pytest.raises(ValueError):
        convexity_inequality([1], [1], 1, 1)
    with pytest.raises(ValueError):
        convexity_inequality([1, -1], [1, 1], 0, 0)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)), min_size=1, max_size=6), st.floats(0, 1), st.floats(0, 1))
def test_convexity_never_violated(pairs, qa, qs):
    alphas = [p[0] for p in pairs]
    slopes = [p[1] for p in pairs]
    # choose alpha, a inside the preconditions
    alpha = qa * math.fsum(alphas) / 2
    budget = math.fsum(x * y for x, y in pairs)
    a = 0.0 if alpha == 0 else qs * budget / (2 * alpha)
    if math.fsum(x * y for x, y in pairs) < 2 * alpha * a:
        return
    assert convexity_inequality(alphas, slopes, alpha, a).holds
