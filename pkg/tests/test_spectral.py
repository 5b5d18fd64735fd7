import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import eigs

from isodense.spectral import (ConvergenceError, GridDomain, StabilityError, assemble_operator, faber_krahn_compare,
                               lambda1)


def test_interval_benchmark_and_order():
    vals = {n: lambda1(GridDomain.interval(0.0, math.pi, n)).lambda1 for n in (256, 512, 1024)}
    assert vals[1024] == pytest.approx(1.0, abs=1e-4)
    # closed form of the discrete eigenvalue: (2/h sin(h/2))^2
    for n, v in vals.items():
        h = math.pi / n
        assert v == pytest.approx((2 / h * math.sin(h / 2)) ** 2, rel=1e-9)
    e1, e2 = abs(vals[256] - 1), abs(vals[512] - 1)
    assert e1 / e2 == pytest.approx(4.0, rel=0.01)


def test_laplacian_stencil_at_c0():
    dom = GridDomain.interval(0.0, 1.0, 8)
    A = assemble_operator(dom, 0.0).toarray()
    h = 1 / 8
    assert A.shape == (7, 7)
    np.testing.assert_allclose(np.diag(A), -2 / h ** 2)
    np.testing.assert_allclose(np.diag(A, 1), 1 / h ** 2)


def test_drift_sign_conventions():
    dom = GridDomain.interval(-1.0, 1.0, 8)
    h = 0.25
    x = dom.coordinates()[0][dom.mask]
    P = assemble_operator(dom, 1.0, "paper").toarray()
    W = assemble_operator(dom, 1.0, "weighted-laplacian").toarray()
    # paper: Laplacian - 2c x d/dx ; weighted: Laplacian + 2c x d/dx
    np.testing.assert_allclose(np.diag(P, 1), 1 / h ** 2 - 2 * x[:-1] / (2 * h))
    np.testing.assert_allclose(np.diag(W, 1), 1 / h ** 2 + 2 * x[:-1] / (2 * h))


def test_stability_guard():
    dom = GridDomain.interval(0.0, 10.0, 20)
    with pytest.raises(StabilityError) as err:
        assemble_operator(dom, 1.0)
    assert err.value.required_h < 0.5


def test_unit_disk():
    res = lambda1(GridDomain.disk(1.0, 1 / 256))
    assert res.converged and res.residual < 1e-8
    # staircase boundary: O(h) error, about 0.016 at this spacing
    assert res.lambda1 == pytest.approx(5.7832, abs=0.03)


def test_square_beats_disk():
    side = math.sqrt(math.pi)
    sq = lambda1(GridDomain.rectangle(-side / 2, side / 2, -side / 2, side / 2, 1 / 64)).lambda1
    assert sq == pytest.approx(2 * math.pi ** 2 / math.pi, rel=0.01)
    assert sq > 5.7832


def test_matches_dense_eigensolver():
    dom = GridDomain.disk(0.9, 1 / 16, center=(0.3, -0.2))
    for conv in ("paper", "weighted-laplacian"):
        A = -assemble_operator(dom, 1.5, conv)
        ev = np.linalg.eigvals(A.toarray())
        assert lambda1(dom, 1.5, conv).lambda1 == pytest.approx(float(np.min(ev.real)), abs=1e-8)


def test_conventions_shift():
    # conjugating by the Gaussian weight turns both into -Lap + c^2|x|^2 -/+ c d
    dom = GridDomain.disk(1.0, 1 / 64)
    for c in (0.5, 1.0):
        lp = lambda1(dom, c, "paper").lambda1
        lw = lambda1(dom, c, "weighted-laplacian").lambda1
        assert lw - lp == pytest.approx(2 * c * 2, abs=0.01)


def test_faber_krahn_examples():
    ball = faber_krahn_compare(GridDomain.disk(0.8, 1 / 64), 1.0)
    assert ball.holds and ball.equality
    off = faber_krahn_compare(GridDomain.disk(0.6, 1 / 64, center=(0.5, 0.2)), 1.0)
    assert off.holds and not off.equality
    assert off.lambda1_domain > off.lambda1_ball
    rect = faber_krahn_compare(GridDomain.rectangle(-0.4, 1.0, -0.5, 0.3, 1 / 64), 1.0, "weighted-laplacian")
    assert rect.holds


def test_disconnected_warns():
    dom = GridDomain.from_indicator(lambda x, y: (np.hypot(x - 0.6, y) < 0.25) | (np.hypot(x + 0.6, y) < 0.25),
                                    (-1, 1, -0.5, 0.5), 1 / 32)
    assert not dom.is_connected()
    with pytest.warns(RuntimeWarning):
        faber_krahn_compare(dom, 1.0)


def test_nonconvergence():
    dom = GridDomain.disk(0.5, 1 / 32)
    res = lambda1(dom, 1.0, max_iter=1)
    assert not res.converged
    with pytest.raises(ConvergenceError):
        lambda1(dom, 1.0, max_iter=1, raise_on_failure=True)


def test_mask_json_round_trip():
    dom = GridDomain.disk(0.4, 1 / 32, center=(0.1, 0.0))
    back = GridDomain.from_json(dom.to_json())
    assert np.array_equal(back.mask, dom.mask) and back.h == dom.h
    np.testing.assert_allclose(back.points(), dom.points())


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 1.2), st.floats(-0.4, 0.4), st.floats(-0.4, 0.4))
def test_volume_scaling(c, cx, cy):
    dom = GridDomain.disk(0.5, 1 / 32, center=(cx, cy))
    pts = dom.points()
    assert dom.weighted_volume(c) == pytest.approx(dom.h ** 2 * np.sum(np.exp(c * np.sum(pts ** 2, axis=1))))
