import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isodense.density import RadialDensity
from isodense.existence import (bumpy_density, divergence_verdict, growth_bound_check,
                                planar_annulus_inequality_check, planar_existence_verdict, zeta_sequence)
from isodense.symmetrize import ColumnarSet, Disk


def test_zeta_closed_form():
    seq = zeta_sequence(RadialDensity.from_expression("r^2", n=1), 1, 100)
    m = np.arange(101)
    # exact in floating point: every term is an integer below 2^53
    assert np.array_equal(seq.log_zeta, m ** 2 - (m + 2) ** 2 / 2)
    assert seq.zeta[0] == pytest.approx(math.exp(-2))
    assert seq.log_zeta[10] == 28.0
    assert divergence_verdict(seq) == "diverges"


def test_constant_density_bounded():
    seq = zeta_sequence(RadialDensity.from_expression("0", n=1), 1, 50)
    assert np.all(seq.zeta == 1.0)
    assert divergence_verdict(seq) == "bounded"


def test_double_exponential_fails():
    seq = zeta_sequence(RadialDensity.from_expression("exp(r)", n=1), 1, 200)
    m = np.arange(201.0)
    np.testing.assert_allclose(seq.log_zeta, np.exp(m) - np.exp(m + 2) / 2, rtol=1e-12)
    assert np.all(np.isfinite(seq.log_zeta))
    assert divergence_verdict(seq) == "bounded"


# expected verdicts from the growth bound with base (n+1)/n = 2: psi = o(2^{r/2}) diverges
@pytest.mark.parametrize("psi,expected", [
    ("r", "diverges"),
    ("r^2", "diverges"),
    ("r^3", "diverges"),
    ("exp(0.2*r)", "diverges"),   # e^{0.4} < 2
    ("exp(0.5*r)", "bounded"),    # e^{1.0} > 2
    ("1.2^r", "diverges"),        # 1.44 < 2
    ("1.6^r", "bounded"),         # 2.56 > 2
])
def test_growth_family_verdicts(psi, expected):
    # psi = r gives log zeta = m/2 - 1, which passes the threshold of 50 only after m = 102
    seq = zeta_sequence(RadialDensity.from_expression(psi, n=1), 1, 200)
    assert divergence_verdict(seq) == expected


def test_non_monotone_warns_and_bumps_fail():
    bumpy = bumpy_density()
    with pytest.warns(RuntimeWarning):
        radial = zeta_sequence(bumpy, 2, 60)
    annulus = zeta_sequence(bumpy, 2, 60, mode="annulus")
    assert divergence_verdict(annulus) != "diverges"
    assert divergence_verdict(radial) != "diverges"
    smooth = zeta_sequence(RadialDensity.from_expression("log(1 + r^2)", n=2), 2, 60)
    assert np.all(annulus.log_zeta <= smooth.log_zeta + 1e-12)


def test_callable_and_csv():
    seq = zeta_sequence(lambda r: np.asarray(r) ** 2, 1, 3)
    assert seq.to_csv().splitlines() == ["m,log_zeta", "0,-2.0", "1,-3.5", "2,-4.0", "3,-3.5"]


def test_growth_bound_examples():
    assert growth_bound_check(lambda r: r ** 2, 1, 10.0, 0.1, (0.0, 40.0))
    assert not growth_bound_check(np.exp, 1, 10.0, 0.1, (0.0, 40.0))
    assert growth_bound_check(lambda r: np.zeros_like(r), 1, 1.0, 0.5, (0.0, 100.0))
    with pytest.raises(ValueError):
        growth_bound_check(lambda r: r, 1, 1.0, 1.5, (0.0, 1.0))


def test_planar_verdict():
    assert planar_existence_verdict(RadialDensity.from_expression("r^2", n=1)) == "minimizers-exist"
    assert planar_existence_verdict(RadialDensity.from_expression("-r^2", n=1)) == "not-covered"
    assert planar_existence_verdict(RadialDensity.from_expression("r^2", n=2)) == "not-covered"


def test_annulus_examples():
    r0 = 1.0
    disk = ColumnarSet.from_shapes([Disk(r0 + 2, 0.0, 0.15)], h=1 / 128, c=0.1)
    res = planar_annulus_inequality_check(disk, r0)
    assert not res.skipped and res.holds
    # sliver along the circle of radius r0 + 1
    sliver = ColumnarSet.from_indicator(
        lambda x, y: (np.abs(np.hypot(x, y) - (r0 + 1)) < 0.03) & (y > 0) & (np.arctan2(y, x) < 0.5),
        (0.0, 2.5, 0.0, 1.5), h=1 / 128, c=0.1)
    res = planar_annulus_inequality_check(sliver, r0)
    assert res.skipped or res.holds
    touching = ColumnarSet.from_shapes([Disk(0.5, 0.0, 0.2)], h=1 / 128, c=0.1)
    with pytest.raises(ValueError):
        planar_annulus_inequality_check(touching, r0)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 2 * math.pi), st.floats(0.05, 0.4), st.floats(0.3, 1.5), st.floats(0.0, 0.3))
def test_annulus_random_disks(angle, radius, gap, c):
    r0 = 1.0
    R = r0 + gap + radius
    cs = ColumnarSet.from_shapes([Disk(R * math.cos(angle), R * math.sin(angle), radius)], h=1 / 64, c=c)
    res = planar_annulus_inequality_check(cs, r0)
    assert res.skipped or res.holds
