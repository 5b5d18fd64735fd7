"""Checkable existence criteria for radial densities.

Everything runs in log space: ``log zeta(m) = psi(m) - n/(n+1) psi(m+2)``.
Verdicts are numerical diagnostics over a finite horizon, never proofs.
"""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .density import RadialDensity
from .symmetrize import ColumnarSet, perimeter_allowance, weighted_perimeter_columnar, weighted_volume_columnar

__all__ = [
    "ZetaSequence",
    "zeta_sequence",
    "divergence_verdict",
    "growth_bound_check",
    "AnnulusCheck",
    "planar_annulus_inequality_check",
    "planar_existence_verdict",
    "bumpy_density",
    "DIVERGENCE_THRESHOLD",
]

DIVERGENCE_THRESHOLD = 50.0
ANNULUS_SAMPLES = 2001


@dataclass(frozen=True)
class ZetaSequence:
    m: np.ndarray
    log_zeta: np.ndarray
    mode: str
    n: int

    @property
    def zeta(self) -> np.ndarray:
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.log_zeta)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("m,log_zeta\n")
        for m, v in zip(self.m, self.log_zeta):
            buf.write(f"{int(m)},{float(v)!r}\n")
        return buf.getvalue()


def _psi(density):
    if isinstance(density, RadialDensity):
        return density.delta
    return density


def zeta_sequence(density, n: int, m_max: int, mode: str = "radial") -> ZetaSequence:
    """``log zeta(m)`` for ``m = 0..m_max``.

    ``mode="radial"`` uses ``psi(m) - n/(n+1) psi(m+2)``; ``mode="annulus"``
    replaces the two values by the minimum and maximum of ``psi`` over
    ``[m, m+2]`` (dense sampling), which is the variant that stays
    meaningful for non-monotone densities.  ``density`` is a
    :class:`RadialDensity` or a vectorised ``psi(r)``.
    """
    if n < 1 or m_max < 0:
        raise ValueError("need n >= 1 and m_max >= 0")
    psi = _psi(density)
    ratio = n / (n + 1)
    m = np.arange(m_max + 1)
    if mode == "radial":
        with np.errstate(over="ignore"):
            lo = np.asarray(psi(m.astype(float)), dtype=float)
            hi = np.asarray(psi(m.astype(float) + 2.0), dtype=float)
        grid = np.linspace(0.0, m_max + 2.0, 16 * (m_max + 2) + 1)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.asarray(psi(grid), dtype=float)
        if np.any(np.diff(vals) < -1e-12 * np.maximum(1.0, np.abs(vals[1:]))):
            warnings.warn("density is not nondecreasing in r; the radial formula may mislead, "
                          "consider mode='annulus'", RuntimeWarning, stacklevel=2)
    elif mode == "annulus":
        lo = np.empty(m.size)
        hi = np.empty(m.size)
        for i, mm in enumerate(m):
            r = np.linspace(mm, mm + 2.0, ANNULUS_SAMPLES)
            with np.errstate(over="ignore"):
                v = np.asarray(psi(r), dtype=float)
            lo[i], hi[i] = v.min(), v.max()
    else:
        raise ValueError(f"unknown mode {mode!r}")
    log_zeta = lo - ratio * hi
    if not np.all(np.isfinite(log_zeta)):
        raise OverflowError("psi overflowed on the requested range")
    return ZetaSequence(m, log_zeta, mode, n)


def divergence_verdict(seq: ZetaSequence, horizon: int = 10) -> str:
    """``"diverges"``, ``"bounded"`` or ``"inconclusive"`` from the last ``horizon`` values.

    Diverges: ``log zeta(m_max) > 50``, strictly increasing tail with
    non-negative second differences (linear growth of ``log zeta`` already
    sends ``zeta`` to infinity).  Bounded: tail below 50 and non-increasing.
    """
    if horizon < 3 or horizon > seq.log_zeta.size:
        raise ValueError(f"horizon must be in [3, {seq.log_zeta.size}]")
    tail = seq.log_zeta[-horizon:]
    d1 = np.diff(tail)
    d2 = np.diff(tail, 2)
    scale = 1e-12 * max(1.0, float(np.max(np.abs(tail))))
    if tail[-1] > DIVERGENCE_THRESHOLD and np.all(d1 > 0) and np.all(d2 >= -scale):
        return "diverges"
    if np.max(tail) <= DIVERGENCE_THRESHOLD and np.all(d1 <= scale):
        return "bounded"
    return "inconclusive"


def growth_bound_check(density, n: int, C: float, eps: float, r_window: tuple[float, float],
                       samples: int = 4001) -> bool:
    """``psi(r) <= C ((n+1)/n - eps)^(r/2)`` at every sample of the window."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    r0, r1 = map(float, r_window)
    r = np.linspace(r0, r1, samples)
    base = (n + 1) / n - eps
    with np.errstate(over="ignore"):
        psi = np.asarray(_psi(density)(r), dtype=float)
    # compare logs where psi is positive to stay finite for huge psi
    pos = psi > 0
    ok = np.ones(r.size, dtype=bool)
    if C <= 0:
        ok[pos] = False
    else:
        with np.errstate(divide="ignore"):
            ok[pos] = np.log(psi[pos]) <= math.log(C) + 0.5 * r[pos] * math.log(base)
    return bool(np.all(ok))


@dataclass(frozen=True)
class AnnulusCheck:
    perimeter: float
    volume: float
    f_r0: float
    holds: bool | None
    skipped: bool
    reason: str = ""

    def to_dict(self) -> dict:
        return {"perimeter": self.perimeter, "volume": self.volume, "f_r0": self.f_r0,
                "holds": self.holds, "skipped": self.skipped, "reason": self.reason}


def _min_distance(cs: ColumnarSet) -> float:
    P0, P1, T0, T1 = cs.rectangles()
    if P0.size == 0:
        return math.inf
    dp = np.maximum(0.0, np.maximum(P0, -P1))
    dt = np.maximum(0.0, np.maximum(T0, -T1))
    return float(np.min(np.hypot(dp, dt)))


def planar_annulus_inequality_check(cs: ColumnarSet, r0: float) -> AnnulusCheck:
    """Both sides of ``P^2 >= 2 f(r0) vol`` for a set outside the disk of radius ``r0``.

    The density is ``exp(c |x|^2)`` with ``c >= 0`` (nondecreasing).  Sets
    with ``P >= 2 pi r0 f(r0)`` are outside the inequality's hypothesis and
    are reported as skipped.  The perimeter side gets the estimator's
    comparison slack ``h P``.
    """
    if cs.c < 0:
        raise ValueError("density exp(c|x|^2) must be nondecreasing (c >= 0)")
    if cs.is_empty():
        raise ValueError("empty set")
    if _min_distance(cs) < r0:
        raise ValueError(f"set reaches inside |x| < {r0}")
    per = weighted_perimeter_columnar(cs)
    vol = weighted_volume_columnar(cs)
    f_r0 = math.exp(cs.c * r0 * r0)
    if per >= 2 * math.pi * r0 * f_r0:
        return AnnulusCheck(per, vol, f_r0, None, True, "perimeter is not below 2 pi r0 f(r0)")
    slack = perimeter_allowance(cs)
    return AnnulusCheck(per, vol, f_r0, (per + slack) ** 2 >= 2 * f_r0 * vol, False)


def planar_existence_verdict(density: RadialDensity, r_max: float = 50.0, samples: int = 2001) -> str:
    """Metadata verdict for planar radial densities.

    ``"minimizers-exist"`` when the plane density is nondecreasing in ``r``
    and unbounded (sampled up to ``r_max``), otherwise ``"not-covered"``.
    """
    if density.n != 1:
        return "not-covered"
    r = np.linspace(0.0, r_max, samples)
    with np.errstate(over="ignore"):
        psi = np.asarray(density.delta(r), dtype=float)
    monotone = bool(np.all(np.diff(psi) >= -1e-12 * np.maximum(1.0, np.abs(psi[1:]))))
    growing = bool(psi[-1] - psi[0] > math.log(1e6)) or not math.isfinite(psi[-1])
    return "minimizers-exist" if monotone and growing else "not-covered"


def bumpy_density(n: int = 2, depth: float = 0.999, sharpness: int = 40) -> RadialDensity:
    """``(1 + r^2)`` with deep narrow dips at every integer radius.

    Without the dips the radial criterion diverges (slowly); the dips make
    ``f(m)`` tiny at each integer, so the criterion fails although ``f``
    still grows on average.
    """
    text = f"log(1 + r^2) + log(1 - {depth!r}*cos(pi*r)^{int(sharpness)})"
    return RadialDensity.from_expression(text, n=n)
