"""Adaptive Simpson quadrature, vectorised over many intervals at once.

Improper ends are mapped onto ``(0, 1]`` with ``x = a + (1/u - 1)``.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "QuadratureError",
    "integrate_many",
    "integrate",
    "integrate_to_infinity",
    "end_is_finite",
]

_EPS = np.finfo(float).eps
# beyond this, squares of the abscissa overflow and integrands stop being trustworthy
_REACH = 2.0 ** 500


class QuadratureError(RuntimeError):
    """Adaptive refinement hit its depth limit; ``error_bound`` is what was achieved."""

    def __init__(self, message: str, error_bound: float):
        super().__init__(f"{message} (achieved error bound {error_bound:.3e})")
        self.error_bound = error_bound


def _eval(f, x):
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        return np.asarray(f(x), dtype=float)


def integrate_many(
    f: Callable,
    a,
    b,
    tol: float = 1e-12,
    max_depth: int = 48,
) -> np.ndarray:
    """Integrate vectorised ``f`` over each ``[a[i], b[i]]``.

    Absolute tolerance ``tol`` per interval, relaxed to a few ulps of the
    running value when ``tol`` is below machine resolution.  Intervals whose
    integrand overflows return ``inf``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    a, b = np.broadcast_arrays(a, b)
    n = a.size
    result = np.zeros(n)
    if n == 0:
        return result
    sign = np.where(b < a, -1.0, 1.0)
    lo = np.minimum(a, b).ravel().copy()
    hi = np.maximum(a, b).ravel().copy()
    owner = np.arange(n)
    active = hi > lo
    lo, hi, owner = lo[active], hi[active], owner[active]
    mid = 0.5 * (lo + hi)
    flo, fmid, fhi = _eval(f, lo), _eval(f, mid), _eval(f, hi)
    whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi)
    seg_tol = np.full(lo.size, float(tol))
    depth = 0
    worst = 0.0
    while lo.size:
        lm = 0.5 * (lo + mid)
        rm = 0.5 * (mid + hi)
        flm, frm = _eval(f, lm), _eval(f, rm)
        left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi)
        both = left + right
        with np.errstate(invalid="ignore"):
            delta = both - whole
        bad = ~np.isfinite(both)
        thresh = 15.0 * np.maximum(seg_tol, 64.0 * _EPS * np.abs(both))
        done = bad | (np.abs(delta) <= thresh) | (hi - lo <= 4.0 * _EPS * np.maximum(np.abs(lo), 1.0))
        if depth >= max_depth:
            worst = max(worst, float(np.max(np.abs(delta[~done]))) if np.any(~done) else 0.0)
            done = np.ones_like(done)
        value = np.where(bad, np.inf, both + delta / 15.0)
        np.add.at(result, owner[done], value[done])
        keep = ~done
        if not np.any(keep):
            break
        lo, mid, hi = lo[keep], mid[keep], hi[keep]
        flo, fmid, fhi, flm, frm = flo[keep], fmid[keep], fhi[keep], flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        owner, seg_tol = owner[keep], seg_tol[keep] / 2.0
        # children: [lo, mid] and [mid, hi]; their midpoints were lm and rm
        lo, hi = np.concatenate([lo, mid]), np.concatenate([mid, hi])
        mid = 0.5 * (lo + hi)
        flo, fhi, fmid = (
            np.concatenate([flo, fmid]),
            np.concatenate([fmid, fhi]),
            np.concatenate([flm, frm]),
        )
        whole = np.concatenate([left, right])
        owner = np.concatenate([owner, owner])
        seg_tol = np.concatenate([seg_tol, seg_tol])
        depth += 1
    if worst > 15.0 * max(tol, 1e-300) * 1e6:
        raise QuadratureError("adaptive Simpson did not converge", worst)
    return (result * sign.ravel()).reshape(a.shape)


def integrate(f: Callable, a: float, b: float, tol: float = 1e-12, breakpoints: Sequence[float] = ()) -> float:
    """Integral of ``f`` over ``[a, b]`` (finite or infinite ends).

    ``breakpoints`` (kinks) are never straddled by a quadrature panel.
    Returns ``inf`` when an infinite end carries infinite mass.
    """
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, tol, breakpoints)
    cuts = sorted(p for p in breakpoints if a < p < b and math.isfinite(p))
    finite_left = a if math.isfinite(a) else (cuts[0] if cuts else (0.0 if b > 0 else b - 1.0))
    finite_right = b if math.isfinite(b) else (cuts[-1] if cuts else max(finite_left, 0.0))
    finite_right = max(finite_right, finite_left)
    total = 0.0
    if not math.isfinite(a):
        total += integrate_to_infinity(f, finite_left, -1, tol)
    if not math.isfinite(b):
        total += integrate_to_infinity(f, finite_right, +1, tol)
    knots = [finite_left] + [p for p in cuts if finite_left < p < finite_right] + [finite_right]
    knots = _graded(knots)
    if len(knots) > 1:
        total += float(np.sum(integrate_many(f, knots[:-1], knots[1:], tol)))
    return total


def _graded(knots: list[float], unit: float = 8.0) -> list[float]:
    """Split long panels with widths doubling away from both ends."""
    out = [knots[0]]
    for p, q in zip(knots[:-1], knots[1:]):
        width = q - p
        if width > 4 * unit:
            steps = []
            w = unit
            while 2 * w < width / 2:
                steps.append(w)
                w *= 2
            out.extend(p + w for w in steps)
            out.append(p + width / 2)
            out.extend(q - w for w in reversed(steps))
        out.append(q)
    return out


def _tail_integrand(f: Callable, start: float, direction: int) -> Callable:
    def g(u):
        u = np.asarray(u, dtype=float)
        safe = np.where(u > 0, u, 1.0)
        x = start + direction * (1.0 / safe - 1.0)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            val = _eval(f, x) / (safe * safe)
        if np.any(u <= 0):
            val = np.where(u > 0, val, _endpoint_limit(f, start, direction))
        return val

    return g


def _endpoint_limit(f: Callable, start: float, direction: int) -> float:
    # limit of f(x) x^2 as x -> +-inf, probed on a geometric sequence
    probes = []
    for k in (6, 8, 10):
        u = 10.0 ** (-k)
        x = start + direction * (1.0 / u - 1.0)
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            probes.append(float(_eval(f, x)) / (u * u))
    if not all(math.isfinite(p) for p in probes):
        return math.inf
    if abs(probes[-1] - probes[-2]) <= 1e-6 * max(1.0, abs(probes[-1])):
        return probes[-1]
    return probes[-1] if probes[-1] < probes[-2] else math.inf


def integrate_to_infinity(f: Callable, start: float, direction: int, tol: float = 1e-12) -> float:
    """``int_start^{+inf} f`` (direction=+1) or ``int_{-inf}^start f`` (direction=-1).

    Returns ``inf`` if the end has infinite measure.
    """
    if not end_is_finite(f, start, direction):
        return math.inf
    g = _tail_integrand(f, start, direction)
    # split (0, 1] geometrically so sharp decay near u = 0 is resolved
    edges = np.concatenate([[0.0], np.geomspace(1e-8, 1.0, 17)])
    with np.errstate(over="ignore", invalid="ignore"):
        val = float(np.sum(integrate_many(g, edges[:-1], edges[1:], tol)))
    if math.isfinite(val):
        return val
    # decay slower than x^-2: the substituted integrand blows up at u = 0
    return _dyadic_tail(f, start, direction, tol)


def _first_doubling(start: float) -> int:
    # first window must be wide enough to register at the magnitude of start
    scale = abs(start) * _EPS * 1024.0
    return max(0, math.ceil(math.log2(scale))) if scale > 1.0 else 0


def _dyadic_tail(f: Callable, start: float, direction: int, tol: float) -> float:
    total, prev = 0.0, math.nan
    k0 = _first_doubling(start)
    lo = 0.0
    for k in range(k0, k0 + 500):
        hi = 2.0 ** k
        if abs(start + direction * hi) > _REACH:
            break
        a, b = start + direction * lo, start + direction * hi
        piece = float(abs(integrate_many(f, [min(a, b)], [max(a, b)], tol)[0]))
        total += piece
        rho = piece / prev if prev > 0 else math.nan
        # geometric remainder once the dyadic pieces shrink steadily
        if k >= k0 + 3 and rho < 1 and piece * rho / (1 - rho) <= tol * max(total, 1e-300):
            return total + piece * rho / (1 - rho)
        prev, lo = piece, hi
    return math.inf


def end_is_finite(f: Callable, start: float, direction: int, max_doublings: int = 500) -> bool:
    """Dyadic truncation test for integrability of ``f`` towards ``direction * inf``.

    Declares the end infinite once the truncated integral exceeds ``1e12`` or
    never passes a Cauchy test at relative ``1e-10`` before ``|x|`` reaches
    ``2**500`` (further out, intermediate overflow makes integrands unreliable).
    """
    total = 0.0
    k0 = _first_doubling(start)
    lo = 0.0
    for k in range(k0, k0 + max_doublings):
        hi = 2.0 ** k
        if abs(start + direction * hi) > _REACH:
            return False
        a, b = (start + direction * lo, start + direction * hi)
        piece = float(abs(integrate_many(f, [min(a, b)], [max(a, b)], 1e-10)[0]))
        if not math.isfinite(piece):
            return False
        total += piece
        if total > 1e12:
            return False
        if k >= k0 + 3 and piece <= 1e-10 * max(total, 1e-300):
            return True
        lo = hi
    return False
