"""Densities ``f = exp(psi)`` on the line and radial densities on R^(n+1).

Weighted volume of an open set is ``int f``; in dimension one the weighted
perimeter of a finite union of intervals is ``f`` summed over its finite
boundary points.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq

from . import expr as ex
from .quadrature import end_is_finite, integrate, integrate_many, integrate_to_infinity

__all__ = [
    "DensityModel",
    "RadialDensity",
    "Region1D",
    "MeasureTable",
    "ShapeClass",
    "weighted_volume",
    "weighted_perimeter_1d",
    "build_measure_table",
    "classify_shape",
    "builtin_density",
    "BUILTIN_DENSITIES",
    "load_density_csv",
    "density_from_spec",
]

INF = math.inf
SHAPE_KINDS = (
    "monotone-increasing",
    "monotone-decreasing",
    "increasing-decreasing",
    "decreasing-increasing",
    "unresolved",
)
CONVEXITY_KINDS = ("log-concave", "strictly-log-concave", "log-convex", "strictly-log-convex")


def _nudge(x, side: int, ulps: int = 4):
    target = math.inf if side > 0 else -math.inf
    for _ in range(ulps):
        x = np.nextafter(x, target)
    return x


@dataclass(frozen=True, eq=False)
class DensityModel:
    """A positive density ``f = exp(psi)`` on an interval of the real line.

    The evaluators are vectorised.  ``kinks`` are points where ``psi`` is
    only one-sided differentiable; quadrature never straddles them.
    """

    psi_fn: Callable
    dpsi_fn: Callable
    d2psi_fn: Callable
    domain: tuple[float, float] = (-INF, INF)
    kinks: tuple[float, ...] = ()
    form: str = "expression"
    dimension: int = 1
    declared_class: str | None = None
    declared_convexity: str | None = None
    declared_end_finite: tuple[bool | None, bool | None] = (None, None)
    label: str = ""
    source: str | None = field(default=None, repr=False)

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise ValueError(f"empty domain {self.domain}")
        if self.declared_class is not None and self.declared_class not in SHAPE_KINDS[:-1]:
            raise ValueError(f"unknown shape class {self.declared_class!r}")
        if self.declared_convexity is not None and self.declared_convexity not in CONVEXITY_KINDS:
            raise ValueError(f"unknown convexity class {self.declared_convexity!r}")

    # -- evaluators ---------------------------------------------------------
    def psi(self, x):
        return self.psi_fn(x)

    def f(self, x):
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.psi_fn(x))

    def dpsi(self, x, side: int = 0):
        """``psi'``; ``side=+1``/``-1`` gives the right/left derivative at kinks."""
        if side == 0:
            return self.dpsi_fn(x)
        return self.dpsi_fn(_nudge(np.asarray(x, dtype=float), side) if np.ndim(x) else float(_nudge(float(x), side)))

    def d2psi(self, x):
        return self.d2psi_fn(x)

    # -- constructors -------------------------------------------------------
    @classmethod
    def from_expression(
        cls,
        text: str,
        params: Mapping[str, float] | None = None,
        var: str = "x",
        domain: tuple[float, float] = (-INF, INF),
        kinks: Sequence[float] | None = None,
        kink_window: float = 64.0,
        **meta,
    ) -> "DensityModel":
        """Density whose log ``psi`` is given by an expression in ``var``."""
        params = dict(params or {})
        ast = ex.parse(text, params=tuple(params))
        d1 = ex.differentiate(ast, var)
        d2 = ex.differentiate(d1, var)
        psi = ex.compile_expr(ast, params)
        if kinks is None:
            kinks = _detect_kinks(ast, params, domain, kink_window)
        meta.setdefault("label", text)
        return cls(
            psi,
            ex.compile_expr(d1, params),
            ex.compile_expr(d2, params),
            domain=domain,
            kinks=tuple(sorted(kinks)),
            form="expression",
            source=text,
            **meta,
        )

    @classmethod
    def from_f_expression(
        cls,
        text: str,
        params: Mapping[str, float] | None = None,
        var: str = "x",
        domain: tuple[float, float] = (-INF, INF),
        kink_window: float = 64.0,
        **meta,
    ) -> "DensityModel":
        """Density given as ``f`` itself; ``psi = log f`` is taken numerically.

        ``f`` underflowing to zero far out gives ``psi = -inf`` rather than a
        domain error; a genuinely negative ``f`` still raises.
        """
        params = dict(params or {})
        ast = ex.parse(text, params=tuple(params))
        d1 = ex.differentiate(ast, var)
        f0 = ex.compile_expr(ast, params)
        f1 = ex.compile_expr(d1, params)
        f2 = ex.compile_expr(ex.differentiate(d1, var), params)

        def psi(x):
            v = f0(x)
            if np.any(np.asarray(v) < 0):
                raise ex.ExprDomainError("density expression is negative")
            with np.errstate(divide="ignore"):
                return np.log(v)

        def dpsi(x):
            with np.errstate(divide="ignore", invalid="ignore"):
                return f1(x) / f0(x)

        def d2psi(x):
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                v = f0(x)
                g = f1(x) / v
                return f2(x) / v - g * g

        meta.setdefault("label", text)
        return cls(psi, dpsi, d2psi, domain=domain, kinks=tuple(_detect_kinks(ast, params, domain, kink_window)),
                   form="expression", source=text, **meta)

    @classmethod
    def from_samples(cls, t, psi, domain: tuple[float, float] | None = None, **meta) -> "DensityModel":
        """Tabulated ``psi`` samples, interpolated by a monotone cubic.

        Outside the sample range ``psi`` is continued linearly with the end slopes.
        """
        t = np.asarray(t, dtype=float)
        psi = np.asarray(psi, dtype=float)
        if t.ndim != 1 or t.shape != psi.shape or t.size < 2:
            raise ValueError("need two equal-length 1-D sample arrays with at least two points")
        if np.any(np.diff(t) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        if not np.all(np.isfinite(psi)):
            raise ValueError("psi samples must be finite")
        interp = PchipInterpolator(t, psi, extrapolate=True)
        d1 = interp.derivative(1)
        d2 = interp.derivative(2)
        t0, t1 = t[0], t[-1]
        s0, s1 = float(d1(t0)), float(d1(t1))
        p0, p1 = float(psi[0]), float(psi[-1])

        def _wrap(inner, left, right):
            def g(x):
                xa = np.asarray(x, dtype=float)
                out = np.where(xa < t0, left(xa), np.where(xa > t1, right(xa), inner(np.clip(xa, t0, t1))))
                return float(out) if np.ndim(x) == 0 else out
            return g

        psi_fn = _wrap(interp, lambda x: p0 + s0 * (x - t0), lambda x: p1 + s1 * (x - t1))
        d1_fn = _wrap(d1, lambda x: s0 + 0 * x, lambda x: s1 + 0 * x)
        d2_fn = _wrap(d2, lambda x: 0 * x, lambda x: 0 * x)
        meta.setdefault("label", "tabulated")
        return cls(psi_fn, d1_fn, d2_fn, domain=domain or (-INF, INF), form="tabulated", **meta)

    @classmethod
    def from_pieces(
        cls,
        breaks: Sequence[float],
        texts: Sequence[str],
        params: Mapping[str, float] | None = None,
        **meta,
    ) -> "DensityModel":
        """Piecewise ``psi``: ``texts[i]`` applies between ``breaks[i-1]`` and ``breaks[i]``."""
        if len(texts) != len(breaks) + 1:
            raise ValueError("need one more expression than break points")
        params = dict(params or {})
        asts = [ex.parse(t, params=tuple(params)) for t in texts]
        fns = [
            (ex.compile_expr(a, params), ex.compile_expr(ex.differentiate(a, "x"), params),
             ex.compile_expr(ex.differentiate(ex.differentiate(a, "x"), "x"), params))
            for a in asts
        ]
        edges = np.asarray(breaks, dtype=float)

        def pick(k):
            def g(x):
                xa = np.asarray(x, dtype=float)
                idx = np.searchsorted(edges, xa, side="right")
                out = np.empty(xa.shape)
                for i, fn in enumerate(fns):
                    sel = idx == i
                    if np.any(sel):
                        out[sel] = fn[k](xa[sel])
                return float(out) if np.ndim(x) == 0 else out
            return g

        kinks = set(float(b) for b in breaks)
        lo_hi = meta.get("domain", (-INF, INF))
        for a in asts:
            kinks.update(_detect_kinks(a, params, lo_hi, 64.0))
        meta.setdefault("label", " | ".join(texts))
        return cls(pick(0), pick(1), pick(2), kinks=tuple(sorted(kinks)), form="piecewise", **meta)

    def restricted(self, domain: tuple[float, float]) -> "DensityModel":
        lo, hi = domain
        return replace(self, domain=(float(lo), float(hi)), kinks=tuple(k for k in self.kinks if lo < k < hi))


def _detect_kinks(ast, params, domain, window) -> list[float]:
    lo = max(domain[0], -window)
    hi = min(domain[1], window)
    out: set[float] = set()
    for arg in ex.abs_arguments(ast):
        g = ex.compile_expr(arg, params)
        xs = np.linspace(lo, hi, 8193)
        try:
            vals = g(xs)
        except ex.ExprDomainError:
            continue
        zero = vals == 0
        out.update(float(v) for v in xs[zero])
        flips = np.nonzero((np.sign(vals[:-1]) * np.sign(vals[1:])) < 0)[0]
        for i in flips:
            out.add(float(brentq(g, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)))
    return sorted(out)


@dataclass(frozen=True, eq=False)
class RadialDensity:
    """``psi(x) = delta(|x|)`` on R^(n+1); evaluators are for ``delta`` on ``[0, inf)``."""

    delta: Callable
    ddelta: Callable
    d2delta: Callable
    n: int = 1
    label: str = ""

    @classmethod
    def from_expression(cls, text: str, n: int = 1, params: Mapping[str, float] | None = None) -> "RadialDensity":
        params = dict(params or {})
        ast = ex.parse(text, params=tuple(params))
        var = "r" if "r" in ex.variables(ast) or not ex.variables(ast) else "x"
        d1 = ex.differentiate(ast, var)
        d2 = ex.differentiate(d1, var)
        return cls(
            ex.compile_expr(ast, params),
            ex.compile_expr(d1, params),
            ex.compile_expr(d2, params),
            n=int(n),
            label=text,
        )

    def f(self, r):
        with np.errstate(over="ignore", under="ignore"):
            return np.exp(self.delta(r))

    def psi_at(self, points):
        """``psi`` at points of R^(n+1) given as an array with last axis n+1."""
        return self.delta(np.linalg.norm(np.asarray(points, dtype=float), axis=-1))

    def grad_psi(self, point):
        p = np.asarray(point, dtype=float)
        r = float(np.linalg.norm(p))
        if r == 0:
            return np.zeros_like(p)
        return self.ddelta(r) * p / r

    def hessian_psi(self, point):
        p = np.asarray(point, dtype=float)
        r = float(np.linalg.norm(p))
        dim = p.size
        if r == 0:
            return self.d2delta(0.0) * np.eye(dim)
        u = p / r
        proj = np.outer(u, u)
        return self.d2delta(r) * proj + self.ddelta(r) / r * (np.eye(dim) - proj)

    def profile(self) -> DensityModel:
        """The radial profile ``exp(delta)`` as a density on ``[0, inf)``."""
        return DensityModel(self.delta, self.ddelta, self.d2delta, domain=(0.0, INF), form="radial",
                            dimension=self.n + 1, label=self.label)


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Region1D:
    """Finite union of disjoint open intervals, sorted; touching pieces are merged."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        merged: list[list[float]] = []
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"interval ({a}, {b}) is empty")
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        object.__setattr__(self, "intervals", tuple((a, b) for a, b in merged))

    @classmethod
    def of(cls, *intervals: tuple[float, float]) -> "Region1D":
        return cls(tuple(intervals))

    def boundary_points(self) -> list[float]:
        return [p for iv in self.intervals for p in iv if math.isfinite(p)]

    def complement(self, domain: tuple[float, float] = (-INF, INF)) -> "Region1D":
        lo, hi = domain
        out = []
        cur = lo
        for a, b in self.intervals:
            if a > cur:
                out.append((cur, a))
            cur = max(cur, b)
        if cur < hi:
            out.append((cur, hi))
        return Region1D(tuple(out))

    def __len__(self):
        return len(self.intervals)


def weighted_volume(density: DensityModel, region: Region1D, tol: float = 1e-12) -> float:
    """``int_region f``; ``inf`` when an unbounded piece reaches an infinite-measure end."""
    lo, hi = density.domain
    total = 0.0
    for a, b in region.intervals:
        if a < lo or b > hi:
            raise ValueError(f"interval ({a}, {b}) leaves the domain {density.domain}")
        piece = integrate(density.f, a, b, tol=tol, breakpoints=density.kinks)
        if not math.isfinite(piece):
            return INF
        total += piece
    return total


def weighted_perimeter_1d(density: DensityModel, region: Region1D, boundary_policy: str = "count-all") -> float:
    """Sum of ``f`` over the finite boundary points of ``region``.

    With ``boundary_policy="free-at-domain-endpoints"`` the endpoints of the
    density's domain cost nothing (perimeter relative to the open domain).
    """
    if boundary_policy not in ("count-all", "free-at-domain-endpoints"):
        raise ValueError(f"unknown boundary policy {boundary_policy!r}")
    lo, hi = density.domain
    total = 0.0
    for p in region.boundary_points():
        if boundary_policy == "free-at-domain-endpoints" and p in (lo, hi):
            continue
        total += float(density.f(p))
    return total


# ---------------------------------------------------------------------------
# cumulative measure


class MeasureTable:
    """Cumulative weighted measure ``m(x) = int_anchor^x f`` with fast inversion.

    Knot values are computed once; queries add one short adaptive-Simpson
    panel from the nearest knot.  Inversion is a bracketed Newton iteration
    (``m' = f``).
    """

    DENSE_HALF_WIDTH = 8.0
    DENSE_STEP = 0.25
    MAX_REACH = 2.0 ** 62
    HUGE = 1e12

    def __init__(self, density: DensityModel, tol: float = 1e-12, anchor: float | None = None):
        self.density = density
        self.tol = tol
        lo, hi = density.domain
        if anchor is None:
            anchor = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
            anchor = min(max(anchor, lo), hi)
        self.anchor = float(anchor)
        f = density.f

        right = self._side_knots(+1, hi)
        left = self._side_knots(-1, lo)
        knots = sorted(set(left + [self.anchor] + right + [k for k in density.kinks if lo < k < hi]))
        knots = np.asarray(knots, dtype=float)
        seg = integrate_many(f, knots[:-1], knots[1:], tol)
        # drop knots beyond an overflowing segment
        finite = np.isfinite(seg)
        ia = int(np.searchsorted(knots, self.anchor))
        keep_lo, keep_hi = 0, len(knots) - 1
        for i in range(ia - 1, -1, -1):
            if not finite[i]:
                keep_lo = i + 1
                break
        for i in range(ia, len(seg)):
            if not finite[i]:
                keep_hi = i
                break
        knots = knots[keep_lo: keep_hi + 1]
        seg = seg[keep_lo: keep_hi]
        # accumulate outward from the anchor so huge tails cannot swamp the core
        ia = int(np.searchsorted(knots, self.anchor))
        cum = np.concatenate([-np.cumsum(seg[:ia][::-1])[::-1], [0.0], np.cumsum(seg[ia:])])
        self.knots = knots
        self.cum = cum

        decl_l, decl_r = density.declared_end_finite
        if math.isfinite(lo):
            self.left_finite = True
        elif -cum[0] > self.HUGE:
            self.left_finite = False
        elif decl_l is not None:
            self.left_finite = bool(decl_l)
        else:
            self.left_finite = end_is_finite(f, float(knots[0]), -1)
        if math.isfinite(hi):
            self.right_finite = True
        elif cum[-1] > self.HUGE:
            self.right_finite = False
        elif decl_r is not None:
            self.right_finite = bool(decl_r)
        else:
            self.right_finite = end_is_finite(f, float(knots[-1]), +1)

        self._tail_left = 0.0
        self._tail_right = 0.0
        if self.left_finite and knots[0] > lo:
            if math.isfinite(lo):
                self._tail_left = float(integrate(f, lo, knots[0], tol, density.kinks))
            else:
                self._tail_left = integrate_to_infinity(f, float(knots[0]), -1, tol)
        if self.right_finite and knots[-1] < hi:
            if math.isfinite(hi):
                self._tail_right = float(integrate(f, knots[-1], hi, tol, density.kinks))
            else:
                self._tail_right = integrate_to_infinity(f, float(knots[-1]), +1, tol)
        self.mass_left = (-cum[0] + self._tail_left) if self.left_finite else INF
        self.mass_right = (cum[-1] + self._tail_right) if self.right_finite else INF
        self.total_measure = self.mass_left + self.mass_right

    def _side_knots(self, direction: int, bound: float) -> list[float]:
        f = self.density.f
        a = self.anchor
        out = []
        step = self.DENSE_STEP
        x = a
        while True:
            x = x + direction * step
            if (x - bound) * direction >= 0:
                if math.isfinite(bound):
                    out.append(bound)
                break
            out.append(x)
            dist = abs(x - a)
            if dist >= self.DENSE_HALF_WIDTH:
                step = dist  # geometric doubling beyond the dense core
            if dist >= self.MAX_REACH:
                break
            fx = float(f(x))
            if not math.isfinite(fx):
                break
            if dist >= self.DENSE_HALF_WIDTH and fx * max(dist, 1.0) < 1e-18:
                # negligible remaining tail; integrated separately
                break
        return out

    # -- queries --------------------------------------------------------------
    @property
    def end_finiteness(self) -> tuple[bool, bool]:
        return self.left_finite, self.right_finite

    def cumulative(self, x):
        """``m(x)``, signed, vectorised.  ``x = -inf/+inf`` give the end masses."""
        xa = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
        out = np.empty(xa.shape)
        k0, k1 = self.knots[0], self.knots[-1]
        inside = (xa >= k0) & (xa <= k1)
        if np.any(inside):
            xi = xa[inside]
            k = np.clip(np.searchsorted(self.knots, xi, side="right") - 1, 0, len(self.knots) - 1)
            out[inside] = self.cum[k] + integrate_many(self.density.f, self.knots[k], xi, self.tol)
        for i in np.nonzero(~inside)[0]:
            out[i] = self._outside(float(xa[i]))
        return float(out[0]) if np.ndim(x) == 0 else out.reshape(np.shape(x))

    def _outside(self, x: float) -> float:
        # integrate from the nearest knot; tail integrals per query were far slower
        lo, hi = self.density.domain
        f = self.density.f
        if x < self.knots[0]:
            if x <= lo:
                return -self.mass_left
            return self.cum[0] - integrate(f, x, self.knots[0], self.tol, self.density.kinks)
        if x >= hi:
            return self.mass_right
        return self.cum[-1] + integrate(f, self.knots[-1], x, self.tol, self.density.kinks)

    def from_left(self, x):
        """Weighted measure of ``(lo, x)``; requires a finite left end."""
        if not self.left_finite:
            raise ValueError("left end has infinite measure")
        return self.cumulative(x) + self.mass_left

    def inverse(self, u):
        """Point ``x`` with ``m(x) = u`` (vectorised); end masses map to the domain ends."""
        ua = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        out = np.empty(ua.shape)
        lo, hi = self.density.domain
        c0, c1 = self.cum[0], self.cum[-1]
        inside = (ua >= c0) & (ua <= c1)
        if np.any(inside):
            out[inside] = self._newton(ua[inside])
        for i in np.nonzero(~inside)[0]:
            ui = float(ua[i])
            # within quadrature error of an end mass counts as the end itself
            slack = 1e-12 * max(1.0, abs(ui))
            if ui <= -self.mass_left + slack:
                out[i] = lo
            elif ui >= self.mass_right - slack:
                out[i] = hi
            else:
                out[i] = self._inverse_outside(ui)
        return float(out[0]) if np.ndim(u) == 0 else out.reshape(np.shape(u))

    def _newton(self, u: np.ndarray) -> np.ndarray:
        f = self.density.f
        k = np.clip(np.searchsorted(self.cum, u, side="right") - 1, 0, len(self.knots) - 2)
        a, b = self.knots[k], self.knots[k + 1]
        ca, cb = self.cum[k], self.cum[k + 1]
        span = np.where(cb > ca, cb - ca, 1.0)
        x = a + (u - ca) / span * (b - a)
        x = np.clip(x, a, b)
        F = ca + integrate_many(f, a, x, self.tol) - u
        lo_b, hi_b = a.copy(), b.copy()
        scale = np.maximum(1.0, np.abs(u))
        for _ in range(80):
            lo_b = np.where(F <= 0, np.maximum(lo_b, x), lo_b)
            hi_b = np.where(F >= 0, np.minimum(hi_b, x), hi_b)
            todo = (np.abs(F) > 1e-14 * scale) & (hi_b - lo_b > 2 * np.finfo(float).eps * np.maximum(1.0, np.abs(x)))
            if not np.any(todo):
                break
            fx = f(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                step = np.where(fx > 0, F / fx, np.nan)
            xn = x - step
            bad = ~np.isfinite(xn) | (xn <= lo_b) | (xn >= hi_b)
            xn = np.where(bad, 0.5 * (lo_b + hi_b), xn)
            xn = np.where(todo, xn, x)
            F = F + integrate_many(f, x, xn, self.tol)
            x = xn
        return x

    def _inverse_outside(self, u: float) -> float:
        lo, hi = self.density.domain
        if u < self.cum[0]:
            edge = self.knots[0]
            width = 1.0
            while True:
                cand = max(edge - width, lo)
                cu = self.cumulative(cand)
                if cu <= u or cand == lo:
                    break
                if not math.isfinite(cu) or width > 2.0 ** 60:
                    return lo  # target lies beyond the reach of the quadrature
                width *= 2.0
            return brentq(lambda t: self.cumulative(t) - u, cand, edge, xtol=1e-15, rtol=1e-15)
        edge = self.knots[-1]
        width = 1.0
        while True:
            cand = min(edge + width, hi)
            cu = self.cumulative(cand)
            if cu >= u or cand == hi:
                break
            if not math.isfinite(cu) or width > 2.0 ** 60:
                return hi  # target lies beyond the reach of the quadrature
            width *= 2.0
        return brentq(lambda t: self.cumulative(t) - u, edge, cand, xtol=1e-15, rtol=1e-15)


def build_measure_table(density: DensityModel, tol: float = 1e-12) -> MeasureTable:
    return MeasureTable(density, tol=tol)


# ---------------------------------------------------------------------------
# shape classification


@dataclass(frozen=True)
class ShapeClass:
    kind: str
    change_point: float | None = None
    constant: bool = False

    @property
    def resolved(self) -> bool:
        return self.kind != "unresolved"


def classify_shape(
    density: DensityModel,
    window: tuple[float, float] | None = None,
    samples: int = 2049,
    zero_tol: float = 1e-12,
) -> ShapeClass:
    """Detect monotone / increasing-decreasing / decreasing-increasing shape from ``psi'`` signs.

    A declared class short-circuits detection.  Flat stretches are allowed
    (non-strict monotonicity); more than one sign change is ``unresolved``.
    """
    lo, hi = density.domain
    if window is None:
        window = (max(lo, -32.0), min(hi, 32.0))
    wlo, whi = window
    if density.declared_class is not None:
        return ShapeClass(density.declared_class, _declared_change_point(density, window))
    xs = np.linspace(wlo, whi, samples)
    # sample strictly inside a closed domain so one-sided values are meaningful
    pts: list[tuple[float, float]] = []
    for x in xs:
        pts.append((float(x), 0.0))
    d = np.asarray(density.dpsi(xs), dtype=float)
    vals = list(d)
    for k in density.kinks:
        if wlo <= k <= whi:
            pts.append((k, -0.5))
            vals.append(float(density.dpsi(k, side=-1)))
            pts.append((k, 0.5))
            vals.append(float(density.dpsi(k, side=+1)))
    order = sorted(range(len(pts)), key=lambda i: pts[i])
    xs_all = [pts[i][0] for i in order]
    ds = np.asarray([vals[i] for i in order])
    if not np.all(np.isfinite(ds)):
        return ShapeClass("unresolved")
    sign = np.where(ds > zero_tol, 1, np.where(ds < -zero_tol, -1, 0))
    nz = [(x, s) for x, s in zip(xs_all, sign) if s != 0]
    if not nz:
        return ShapeClass("monotone-increasing", None, constant=True)
    runs = [nz[0][1]]
    for _, s in nz[1:]:
        if s != runs[-1]:
            runs.append(s)
    if runs == [1]:
        return ShapeClass("monotone-increasing")
    if runs == [-1]:
        return ShapeClass("monotone-decreasing")
    if len(runs) != 2:
        return ShapeClass("unresolved")
    kind = "increasing-decreasing" if runs[0] == 1 else "decreasing-increasing"
    # bracket: last point of the first run, first point of the second run
    first = runs[0]
    i_last = max(i for i, (_, s) in enumerate(nz) if s == first)
    x_a, x_b = nz[i_last][0], nz[i_last + 1][0]
    return ShapeClass(kind, _refine_change_point(density, x_a, x_b, xs_all, sign, zero_tol))


def _refine_change_point(density, x_a, x_b, xs_all, sign, zero_tol) -> float:
    if x_a == x_b:
        return float(x_a)  # a kink carries the sign change
    for k in density.kinks:
        if x_a <= k <= x_b:
            return float(k)
    # a flat top/bottom between the bracketing samples
    flat = [x for x, s in zip(xs_all, sign) if s == 0 and x_a < x < x_b]
    if len(flat) >= 2:
        return 0.5 * (flat[0] + flat[-1])
    try:
        return float(brentq(lambda t: float(density.dpsi(t)), x_a, x_b, xtol=1e-14))
    except ValueError:
        return 0.5 * (x_a + x_b)


def _declared_change_point(density: DensityModel, window) -> float | None:
    if density.declared_class in ("increasing-decreasing", "decreasing-increasing"):
        xs = np.linspace(window[0], window[1], 4097)
        fx = density.f(xs)
        i = int(np.argmax(fx) if density.declared_class == "increasing-decreasing" else np.argmin(fx))
        return float(xs[i])
    return None


# ---------------------------------------------------------------------------
# built-ins and ingestion

LOG6 = math.log(6.0)


def _gauss():
    return DensityModel.from_expression("-pi*x^2", label="gauss", declared_convexity="strictly-log-concave")


def _exp_square():
    return DensityModel.from_expression("x^2", label="exp-square", declared_convexity="strictly-log-convex")


def _laplace():
    return DensityModel.from_expression("-abs(x)", label="laplace", declared_convexity="log-concave")


def _houseroof_flat():
    return DensityModel.from_pieces([LOG6], ["-abs(x)", "-log(6)"], label="houseroof-flat")


def _houseroof_decay():
    return DensityModel.from_pieces(
        [LOG6], ["-abs(x)", "log(1/9 + 1/(x - log(6) + 18))"], label="houseroof-decay"
    )


BUILTIN_DENSITIES: dict[str, Callable[[], DensityModel]] = {
    "gauss": _gauss,
    "exp-square": _exp_square,
    "laplace": _laplace,
    "houseroof-flat": _houseroof_flat,
    "houseroof-decay": _houseroof_decay,
}


def builtin_density(name: str) -> DensityModel:
    try:
        return BUILTIN_DENSITIES[name]()
    except KeyError:
        raise KeyError(f"unknown density name {name!r}; choose from {sorted(BUILTIN_DENSITIES)}") from None


def load_density_csv(path, **meta) -> DensityModel:
    """Read two columns ``t, psi`` (header optional) into a tabulated density."""
    ts, ps = [], []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) < 2:
                raise ValueError(f"{path}:{lineno}: expected two columns")
            try:
                t, p = float(row[0]), float(row[1])
            except ValueError:
                if lineno == 1 and not ts:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: non-numeric value") from None
            ts.append(t)
            ps.append(p)
    meta.setdefault("label", str(path))
    return DensityModel.from_samples(ts, ps, **meta)


def density_from_spec(
    spec: str,
    params: Mapping[str, float] | None = None,
    domain: tuple[float, float] = (-INF, INF),
    as_psi: bool = False,
) -> DensityModel:
    """Resolve a CLI density spec: built-in name, ``*.csv`` path, or expression.

    Expressions are read as the density ``f`` itself (``exp(x)``); a leading
    ``exp(...)`` is stripped to get ``psi``, otherwise ``psi = log f``.  With
    ``as_psi=True`` the expression is taken to be ``psi`` directly.
    """
    if spec in BUILTIN_DENSITIES:
        d = builtin_density(spec)
        return d if domain == (-INF, INF) else d.restricted(domain)
    if spec.lower().endswith(".csv"):
        d = load_density_csv(spec)
        return d if domain == (-INF, INF) else d.restricted(domain)
    if as_psi:
        return DensityModel.from_expression(spec, params=params, domain=domain, label=spec)
    ast = ex.parse(spec, params=tuple(params or {}))
    if isinstance(ast, ex.Unary) and ast.op == "exp":
        return DensityModel.from_expression(ex.render(ast.arg), params=params, domain=domain, label=spec)
    return DensityModel.from_f_expression(spec, params=params, domain=domain, label=spec)
