"""Isoperimetric profile of a unimodal density on the line, a half-line or a segment.

Every candidate minimizer is a single interval (possibly anchored at a domain
end or unbounded) or the complement of one, so the solver compares a few
explicit families.  Interior intervals of volume ``V`` are parametrized by the
mass coordinate ``u`` of their left end: ``(m^-1(u), m^-1(u + V))``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy.optimize import brentq

from .density import DensityModel, MeasureTable, Region1D, ShapeClass, classify_shape

__all__ = [
    "MinimizerDescriptor",
    "ProfileResult",
    "ShapeUnresolvedError",
    "solve_profile",
    "solve_profile_halfline",
    "solve_profile_compact",
    "brute_force_profile",
    "BruteForceResult",
    "stationarity_check",
    "StationarityResult",
    "TIE_TOL",
]

INF = math.inf
TIE_TOL = 1e-9
SCAN_SAMPLES = 512
CERTIFY_TOL = 1e-14
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ShapeUnresolvedError(ValueError):
    """The density is not recognisably unimodal; use :func:`brute_force_profile`."""


@dataclass
class MinimizerDescriptor:
    """One minimizer, or a one-parameter family of them.

    ``params`` always describes a concrete member.  For families, ``family``
    gives the range of the left end ``a`` of the scanned interval.
    """

    kind: str
    params: dict
    perimeter: float
    family: dict | None = None

    def region(self) -> Region1D:
        p = self.params
        k = self.kind
        if k == "half-line-left":
            return Region1D.of((-INF, p["x"]))
        if k == "half-line-right":
            return Region1D.of((p["x"], INF))
        if k == "bounded-interval":
            return Region1D.of((p["a"], p["b"]))
        if k == "two-half-lines":
            return Region1D.of((-INF, p["x"]), (p["y"], INF))
        if k == "complement-of-interval":
            lo, hi = p["domain"]
            return Region1D.of((lo, p["a"]), (p["b"], hi))
        if k == "boundary-anchored-interval":
            e, x = p["endpoint"], p["x"]
            return Region1D.of((min(e, x), max(e, x)))
        raise ValueError(f"unknown minimizer kind {k!r}")

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "params": _jsonable(self.params), "perimeter": self.perimeter}
        if self.family is not None:
            out["family"] = _jsonable(self.family)
        return out


@dataclass
class ProfileResult:
    volume: float
    infimum_perimeter: float
    attained: bool
    minimizers: list[MinimizerDescriptor] = field(default_factory=list)
    fleeing_end: float | None = None
    shape: str = ""
    boundary_policy: str = "count-all"

    @property
    def kinds(self) -> list[str]:
        return [m.kind for m in self.minimizers]

    def to_dict(self) -> dict:
        return {
            "volume": self.volume,
            "infimum_perimeter": self.infimum_perimeter,
            "attained": self.attained,
            "minimizers": [m.to_dict() for m in self.minimizers],
            "fleeing_end": _jsonable(self.fleeing_end),
            "shape": self.shape,
            "boundary_policy": self.boundary_policy,
        }


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isinf(v):
            return "+inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.bool_):
        return bool(v)
    return v


# ---------------------------------------------------------------------------
# candidate engine


class _Engine:
    def __init__(self, density: DensityModel, table: MeasureTable, policy: str, shape: ShapeClass):
        self.d = density
        self.t = table
        self.policy = policy
        self.shape = shape
        self.lo, self.hi = density.domain

    def end_cost(self, e: float) -> float:
        if not math.isfinite(e) or self.policy == "free-at-domain-endpoints":
            return 0.0
        return float(self.d.f(e))

    # mass coordinate of the left end of an interior interval of volume V
    def u_map(self, s, V):
        s = np.asarray(s, dtype=float)
        t = self.t
        ulo, uhi = -t.mass_left, t.mass_right - V
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if math.isfinite(ulo) and math.isfinite(uhi):
                return ulo + (uhi - ulo) * s
            if math.isfinite(ulo):
                return ulo + V * s / (1.0 - s)
            if math.isfinite(uhi):
                return uhi - V * (1.0 - s) / s
            centre = self._centre_mass() - 0.5 * V
            return centre + V * np.tan(math.pi * (s - 0.5))

    def _centre_mass(self) -> float:
        x0 = self.shape.change_point
        if x0 is None or not (self.lo < x0 < self.hi):
            x0 = self.t.anchor
        return float(self.t.cumulative(x0))

    def interval_at(self, s, V):
        u = self.u_map(s, V)
        a = self.t.inverse(u)
        b = self.t.inverse(u + V)
        with np.errstate(over="ignore", invalid="ignore"):
            P = self.d.f(a) + self.d.f(b)
        P = np.where(np.isfinite(P), P, INF)
        return a, b, P

    def scan(self, V):
        """Best interior intervals of volume V: refined local minima and tie families."""
        s = (np.arange(SCAN_SAMPLES) + 1.0) / (SCAN_SAMPLES + 1.0)
        a, b, P = self.interval_at(s, V)
        ok = (a > self.lo) & (b < self.hi) & (b > a)
        P = np.where(ok, P, INF)
        pmin = float(np.min(P))
        if not math.isfinite(pmin):
            return [], []
        # tie families: runs of at least three samples at the scan minimum
        near = P <= pmin + TIE_TOL
        families = []
        in_run = np.zeros(P.size, dtype=bool)
        i = 0
        while i < P.size:
            if near[i]:
                j = i
                while j + 1 < P.size and near[j + 1]:
                    j += 1
                if j - i + 1 >= 3:
                    in_run[i: j + 1] = True
                    families.append((i, j))
                i = j + 1
            else:
                i += 1
        fam_out = []
        for i, j in families:
            touches_lo = i == 0
            touches_hi = j == P.size - 1
            fleeing_lo = touches_lo and not self.t.left_finite
            fleeing_hi = touches_hi and not self.t.right_finite
            if fleeing_lo or fleeing_hi:
                # only a certified constant stretch makes the far members genuine
                da = np.abs(self.d.dpsi(a[i: j + 1]))
                db = np.abs(self.d.dpsi(b[i: j + 1]))
                if not (np.all(da <= CERTIFY_TOL) and np.all(db <= CERTIFY_TOL)):
                    continue
            k = (i + j) // 2
            a_first = self.lo if touches_lo else float(a[i])
            a_last = float(self.t.inverse(self.t.mass_right - V)) if touches_hi else float(a[j])
            fam_out.append((float(a[k]), float(b[k]), float(np.min(P[i: j + 1])), (a_first, a_last)))
        # isolated local minima
        left = np.concatenate([[INF], P[:-1]])
        right = np.concatenate([P[1:], [INF]])
        cand = np.nonzero((P <= left) & (P <= right) & np.isfinite(P) & ~in_run)[0]
        if cand.size > 16:
            cand = cand[np.argsort(P[cand])[:16]]
        if cand.size == 0:
            return [], fam_out
        grid = np.concatenate([[0.0], s, [1.0]])
        x0, x1 = grid[cand], grid[cand + 2]
        sr = self._polish(self._golden(x0, x1, V), x0, x1, V)
        a_r, b_r, P_r = self.interval_at(sr, V)
        out = []
        edge = 1e-9
        for sv, av, bv, pv in zip(sr, a_r, b_r, P_r):
            if sv <= edge or sv >= 1.0 - edge or not math.isfinite(pv):
                continue  # drifts to a scan edge: that limit is a separate candidate
            if not (self.lo < av < bv < self.hi):
                continue
            if any(abs(av - o[0]) <= 1e-7 * (1.0 + abs(av)) for o in out):
                continue
            out.append((float(av), float(bv), float(pv)))
        return out, fam_out

    def _slope_sign(self, s, V):
        # dP/da = f(a) (psi'(a) + psi'(b)), so the bracket test uses the stationarity residual
        a, b, _ = self.interval_at(s, V)
        with np.errstate(invalid="ignore"):
            return float(self.d.dpsi(a)) + float(self.d.dpsi(b))

    def _polish(self, s_best, x0, x1, V):
        """Sharpen golden-section minima with a root of the stationarity residual.

        Golden section only locates a smooth minimum to about sqrt(eps); the
        residual ``psi'(a) + psi'(b)`` changes sign there (or at a kink).
        """
        out = np.array(s_best, dtype=float)
        _, _, p_best = self.interval_at(out, V)
        for i in range(out.size):
            lo_s, hi_s = float(x0[i]), float(x1[i])
            width = hi_s - lo_s
            lo_s, hi_s = lo_s + 1e-6 * width, hi_s - 1e-6 * width
            try:
                g_lo, g_hi = self._slope_sign(lo_s, V), self._slope_sign(hi_s, V)
                if not (g_lo < 0 < g_hi):
                    continue
                root = brentq(lambda t: self._slope_sign(t, V), lo_s, hi_s, xtol=1e-16, rtol=1e-15, maxiter=200)
            except (ValueError, RuntimeError):
                continue
            p_root = float(self.interval_at(root, V)[2])
            if p_root <= p_best[i] + 1e-14 * max(1.0, abs(p_best[i])):
                out[i] = root
        return out

    def _golden(self, x0, x1, V, iters: int = 90):
        a = np.asarray(x0, dtype=float).copy()
        b = np.asarray(x1, dtype=float).copy()
        c = b - _GOLDEN * (b - a)
        d = a + _GOLDEN * (b - a)
        fc = self.interval_at(c, V)[2]
        fd = self.interval_at(d, V)[2]
        for _ in range(iters):
            if np.all(b - a <= 1e-16):
                break
            go_left = fc <= fd
            b = np.where(go_left, d, b)
            a = np.where(go_left, a, c)
            new_c = b - _GOLDEN * (b - a)
            new_d = a + _GOLDEN * (b - a)
            c_next = np.where(go_left, new_c, d)
            d_next = np.where(go_left, c, new_d)
            fresh = np.where(go_left, new_c, new_d)
            ff = self.interval_at(fresh, V)[2]
            fc, fd = np.where(go_left, ff, fd), np.where(go_left, fc, ff)
            c, d = c_next, d_next
        return np.where(fc <= fd, c, d)

    def end_limit(self, direction: int) -> float:
        """``lim f`` towards the infinite domain end ``direction * inf``."""
        start = self.t.anchor
        k = np.arange(0, 1020, dtype=float)
        xs = start + direction * np.exp2(k)
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            vals = np.asarray(self.d.f(xs), dtype=float)
        prev = None
        streak = 0
        for v in vals:
            if math.isnan(v):
                return float(prev) if prev is not None else INF
            if math.isinf(v):
                return INF
            if prev is not None and abs(v - prev) <= 1e-13 * max(1.0, abs(v)):
                streak += 1
                if streak >= 3:
                    return float(v)
            else:
                streak = 0
            prev = v
        return float(prev)


def _check_volume(V, table):
    if not V > 0 or not math.isfinite(V):
        raise ValueError(f"volume must be positive and finite, got {V}")
    # within quadrature error of the total counts as the whole domain
    if math.isfinite(table.total_measure) and V >= table.total_measure * (1 - 1e-11):
        raise ValueError(f"volume {V} is not below the total measure {table.total_measure}")


def _resolve_shape(density, shape):
    shape = shape or classify_shape(density)
    if not shape.resolved:
        raise ShapeUnresolvedError(
            "density shape is unresolved (not recognisably unimodal); use brute_force_profile instead"
        )
    return shape


def _solve(density: DensityModel, V: float, policy: str, table: MeasureTable | None, shape: ShapeClass | None):
    table = table or MeasureTable(density)
    _check_volume(V, table)
    shape = _resolve_shape(density, shape)
    eng = _Engine(density, table, policy, shape)
    lo, hi = eng.lo, eng.hi
    base = dict(volume=float(V), shape=shape.kind, boundary_policy=policy)

    # monotone density on the line with a finite-measure minimizing end: the half-line is unique
    if lo == -INF and hi == INF and not shape.constant:
        if shape.kind == "monotone-increasing" and table.left_finite:
            x = float(table.inverse(-table.mass_left + V))
            p = float(density.f(x))
            return ProfileResult(infimum_perimeter=p, attained=True,
                                 minimizers=[MinimizerDescriptor("half-line-left", {"x": x}, p)], **base)
        if shape.kind == "monotone-decreasing" and table.right_finite:
            y = float(table.inverse(table.mass_right - V))
            p = float(density.f(y))
            return ProfileResult(infimum_perimeter=p, attained=True,
                                 minimizers=[MinimizerDescriptor("half-line-right", {"x": y}, p)], **base)

    cands: list[MinimizerDescriptor] = []
    if table.left_finite:
        x = float(table.inverse(-table.mass_left + V))
        p = eng.end_cost(lo) + float(density.f(x))
        if lo == -INF:
            cands.append(MinimizerDescriptor("half-line-left", {"x": x}, p))
        else:
            cands.append(MinimizerDescriptor("boundary-anchored-interval", {"endpoint": lo, "x": x}, p))
    if table.right_finite:
        y = float(table.inverse(table.mass_right - V))
        p = float(density.f(y)) + eng.end_cost(hi)
        if hi == INF:
            cands.append(MinimizerDescriptor("half-line-right", {"x": y}, p))
        else:
            cands.append(MinimizerDescriptor("boundary-anchored-interval", {"endpoint": hi, "x": y}, p))

    isolated, families = eng.scan(V)
    for a, b, p in isolated:
        cands.append(MinimizerDescriptor("bounded-interval", {"a": a, "b": b}, p))
    for a, b, p, rng in families:
        cands.append(MinimizerDescriptor("bounded-interval", {"a": a, "b": b}, p, {"parameter": "a", "range": list(rng)}))

    M = table.total_measure
    if math.isfinite(M) and M - V > 0:
        extra = eng.end_cost(lo) + eng.end_cost(hi)
        isolated_c, families_c = eng.scan(M - V)
        two = lo == -INF and hi == INF

        def comp(a, b, p, fam=None):
            if two:
                params = {"x": a, "y": b}
                kind = "two-half-lines"
            else:
                params = {"a": a, "b": b, "domain": [lo, hi]}
                kind = "complement-of-interval"
            return MinimizerDescriptor(kind, params, p + extra, fam)

        for a, b, p in isolated_c:
            cands.append(comp(a, b, p))
        for a, b, p, rng in families_c:
            cands.append(comp(a, b, p, {"parameter": "a" if not two else "x", "range": list(rng)}))

    fleeing: list[tuple[float, float]] = []
    if lo == -INF and not table.left_finite:
        fleeing.append((-INF, 2.0 * eng.end_limit(-1)))
    if hi == INF and not table.right_finite:
        fleeing.append((INF, 2.0 * eng.end_limit(+1)))

    best = min((c.perimeter for c in cands), default=INF)
    flee_best = min(fleeing, key=lambda e: e[1], default=(None, INF))
    if flee_best[1] < best - TIE_TOL or not cands:
        return ProfileResult(infimum_perimeter=float(flee_best[1]), attained=False, minimizers=[],
                             fleeing_end=flee_best[0], **base)
    winners = [c for c in cands if c.perimeter <= best + TIE_TOL]
    return ProfileResult(infimum_perimeter=float(best), attained=True, minimizers=winners, **base)


def solve_profile(
    density: DensityModel,
    V: float,
    boundary_policy: str = "count-all",
    table: MeasureTable | None = None,
    shape: ShapeClass | None = None,
) -> ProfileResult:
    """Compute ``I_f(V)`` for a unimodal density and list every minimizer.

    Candidates: intervals anchored at either domain end, interior bounded
    intervals (scan of ``f(a) + f(b)`` along the volume constraint, then
    golden-section refinement), complements of interior intervals when the
    total measure is finite, and intervals escaping to an infinite-measure
    end, whose perimeter tends to ``2 lim f``.  Perimeters within ``TIE_TOL``
    are reported together; continua of minimizers become one family.
    """
    if boundary_policy not in ("count-all", "free-at-domain-endpoints"):
        raise ValueError(f"unknown boundary policy {boundary_policy!r}")
    return _solve(density, float(V), boundary_policy, table, shape)


def solve_profile_halfline(density: DensityModel, V: float, free_boundary: bool = False, **kw) -> ProfileResult:
    lo, hi = density.domain
    if not (math.isfinite(lo) and hi == INF):
        raise ValueError(f"expected a density on [a, inf), got domain {density.domain}")
    return solve_profile(density, V, "free-at-domain-endpoints" if free_boundary else "count-all", **kw)


def solve_profile_compact(density: DensityModel, V: float, free_boundary: bool = False, **kw) -> ProfileResult:
    lo, hi = density.domain
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise ValueError(f"expected a density on a compact interval, got domain {density.domain}")
    return solve_profile(density, V, "free-at-domain-endpoints" if free_boundary else "count-all", **kw)


# ---------------------------------------------------------------------------
# stationarity


class StationarityResult(NamedTuple):
    stationary: bool
    residual: float
    residual_one_sided: tuple[float, float] | None = None


def stationarity_check(density: DensityModel, a: float, b: float, tol: float = 1e-9) -> StationarityResult:
    """An interval ``(a, b)`` is stationary iff ``psi'(a) = -psi'(b)``.

    At kinks the outward-facing one-sided derivatives are used as well, and
    both residuals reported (inner-side first).
    """
    kinks = density.kinks
    if a in kinks or b in kinks:
        inner = abs(float(density.dpsi(a, side=+1)) + float(density.dpsi(b, side=-1)))
        outer = abs(float(density.dpsi(a, side=-1)) + float(density.dpsi(b, side=+1)))
        return StationarityResult(min(inner, outer) <= tol, inner, (inner, outer))
    r = abs(float(density.dpsi(a)) + float(density.dpsi(b)))
    return StationarityResult(r <= tol, r)


# ---------------------------------------------------------------------------
# brute-force oracle


class BruteForceResult(NamedTuple):
    perimeter: float
    region: Region1D | None
    allowance: float
    spacing: float


def _tail_mass(f, a, b):
    """scipy quad on an unbounded tail; ``inf`` when it does not settle."""
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        try:
            val, _ = sp_integrate.quad(f, a, b, limit=400)
        except Exception:
            return INF
    return INF if (not math.isfinite(val) or val > 1e12) else float(val)


def brute_force_profile(
    density: DensityModel,
    V: float,
    grid: float = 0.05,
    max_components: int = 2,
    window: tuple[float, float] | None = None,
    boundary_policy: str = "count-all",
    max_combinations: int = 5_000_000,
) -> BruteForceResult:
    """Exhaustive search over unions of at most ``max_components`` intervals.

    All but one endpoint sit on a uniform grid of spacing ``grid`` over
    ``window`` (or at the domain ends); the remaining endpoint is solved so
    the volume is met exactly.  Works with its own composite Simpson table,
    independent of :class:`MeasureTable`.  ``allowance = grid * max f`` on the
    window bounds the discretization error.
    """
    lo, hi = density.domain
    if window is None:
        window = (max(lo, -10.0), min(hi, 10.0))
    wlo, whi = float(max(window[0], lo)), float(min(window[1], hi))
    n = max(2, int(math.ceil((whi - wlo) / grid)))
    xs = np.linspace(wlo, whi, n + 1)
    h = (whi - wlo) / n
    with np.errstate(over="ignore", under="ignore"):
        fx = np.asarray(density.f(xs), dtype=float)
        fm = np.asarray(density.f(0.5 * (xs[:-1] + xs[1:])), dtype=float)
    cell = h / 6.0 * (fx[:-1] + 4.0 * fm + fx[1:])
    # masses measured from the lightest grid point, accumulated outward, so
    # small intervals there keep full precision next to huge far cells
    ks = int(np.argmin(np.where(np.isfinite(fx), fx, INF)))
    cum = np.empty(n + 1)
    cum[ks] = 0.0
    cum[ks + 1:] = np.cumsum(cell[ks:])
    cum[:ks] = -np.cumsum(cell[:ks][::-1])[::-1]

    def fscalar(t):
        return float(density.f(t))

    tail_l = 0.0 if wlo <= lo else _tail_mass(fscalar, lo, wlo)
    tail_r = 0.0 if whi >= hi else _tail_mass(fscalar, whi, hi)
    if not math.isfinite(tail_l):
        # infinite-measure end: the domain end is unusable; anchor masses at the window
        tail_l = 0.0
        lo_usable = False
    else:
        lo_usable = True
    hi_usable = math.isfinite(tail_r)
    A = cum
    A_lo = A[0] - tail_l
    M = A[-1] + (tail_r if hi_usable else 0.0)
    free = boundary_policy == "free-at-domain-endpoints"

    def end_cost(e):
        return 0.0 if (not math.isfinite(e) or free) else float(density.f(e))

    # discrete endpoint set: [lo] + grid + [hi], skipping duplicates at the window edges
    pts_x = list(xs)
    pts_A = list(A)
    pts_c = list(fx)
    if lo_usable and wlo > lo:
        pts_x.insert(0, lo); pts_A.insert(0, A_lo); pts_c.insert(0, end_cost(lo))
    elif lo_usable and wlo == lo:
        pts_c[0] = end_cost(lo)
    if hi_usable and whi < hi:
        pts_x.append(hi); pts_A.append(M); pts_c.append(end_cost(hi))
    elif hi_usable and whi == hi:
        pts_c[-1] = end_cost(hi)
    px, pA, pc = np.asarray(pts_x), np.asarray(pts_A), np.asarray(pts_c)
    npts = px.size

    def locate(target):
        """Solve ``A(x) = target`` inside the window; nan where impossible."""
        out = np.full(target.shape, np.nan)
        inside = (target > A[0]) & (target < A[-1])
        if not np.any(inside):
            return out
        tg = target[inside]
        k = np.clip(np.searchsorted(A, tg, side="right") - 1, 0, n - 1)
        x0 = xs[k]
        span = np.where(cell[k] > 0, cell[k], 1.0)
        x = x0 + (tg - A[k]) / span * h
        for _ in range(4):
            mid = 0.5 * (x0 + x)
            with np.errstate(over="ignore", under="ignore"):
                part = (x - x0) / 6.0 * (density.f(x0) + 4.0 * density.f(mid) + density.f(x))
                fxv = density.f(x)
            step = np.where(fxv > 0, (A[k] + part - tg) / np.where(fxv > 0, fxv, 1.0), 0.0)
            x = np.clip(x - step, x0, x0 + h)
        out[inside] = x
        return out

    best_p = INF
    best_region = None
    for K in range(1, max_components + 1):
        m = 2 * K - 1
        count = math.comb(npts, m)
        if count > max_combinations:
            raise ValueError(f"{count} endpoint combinations exceed the limit {max_combinations}; coarsen the grid")
        combos = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(npts), m)),
                             dtype=np.int64, count=count * m).reshape(count, m)
        for slot in range(2 * K):
            # slot is the free endpoint; discrete ones fill the other positions in order
            sign = np.array([1.0 if j % 2 else -1.0 for j in range(2 * K)])
            others = [j for j in range(2 * K) if j != slot]
            Ad = pA[combos]
            vol_known = (Ad * sign[others]).sum(axis=1)
            target = (V - vol_known) / sign[slot]
            prev_A = Ad[:, slot - 1] if slot > 0 else np.full(count, -INF)
            next_A = Ad[:, slot] if slot < 2 * K - 1 else np.full(count, INF)
            ok = (target > prev_A) & (target < next_A)
            if not np.any(ok):
                continue
            x = locate(target[ok])
            good = np.isfinite(x)
            if not np.any(good):
                continue
            idx = np.nonzero(ok)[0][good]
            xv = x[good]
            with np.errstate(over="ignore"):
                per = pc[combos[idx]].sum(axis=1) + np.asarray(density.f(xv), dtype=float)
            j = int(np.argmin(per))
            if per[j] < best_p:
                best_p = float(per[j])
                ends = list(px[combos[idx[j]]])
                ends.insert(slot, float(xv[j]))
                try:
                    best_region = Region1D(tuple((ends[2 * i], ends[2 * i + 1]) for i in range(K)))
                except ValueError:
                    best_region = None
    with np.errstate(over="ignore"):
        fmax = float(np.max(fx[np.isfinite(fx)])) if np.any(np.isfinite(fx)) else INF
    return BruteForceResult(best_p, best_region, h * fmax, h)
