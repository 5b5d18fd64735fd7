"""Discrete Steiner symmetrization and Hsiang reflection in the plane, density ``exp(c|x|^2)``.

A :class:`ColumnarSet` is stored in a frame given by an angle ``theta``: the
base line has direction ``e = (cos theta, sin theta)`` and columns run along
``d = (-sin theta, cos theta)``.  Column ``k`` sits at base coordinate
``p = k h`` and represents the strip ``|x.e - p| < h/2`` intersected with its
intervals in the ``t = x.d`` coordinate.  Since ``|x|^2 = p^2 + t^2``, the
density restricted to a column is ``exp(c p^2) exp(c t^2)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.special import erf, erfi

from .quadrature import integrate

__all__ = [
    "ColumnarSet",
    "Disk",
    "Box",
    "steiner_symmetrize",
    "weighted_volume_columnar",
    "weighted_perimeter_columnar",
    "perimeter_allowance",
    "column_graph_sums",
    "symmetric_difference",
    "hsiang_reflect",
    "HsiangResult",
    "SymmetrizationLog",
    "converge_to_ball",
    "ConvergenceResult",
    "ball_radius_for_volume",
    "radial_ball_volume",
    "convexity_inequality",
    "ConvexityResult",
]

AXIS_ANGLE = {1: 0.0, 0: math.pi / 2}
_MERGE_TOL = 1e-12


def _G(t, c: float):
    """``int_0^t exp(c s^2) ds``, vectorised."""
    t = np.asarray(t, dtype=float)
    if c == 0:
        return t
    if c > 0:
        k = math.sqrt(c)
        return math.sqrt(math.pi) / (2 * k) * erfi(k * t)
    k = math.sqrt(-c)
    return math.sqrt(math.pi) / (2 * k) * erf(k * t)


def _G_inverse(target: np.ndarray, c: float, tol: float = 1e-12) -> np.ndarray:
    """Solve ``G(alpha) = target`` for ``alpha >= 0`` by bisection."""
    target = np.asarray(target, dtype=float)
    lo = np.zeros_like(target)
    hi = np.maximum(target, 1.0)  # G(t) >= t for c >= 0
    if c < 0:
        limit = math.sqrt(math.pi) / (2 * math.sqrt(-c))
        if np.any(target >= limit):
            raise ValueError("column length exceeds the total line measure")
        while np.any(_G(hi, c) < target):
            hi = np.where(_G(hi, c) < target, 2 * hi, hi)
    for _ in range(200):
        if np.all(hi - lo <= tol * np.maximum(1.0, hi)):
            break
        mid = 0.5 * (lo + hi)
        below = _G(mid, c) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _merge(intervals: list[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    out: list[list[float]] = []
    for a, b in sorted(intervals):
        if not b > a:
            continue
        if out and a <= out[-1][1] + _MERGE_TOL:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


# ---------------------------------------------------------------------------
# shapes with exact chords


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float

    def chords(self, p: np.ndarray, e: np.ndarray, d: np.ndarray):
        ce, cd = self.cx * e[0] + self.cy * e[1], self.cx * d[0] + self.cy * d[1]
        disc = self.radius ** 2 - (p - ce) ** 2
        half = np.sqrt(np.maximum(disc, 0.0))
        return np.where(disc > 0, cd - half, np.nan), np.where(disc > 0, cd + half, np.nan)

    def extent(self):
        return self.cx - self.radius, self.cx + self.radius, self.cy - self.radius, self.cy + self.radius


@dataclass(frozen=True)
class Box:
    x0: float
    x1: float
    y0: float
    y1: float

    def chords(self, p: np.ndarray, e: np.ndarray, d: np.ndarray):
        # line x = p e + s d; slab intersection with the box
        lo = np.full(p.shape, -np.inf)
        hi = np.full(p.shape, np.inf)
        for axis, (a, b) in enumerate(((self.x0, self.x1), (self.y0, self.y1))):
            off = p * e[axis]
            slope = d[axis]
            if abs(slope) < 1e-15:
                inside = (off > a) & (off < b)
                lo = np.where(inside, lo, np.inf)
            else:
                s1, s2 = (a - off) / slope, (b - off) / slope
                lo = np.maximum(lo, np.minimum(s1, s2))
                hi = np.minimum(hi, np.maximum(s1, s2))
        ok = hi > lo
        return np.where(ok, lo, np.nan), np.where(ok, hi, np.nan)

    def extent(self):
        return self.x0, self.x1, self.y0, self.y1


# ---------------------------------------------------------------------------


def _frame(theta: float):
    e = np.array([math.cos(theta), math.sin(theta)])
    d = np.array([-math.sin(theta), math.cos(theta)])
    return e, d


@dataclass(frozen=True, eq=False)
class ColumnarSet:
    """Planar set as columns of intervals over a uniform base grid.

    ``ks[i]`` is the integer base index of ``columns[i]``; consecutive
    indices are contiguous.  Empty columns are allowed.
    """

    h: float
    c: float
    theta: float
    k0: int
    columns: tuple[tuple[tuple[float, float], ...], ...]

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k0, self.k0 + len(self.columns))

    @property
    def p(self) -> np.ndarray:
        return self.ks * self.h

    def __eq__(self, other):
        return (
            isinstance(other, ColumnarSet)
            and (self.h, self.c, self.theta) == (other.h, other.c, other.theta)
            and self._trimmed() == other._trimmed()
        )

    def _trimmed(self):
        cols = list(self.columns)
        k0 = self.k0
        while cols and not cols[0]:
            cols.pop(0)
            k0 += 1
        while cols and not cols[-1]:
            cols.pop()
        return (k0 if cols else 0, tuple(cols))

    def is_empty(self) -> bool:
        return not any(self.columns)

    # -- constructors -------------------------------------------------------
    @classmethod
    def empty(cls, h: float = 1 / 128, c: float = 1.0, theta: float = 0.0) -> "ColumnarSet":
        return cls(h, c, theta, 0, ())

    @classmethod
    def from_shapes(cls, shapes: Sequence, h: float = 1 / 128, c: float = 1.0, theta: float = 0.0,
                    margin: int = 4) -> "ColumnarSet":
        """Union of disks and boxes, with exact chord endpoints per column line."""
        e, d = _frame(theta)
        if not shapes:
            return cls.empty(h, c, theta)
        corners = []
        for s in shapes:
            x0, x1, y0, y1 = s.extent()
            corners += [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        proj = [x * e[0] + y * e[1] for x, y in corners]
        k_lo = int(math.floor(min(proj) / h)) - margin
        k_hi = int(math.ceil(max(proj) / h)) + margin
        ks = np.arange(k_lo, k_hi + 1)
        p = ks * h
        per_col: list[list[tuple[float, float]]] = [[] for _ in ks]
        for s in shapes:
            a, b = s.chords(p, e, d)
            for i in np.nonzero(np.isfinite(a))[0]:
                per_col[i].append((float(a[i]), float(b[i])))
        return cls(h, c, theta, k_lo, tuple(_merge(col) for col in per_col))

    @classmethod
    def from_indicator(cls, inside: Callable, window: tuple[float, float, float, float], h: float = 1 / 128,
                       c: float = 1.0, theta: float = 0.0, margin: int = 4) -> "ColumnarSet":
        """Rasterize a vectorised predicate ``inside(x, y)`` on the column lines.

        Endpoints fall on a sub-grid of spacing ``h`` along each column.
        """
        x0, x1, y0, y1 = window
        e, d = _frame(theta)
        corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        pe = [x * e[0] + y * e[1] for x, y in corners]
        td = [x * d[0] + y * d[1] for x, y in corners]
        k_lo = int(math.floor(min(pe) / h)) - margin
        k_hi = int(math.ceil(max(pe) / h)) + margin
        j_lo = int(math.floor(min(td) / h)) - margin
        j_hi = int(math.ceil(max(td) / h)) + margin
        ks = np.arange(k_lo, k_hi + 1)
        tc = (np.arange(j_lo, j_hi) + 0.5) * h  # cell centres along the column
        P, T = np.meshgrid(ks * h, tc, indexing="ij")
        X = P * e[0] + T * d[0]
        Y = P * e[1] + T * d[1]
        occ = np.asarray(inside(X, Y), dtype=bool)
        cols = []
        for row in occ:
            ivs = []
            j = 0
            while j < row.size:
                if row[j]:
                    start = j
                    while j + 1 < row.size and row[j + 1]:
                        j += 1
                    ivs.append(((j_lo + start) * h, (j_lo + j + 1) * h))
                j += 1
            cols.append(tuple(ivs))
        return cls(h, c, theta, k_lo, tuple(cols))

    @classmethod
    def random_union(cls, seed: int, count: int | None = None, h: float = 1 / 128, c: float = 1.0,
                     theta: float = 0.0, spread: float = 0.6) -> "ColumnarSet":
        """Union of ``count`` (1 to 4 if omitted) random disks and boxes near the origin."""
        rng = np.random.default_rng(seed)
        k = int(rng.integers(1, 5)) if count is None else int(count)
        shapes = []
        for _ in range(k):
            cx, cy = rng.uniform(-spread, spread, 2)
            if rng.random() < 0.5:
                shapes.append(Disk(float(cx), float(cy), float(rng.uniform(0.15, 0.5))))
            else:
                w, t = rng.uniform(0.15, 0.5, 2)
                shapes.append(Box(float(cx - w), float(cx + w), float(cy - t), float(cy + t)))
        return cls.from_shapes(shapes, h, c, theta)

    @classmethod
    def ball(cls, radius: float, h: float = 1 / 128, c: float = 1.0, theta: float = 0.0) -> "ColumnarSet":
        return cls.from_shapes([Disk(0.0, 0.0, radius)], h, c, theta)

    # -- geometry -------------------------------------------------------------
    def rectangles(self):
        """Arrays ``(p_lo, p_hi, t_lo, t_hi)`` of the cells making up the set."""
        rows = [(k, a, b) for k, col in zip(self.ks, self.columns) for a, b in col]
        if not rows:
            z = np.zeros(0)
            return z, z, z, z
        arr = np.asarray(rows, dtype=float)
        return (arr[:, 0] - 0.5) * self.h, (arr[:, 0] + 0.5) * self.h, arr[:, 1], arr[:, 2]

    def pieces(self):
        """Convex pieces ``(U_p, U_t, W)`` (four half-planes ``U_p p + U_t t <= W`` each).

        Between neighbouring columns with the same interval count the
        matched endpoints are joined linearly (trapezoids).  A column next to
        empty space continues the chords of its other neighbour for half a
        cell; at other topology changes each column contributes half-cells.
        """
        h = self.h
        rows = []
        ext = [()] + list(self.columns) + [()]
        for j in range(len(ext) - 1):
            left, right = ext[j], ext[j + 1]
            pl = (self.k0 + j - 1) * h
            pr = pl + h
            if left and len(left) == len(right):
                for (a0, b0), (a1, b1) in zip(left, right):
                    ma, mb = (a1 - a0) / h, (b1 - b0) / h
                    rows.append(((-1.0, 1.0, ma, -mb), (0.0, 0.0, -1.0, 1.0),
                                 (-pl, pr, ma * pl - a0, b0 - mb * pl)))
            elif not left or not right:
                # cap against empty space: extend the chords of the matched
                # neighbour by half a cell (the half-planes clip at their
                # crossing); without a matched neighbour this is a half-cell
                if right:
                    col, lo_p, p0 = right, pr - h / 2, pr
                    other = ext[j + 2] if j + 2 < len(ext) else ()
                else:
                    col, lo_p, p0 = left, pl, pl
                    other = ext[j - 1] if j >= 1 else ()
                hi_p = lo_p + h / 2
                matched = len(other) == len(col)
                for n, (a, b) in enumerate(col):
                    if matched:
                        oa, ob = other[n]
                        ma, mb = ((oa - a) / h, (ob - b) / h) if right else ((a - oa) / h, (b - ob) / h)
                    else:
                        ma = mb = 0.0
                    rows.append(((-1.0, 1.0, ma, -mb), (0.0, 0.0, -1.0, 1.0),
                                 (-lo_p, hi_p, ma * p0 - a, b - mb * p0)))
            else:
                for a, b in left:
                    rows.append(((-1.0, 1.0, 0.0, 0.0), (0.0, 0.0, -1.0, 1.0), (-pl, pl + h / 2, -a, b)))
                for a, b in right:
                    rows.append(((-1.0, 1.0, 0.0, 0.0), (0.0, 0.0, -1.0, 1.0), (-(pr - h / 2), pr, -a, b)))
        if not rows:
            z = np.zeros((0, 4))
            return z, z, z
        arr = np.asarray(rows, dtype=float)
        return arr[:, 0, :], arr[:, 1, :], arr[:, 2, :]

    def resample(self, theta: float) -> "ColumnarSet":
        """The same set re-cut along the column lines of another frame.

        A half turn is an exact relabelling.  Other angles intersect every new
        column line exactly with the piecewise-linear interpolation of the
        columns (see :meth:`pieces`).
        """
        if _same_angle(theta, self.theta):
            return self if theta == self.theta else ColumnarSet(self.h, self.c, theta, self.k0, self.columns)
        if _same_angle(theta, self.theta + math.pi):
            cols = tuple(tuple((-b, -a) for a, b in reversed(col)) for col in reversed(self.columns))
            return ColumnarSet(self.h, self.c, theta, -(self.k0 + len(self.columns) - 1), cols)
        if self.is_empty():
            return ColumnarSet.empty(self.h, self.c, theta)
        e0, d0 = _frame(self.theta)
        e1, d1 = _frame(theta)
        Up, Ut, W = self.pieces()
        P0, P1, T0, T1 = self.rectangles()
        pts = np.concatenate([pp[:, None] * e0 + tt[:, None] * d0 for pp in (P0, P1) for tt in (T0, T1)])
        proj = pts @ e1
        k_lo = int(math.floor(proj.min() / self.h)) - 1
        k_hi = int(math.ceil(proj.max() / self.h)) + 1
        q = np.arange(k_lo, k_hi + 1) * self.h
        # new line x = q e1 + s d1, in old coordinates p = A_p s + B_p, t = A_t s + B_t
        A_p, A_t = float(d1 @ e0), float(d1 @ d0)
        B_p, B_t = q * float(e1 @ e0), q * float(e1 @ d0)
        lo = np.full((q.size, W.shape[0]), -np.inf)
        hi = np.full((q.size, W.shape[0]), np.inf)
        for m in range(4):
            alpha = Up[:, m] * A_p + Ut[:, m] * A_t
            rest = W[None, :, m] - (Up[None, :, m] * B_p[:, None] + Ut[None, :, m] * B_t[:, None])
            with np.errstate(divide="ignore", invalid="ignore"):
                bound = rest / alpha[None, :]
            pos = alpha > 1e-15
            neg = alpha < -1e-15
            flat = ~(pos | neg)
            hi = np.where(pos[None, :], np.minimum(hi, bound), hi)
            lo = np.where(neg[None, :], np.maximum(lo, bound), lo)
            lo = np.where(flat[None, :] & (rest < 0), np.inf, lo)
        cols = []
        for i in range(q.size):
            sel = hi[i] > lo[i]
            cols.append(_merge(list(zip(lo[i][sel].tolist(), hi[i][sel].tolist()))))
        return ColumnarSet(self.h, self.c, theta, k_lo, tuple(cols))

    # -- serialization ------------------------------------------------------
    def to_json(self) -> str:
        cols = [{"p": float(p), "intervals": [list(iv) for iv in col]} for p, col in zip(self.p, self.columns)]
        window = self.window()
        return json.dumps({"h": self.h, "c": self.c, "theta": self.theta, "window": window, "columns": cols},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ColumnarSet":
        data = json.loads(text)
        h = float(data["h"])
        cols = data["columns"]
        if not cols:
            return cls.empty(h, float(data.get("c", 1.0)), float(data.get("theta", 0.0)))
        ks = [int(round(col["p"] / h)) for col in cols]
        k0, k1 = min(ks), max(ks)
        table: list[list[tuple[float, float]]] = [[] for _ in range(k1 - k0 + 1)]
        for k, col in zip(ks, cols):
            for a, b in col["intervals"]:
                if not a < b:
                    raise ValueError(f"empty interval [{a}, {b}] in column p={col['p']}")
                table[k - k0].append((float(a), float(b)))
        return cls(h, float(data.get("c", 1.0)), float(data.get("theta", 0.0)), k0,
                   tuple(_merge(t) for t in table))

    def window(self) -> list[float]:
        """Bounding box ``[x0, x1, y0, y1]`` of the cells."""
        P0, P1, T0, T1 = self.rectangles()
        if P0.size == 0:
            return [0.0, 0.0, 0.0, 0.0]
        e, d = _frame(self.theta)
        pts = np.concatenate([pp[:, None] * e + tt[:, None] * d for pp in (P0, P1) for tt in (T0, T1)])
        return [float(pts[:, 0].min()), float(pts[:, 0].max()), float(pts[:, 1].min()), float(pts[:, 1].max())]


def _same_angle(a: float, b: float) -> bool:
    diff = (a - b) % (2 * math.pi)
    return min(diff, 2 * math.pi - diff) < 1e-12


# ---------------------------------------------------------------------------
# measures


def _column_G_sums(cs: ColumnarSet) -> np.ndarray:
    out = np.zeros(len(cs.columns))
    for i, col in enumerate(cs.columns):
        if col:
            arr = np.asarray(col)
            out[i] = float(np.sum(_G(arr[:, 1], cs.c) - _G(arr[:, 0], cs.c)))
    return out


def weighted_volume_columnar(cs: ColumnarSet) -> float:
    """``sum_k h exp(c p_k^2) int_column exp(c t^2) dt`` with exact column integrals."""
    if not cs.columns:
        return 0.0
    w = np.exp(cs.c * cs.p ** 2)
    return float(cs.h * np.sum(w * _column_G_sums(cs)))


def _endpoints(col) -> np.ndarray:
    return np.asarray([x for iv in col for x in iv], dtype=float)


def _wall(col_a, col_b, p: float, c: float) -> float:
    """Weighted length of the symmetric difference of two columns along the line at ``p``."""
    pts = sorted(set(_endpoints(col_a).tolist()) | set(_endpoints(col_b).tolist()))
    total = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        mid = 0.5 * (lo + hi)
        in_a = any(a < mid < b for a, b in col_a)
        in_b = any(a < mid < b for a, b in col_b)
        if in_a != in_b:
            total += float(_G(hi, c) - _G(lo, c))
    return math.exp(c * p * p) * total


def _slopes(cs: ColumnarSet):
    """Per column: endpoint array and slope array (nan where no matched neighbour)."""
    cols = cs.columns
    h = cs.h
    counts = [len(col) for col in cols]
    res = []
    for i, col in enumerate(cols):
        E = _endpoints(col)
        if not col:
            res.append((E, E))
            continue
        kl = counts[i - 1] if i > 0 else 0
        kr = counts[i + 1] if i + 1 < len(cols) else 0
        k = counts[i]
        if kl == k and kr == k:
            s = (_endpoints(cols[i + 1]) - _endpoints(cols[i - 1])) / (2 * h)
        elif kl == k:
            s = (E - _endpoints(cols[i - 1])) / h
        elif kr == k:
            s = (_endpoints(cols[i + 1]) - E) / h
        else:
            s = np.zeros_like(E)
        res.append((E, s))
    return res


def weighted_perimeter_columnar(cs: ColumnarSet) -> float:
    """Graph terms ``h f sqrt(1 + slope^2)`` per endpoint plus walls at topology changes.

    Endpoints are matched by order with neighbouring columns holding the same
    number of intervals (central differences, one-sided at the edge of a
    matched run).  A face between columns with different interval counts
    contributes the weighted length of the two columns' symmetric difference.
    Error is ``O(h)`` on smooth boundaries and ``O(sqrt(h))`` near vertical
    tangencies.
    """
    cols = cs.columns
    if not cols:
        return 0.0
    h, c = cs.h, cs.c
    p = cs.p
    total = 0.0
    for i, (E, s) in enumerate(_slopes(cs)):
        if E.size:
            total += h * float(np.sum(np.exp(c * (p[i] ** 2 + E ** 2)) * np.sqrt(1.0 + s * s)))
    # faces, including those against the empty space beyond the first and last column
    ext = [()] + list(cols) + [()]
    for j in range(len(ext) - 1):
        a, b = ext[j], ext[j + 1]
        if len(a) != len(b):
            face_p = (cs.k0 + j - 0.5) * h
            total += _wall(a, b, face_p, c)
    return total


def perimeter_allowance(cs: ColumnarSet) -> float:
    """Slack ``h P`` when comparing two estimates, e.g. before and after symmetrization.

    Where interval counts change between columns the estimator falls back to
    one-sided or zero slopes, which can under-count a slanted boundary by a
    fraction of order ``h``.
    """
    return cs.h * weighted_perimeter_columnar(cs)


def column_graph_sums(cs: ColumnarSet) -> np.ndarray:
    """``sum_j f(p, h_j) sqrt(1 + slope_j^2)`` per column; ``nan`` where neighbours do not match."""
    out = np.full(len(cs.columns), np.nan)
    counts = [len(col) for col in cs.columns]
    for i, (E, s) in enumerate(_slopes(cs)):
        if not E.size or i == 0 or i == len(counts) - 1:
            continue
        if counts[i - 1] == counts[i] == counts[i + 1]:
            out[i] = float(np.sum(np.exp(cs.c * (cs.p[i] ** 2 + E ** 2)) * np.sqrt(1.0 + s * s)))
    return out


def symmetric_difference(a: ColumnarSet, b: ColumnarSet) -> float:
    """Column-wise weighted measure of ``a`` xor ``b`` (``b`` is resampled into ``a``'s frame)."""
    if a.h != b.h or a.c != b.c:
        raise ValueError("sets must share spacing and density")
    b = b.resample(a.theta)
    lo = min(a.k0, b.k0) if a.columns or b.columns else 0
    hi = max(a.k0 + len(a.columns), b.k0 + len(b.columns))
    total = 0.0
    for k in range(lo, hi):
        ca = a.columns[k - a.k0] if 0 <= k - a.k0 < len(a.columns) else ()
        cb = b.columns[k - b.k0] if 0 <= k - b.k0 < len(b.columns) else ()
        if ca != cb:
            total += _wall(ca, cb, k * a.h, a.c)
    return a.h * total


# ---------------------------------------------------------------------------
# symmetrization


def _target_angle(axis: int | None, angle: float | None) -> float:
    if angle is not None:
        return float(angle)
    if axis not in AXIS_ANGLE:
        raise ValueError(f"axis must be 0 or 1 in the plane, got {axis}")
    return AXIS_ANGLE[axis]


def steiner_symmetrize(cs: ColumnarSet, axis: int | None = 1, angle: float | None = None) -> ColumnarSet:
    """Replace every column by the centred interval of the same weighted length.

    ``axis`` is the coordinate along which columns run (the set becomes
    symmetric under ``x_axis -> -x_axis``); ``angle`` selects an arbitrary
    frame instead.  Along a column the density is ``exp(c p^2) exp(c t^2)``,
    so the half-length ``alpha`` solves ``2 G(alpha) = sum (G(b) - G(a))``
    with ``G(t) = int_0^t exp(c s^2)``.  Columns that already are a single
    centred interval are kept as they are, which makes the map idempotent.
    """
    theta = _target_angle(axis, angle)
    cs = cs.resample(theta)
    sums = _column_G_sums(cs)
    todo = [i for i, col in enumerate(cs.columns) if col and not (len(col) == 1 and col[0][0] == -col[0][1])]
    cols = list(cs.columns)
    if todo:
        alphas = _G_inverse(0.5 * sums[todo], cs.c)
        for i, a in zip(todo, alphas):
            a = float(a)
            cols[i] = ((-a, a),) if a > 0 else ()
    return ColumnarSet(cs.h, cs.c, cs.theta, cs.k0, tuple(cols))


@dataclass
class HsiangResult:
    set: ColumnarSet
    kept: str
    volume_plus: float
    volume_minus: float
    relative_perimeter_plus: float
    relative_perimeter_minus: float


def _half(cs: ColumnarSet, side: int, along_columns: bool) -> ColumnarSet:
    """Half of ``cs`` on one side of the mirror line, doubled by reflection."""
    if along_columns:
        # mirror line t = 0 (orthogonal to the columns)
        cols = []
        for col in cs.columns:
            if side > 0:
                part = [(max(a, 0.0), b) for a, b in col if b > 0]
            else:
                part = [(a, min(b, 0.0)) for a, b in col if a < 0]
            mirrored = [(-b, -a) for a, b in part]
            cols.append(_merge(part + mirrored))
        return ColumnarSet(cs.h, cs.c, cs.theta, cs.k0, tuple(cols))
    # mirror line p = 0: keep columns on one side, column 0 straddles the line and maps to itself
    by_k = {int(k): col for k, col in zip(cs.ks, cs.columns)}
    kmax = max(abs(int(k)) for k in cs.ks) if cs.columns else 0
    cols = []
    for k in range(-kmax, kmax + 1):
        src = k if k * side >= 0 else -k
        col = by_k.get(src, ())
        cols.append(col)
    return ColumnarSet(cs.h, cs.c, cs.theta, -kmax, tuple(cols))


def hsiang_reflect(cs: ColumnarSet, hyperplane: int = 1) -> HsiangResult:
    """Keep the half with the smaller relative perimeter and mirror it.

    ``hyperplane`` is the coordinate whose zero set is the mirror line.  The
    relative perimeter of a half is half the perimeter of its mirror-doubled
    version.  Ties keep the positive side.  Both half volumes are reported so
    a driver can first make the line volume-bisecting.
    """
    if hyperplane not in (0, 1):
        raise ValueError("hyperplane must be 0 or 1 in the plane")
    normal = np.zeros(2)
    normal[hyperplane] = 1.0
    e, d = _frame(cs.theta)
    if abs(abs(float(normal @ d)) - 1.0) < 1e-12:
        along, sign = True, float(normal @ d)
    elif abs(abs(float(normal @ e)) - 1.0) < 1e-12:
        along, sign = False, float(normal @ e)
    else:
        cs = cs.resample(0.0)
        return hsiang_reflect(cs, hyperplane)
    plus = _half(cs, +1 if sign > 0 else -1, along)
    minus = _half(cs, -1 if sign > 0 else +1, along)
    vp, vm = 0.5 * weighted_volume_columnar(plus), 0.5 * weighted_volume_columnar(minus)
    pp, pm = 0.5 * weighted_perimeter_columnar(plus), 0.5 * weighted_perimeter_columnar(minus)
    if pp <= pm:
        return HsiangResult(plus, "+", vp, vm, pp, pm)
    return HsiangResult(minus, "-", vp, vm, pp, pm)


# ---------------------------------------------------------------------------
# convergence to the ball


def radial_ball_volume(radius: float, c: float) -> float:
    """``2 pi int_0^R exp(c s^2) s ds`` by quadrature."""
    return 2 * math.pi * integrate(lambda s: np.exp(c * s * s) * s, 0.0, radius, tol=1e-14)


def ball_radius_for_volume(volume: float, c: float, tol: float = 1e-13) -> float:
    """Radius of the centred ball of the given weighted volume, by bisection."""
    if volume <= 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while radial_ball_volume(hi, c) < volume:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if radial_ball_volume(mid, c) < volume:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class SymmetrizationLog:
    """One symmetrization step.

    ``perimeter_resampled`` is the previous iterate measured in this step's
    frame.  The estimator is not frame independent, so ``allowance`` is how
    much the frame change alone raised the estimate plus the estimator's
    comparison slack ``h P`` (see :func:`perimeter_allowance`).
    """

    step: int
    angle: float
    volume_before: float
    volume_after: float
    perimeter_before: float
    perimeter_resampled: float
    perimeter_after: float
    step_difference: float
    ball_difference: float

    FIELDS = ("step", "angle", "volume_before", "volume_after", "perimeter_before",
              "perimeter_resampled", "perimeter_after", "step_difference", "ball_difference")

    h: float = 0.0

    @property
    def allowance(self) -> float:
        return max(0.0, self.perimeter_resampled - self.perimeter_before) + self.h * self.perimeter_before

    @property
    def within_allowance(self) -> bool:
        return self.perimeter_after <= self.perimeter_before + self.allowance

    def row(self) -> list:
        return [getattr(self, k) for k in self.FIELDS]


@dataclass
class ConvergenceResult:
    final: ColumnarSet
    logs: list[SymmetrizationLog] = field(default_factory=list)
    converged: bool = False
    ball_radius: float = 0.0
    ball_difference: float = math.inf

    def logs_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SymmetrizationLog.FIELDS)
        for log in self.logs:
            w.writerow([repr(v) if isinstance(v, float) else v for v in log.row()])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "steps": len(self.logs),
            "ball_radius": self.ball_radius,
            "ball_difference": self.ball_difference,
            "h": self.final.h,
            "volume": weighted_volume_columnar(self.final),
            "perimeter": weighted_perimeter_columnar(self.final),
            "trace_within_allowance": all(log.within_allowance for log in self.logs),
        }


def _direction_sequence(seed: int):
    # both coordinate axes first, then independent uniform angles; a fixed
    # increment between consecutive directions leaves some angular modes
    # almost undamped (golden-ratio steps stall on Fibonacci orders)
    yield AXIS_ANGLE[1]
    yield AXIS_ANGLE[0]
    rng = np.random.default_rng(seed)
    while True:
        yield float(rng.uniform(0.0, math.pi))


def converge_to_ball(cs: ColumnarSet, max_steps: int = 80, tol: float | None = None,
                     seed: int = 0, patience: int = 3) -> ConvergenceResult:
    """Repeated Steiner symmetrization until consecutive iterates agree within ``tol``.

    Coordinate axes alone have non-round fixed points (a centred square is
    symmetric in both), so after the two axes the directions are drawn
    uniformly from ``[0, pi)`` with ``seed``.  A direction can happen to be
    a symmetry axis already, so the stopping test must pass on ``patience``
    consecutive steps.  ``tol`` defaults to ``h / 4``.  The reference ball
    has the volume of the final iterate.
    """
    tol = cs.h / 4 if tol is None else tol
    cur = cs
    logs: list[SymmetrizationLog] = []
    converged = False
    quiet = 0
    directions = _direction_sequence(seed)
    per = weighted_perimeter_columnar(cur)
    vol = weighted_volume_columnar(cs)
    for step in range(1, max_steps + 1):
        ang = next(directions)
        framed = cur.resample(ang)
        per_r = weighted_perimeter_columnar(framed)
        nxt = steiner_symmetrize(framed, angle=ang)
        vol_n = weighted_volume_columnar(nxt)
        per_n = weighted_perimeter_columnar(nxt)
        diff = symmetric_difference(nxt, cur)
        ball = ColumnarSet.ball(ball_radius_for_volume(vol_n, cs.c), cs.h, cs.c, nxt.theta)
        bd = symmetric_difference(nxt, ball)
        logs.append(SymmetrizationLog(step, ang, vol, vol_n, per, per_r, per_n, diff, bd, cs.h))
        cur, vol, per = nxt, vol_n, per_n
        quiet = quiet + 1 if diff < tol else 0
        if quiet >= patience:
            converged = True
            break
    radius = ball_radius_for_volume(vol, cs.c)
    final_ball = ColumnarSet.ball(radius, cs.h, cs.c, cur.theta)
    return ConvergenceResult(cur, logs, converged, radius, symmetric_difference(cur, final_ball))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexityResult:
    lhs: float
    rhs: float
    equality: bool

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs - 1e-12 * max(1.0, abs(self.rhs))


def convexity_inequality(alphas: Sequence[float], slopes: Sequence[float], alpha: float, a: float) -> ConvexityResult:
    """Both sides of ``sum_j alpha_j sqrt(1 + a_j^2) >= 2 alpha sqrt(1 + a^2)``.

    Requires non-negative inputs, ``sum alpha_j a_j >= 2 alpha a`` and
    ``sum alpha_j >= 2 alpha``.  Equality holds exactly when every ``a_j``
    with positive weight equals ``a`` and ``sum alpha_j = 2 alpha``.
    """
    al = [float(v) for v in alphas]
    sl = [float(v) for v in slopes]
    if len(al) != len(sl) or not al:
        raise ValueError("alphas and slopes must be non-empty and of equal length")
    if min(al) < 0 or min(sl) < 0 or alpha < 0 or a < 0:
        raise ValueError("all inputs must be non-negative")
    s_alpha = math.fsum(al)
    s_alpha_a = math.fsum(x * y for x, y in zip(al, sl))
    if s_alpha < 2 * alpha or s_alpha_a < 2 * alpha * a:
        raise ValueError("preconditions sum(alpha_j) >= 2 alpha and sum(alpha_j a_j) >= 2 alpha a violated")
    lhs = math.fsum(x * math.hypot(1.0, y) for x, y in zip(al, sl))
    rhs = 2.0 * alpha * math.hypot(1.0, a)
    equality = s_alpha == 2 * alpha and all(y == a for x, y in zip(al, sl) if x > 0)
    return ConvexityResult(lhs, rhs, equality)
