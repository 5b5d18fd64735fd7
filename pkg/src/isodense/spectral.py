"""Lowest Dirichlet eigenvalue of ``Delta -+ 2c <x, grad>`` on grid domains.

Two drift signs are supported:

* ``"paper"``: ``L u = Delta u - 2c <x, grad u>``
* ``"weighted-laplacian"``: ``L u = Delta u + 2c <x, grad u>``, self-adjoint in
  ``L^2(exp(c|x|^2))``

Central differences give a non-symmetric matrix whose off-diagonal pairs
have positive products while ``c |x| h < 1``, so a diagonal similarity
makes it symmetric without changing the spectrum.  Inverse power
iteration runs on that symmetric form.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.ndimage import label
from scipy.sparse.linalg import splu

from .quadrature import integrate

__all__ = [
    "GridDomain",
    "EigenResult",
    "FaberKrahnResult",
    "StabilityError",
    "ConvergenceError",
    "assemble_operator",
    "lambda1",
    "faber_krahn_compare",
    "CONVENTIONS",
]

CONVENTIONS = ("paper", "weighted-laplacian")
RESIDUAL_TOL = 1e-8


class StabilityError(ValueError):
    """The drift stencil would lose its sign structure; ``required_h`` is the largest usable spacing."""

    def __init__(self, message: str, required_h: float):
        super().__init__(message)
        self.required_h = required_h


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, result: "EigenResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True, eq=False)
class GridDomain:
    """Occupancy mask on the grid ``x = origin + index * h``.

    ``mask`` has shape ``(nx,)`` in 1D or ``(ny, nx)`` in 2D (rows are y).
    Grid points outside the mask carry the Dirichlet condition.
    """

    mask: np.ndarray
    h: float
    origin: tuple[float, ...]

    @property
    def dimension(self) -> int:
        return self.mask.ndim

    def coordinates(self) -> list[np.ndarray]:
        """Coordinate arrays (x, then y) broadcast to the mask shape."""
        if self.dimension == 1:
            return [self.origin[0] + self.h * np.arange(self.mask.size)]
        ny, nx = self.mask.shape
        X, Y = np.meshgrid(self.origin[0] + self.h * np.arange(nx), self.origin[1] + self.h * np.arange(ny))
        return [X, Y]

    def points(self) -> np.ndarray:
        """Interior points, shape ``(N, dimension)``."""
        return np.stack([c[self.mask] for c in self.coordinates()], axis=-1)

    def weighted_volume(self, c: float) -> float:
        r2 = np.sum(self.points() ** 2, axis=-1)
        return float(np.sum(np.exp(c * r2)) * self.h ** self.dimension)

    def is_connected(self) -> bool:
        _, count = label(self.mask)
        return count == 1

    @classmethod
    def interval(cls, a: float, b: float, n: int) -> "GridDomain":
        """``(a, b)`` split into ``n`` cells; the end points are the boundary."""
        mask = np.ones(n + 1, dtype=bool)
        mask[0] = mask[-1] = False
        return cls(mask, (b - a) / n, (float(a),))

    @classmethod
    def from_indicator(cls, inside, window: tuple[float, float, float, float], h: float) -> "GridDomain":
        """Grid points of spacing ``h`` aligned to multiples of ``h``, padded by one boundary layer."""
        x0, x1, y0, y1 = window
        i0, i1 = math.floor(x0 / h) - 1, math.ceil(x1 / h) + 1
        j0, j1 = math.floor(y0 / h) - 1, math.ceil(y1 / h) + 1
        xs = h * np.arange(i0, i1 + 1)
        ys = h * np.arange(j0, j1 + 1)
        X, Y = np.meshgrid(xs, ys)
        mask = np.asarray(inside(X, Y), dtype=bool)
        mask[0, :] = mask[-1, :] = mask[:, 0] = mask[:, -1] = False
        return cls(mask, h, (i0 * h, j0 * h))

    @classmethod
    def disk(cls, radius: float, h: float, center: tuple[float, float] = (0.0, 0.0)) -> "GridDomain":
        cx, cy = center
        win = (cx - radius, cx + radius, cy - radius, cy + radius)
        return cls.from_indicator(lambda x, y: (x - cx) ** 2 + (y - cy) ** 2 < radius ** 2, win, h)

    @classmethod
    def rectangle(cls, x0: float, x1: float, y0: float, y1: float, h: float) -> "GridDomain":
        return cls.from_indicator(lambda x, y: (x > x0) & (x < x1) & (y > y0) & (y < y1), (x0, x1, y0, y1), h)

    # -- mask JSON ------------------------------------------------------------
    def to_json(self) -> str:
        rows = self.mask[None, :] if self.dimension == 1 else self.mask
        ny, nx = rows.shape
        x0 = self.origin[0]
        window = [x0, x0 + (nx - 1) * self.h]
        if self.dimension == 2:
            window += [self.origin[1], self.origin[1] + (ny - 1) * self.h]
        return json.dumps({"h": self.h, "window": window,
                           "rows": ["".join("1" if v else "0" for v in row) for row in rows]}, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "GridDomain":
        data = json.loads(text)
        rows = data["rows"]
        if not rows or any(set(r) - {"0", "1"} for r in rows):
            raise ValueError("rows must be non-empty bitstrings")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("rows must have equal length")
        mask = np.array([[ch == "1" for ch in r] for r in rows], dtype=bool)
        window = [float(v) for v in data["window"]]
        h = float(data["h"])
        if len(window) == 2:
            return cls(mask[0], h, (window[0],))
        return cls(mask, h, (window[0], window[2]))


@dataclass
class EigenResult:
    lambda1: float
    iterations: int
    residual: float
    h: float
    converged: bool = True
    convention: str = "paper"

    def to_dict(self) -> dict:
        return {"lambda1": self.lambda1, "iterations": self.iterations, "residual": self.residual,
                "h": self.h, "converged": self.converged, "convention": self.convention}


def _check(domain: GridDomain, c: float, convention: str):
    if convention not in CONVENTIONS:
        raise ValueError(f"sign convention must be one of {CONVENTIONS}")
    if c < 0:
        raise ValueError("c must be non-negative")
    if domain.dimension not in (1, 2):
        raise ValueError("only 1D and 2D domains are supported")
    if not domain.mask.any():
        raise ValueError("empty domain")
    reach = max(float(np.max(np.abs(coord))) for coord in domain.coordinates())
    if c > 0 and 2 * c * reach * domain.h >= 2:
        need = 1.0 / (c * reach)
        raise StabilityError(f"2c max|x| h = {2 * c * reach * domain.h:.4g} >= 2; need h < {need:.6g}", need)


def _index(domain: GridDomain) -> np.ndarray:
    idx = -np.ones(domain.mask.shape, dtype=np.int64)
    idx[domain.mask] = np.arange(int(domain.mask.sum()))
    return idx


def _stencil(domain: GridDomain, c: float, convention: str):
    """Rows, cols and values of the verbatim operator plus the per-axis coordinates."""
    sign = -1.0 if convention == "paper" else 1.0
    h = domain.h
    idx = _index(domain)
    coords = domain.coordinates()
    n = int(domain.mask.sum())
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    vals = [np.full(n, -2.0 * domain.dimension / h ** 2)]
    axes = [0] if domain.dimension == 1 else [1, 0]  # numpy axis for x, y
    for axis, coord in zip(axes, coords):
        for step in (+1, -1):
            nb = np.roll(idx, -step, axis=axis)
            # drop the link that np.roll wraps around the array edge
            edge = [slice(None)] * domain.dimension
            edge[axis] = slice(-1, None) if step > 0 else slice(0, 1)
            nb[tuple(edge)] = -1
            ok = domain.mask & (nb >= 0)
            x = coord[ok]
            rows.append(idx[ok])
            cols.append(nb[ok])
            vals.append(1.0 / h ** 2 + sign * step * c * x / h)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals), n


def assemble_operator(domain: GridDomain, c: float = 0.0, sign_convention: str = "paper") -> sp.csr_matrix:
    """Sparse matrix of ``L`` on the interior points, Dirichlet values eliminated.

    ``Delta`` and the drift both use second-order central differences.
    Raises :class:`StabilityError` when ``2 c max|x| h >= 2``.
    """
    _check(domain, c, sign_convention)
    r, k, v, n = _stencil(domain, c, sign_convention)
    return sp.csr_matrix((v, (r, k)), shape=(n, n))


def _symmetrize(A: sp.csr_matrix) -> sp.csr_matrix:
    """``D A D^{-1}`` symmetric: off-diagonal pairs replaced by the root of their product."""
    A = A.tocoo()
    off = A.row != A.col
    B = sp.csr_matrix((A.data[off], (A.row[off], A.col[off])), shape=A.shape)
    prod = B.multiply(B.T)
    if prod.nnz and prod.data.min() <= 0:
        raise StabilityError("stencil lost its sign structure", 0.0)
    prod.data = np.sqrt(prod.data)
    return (prod + sp.diags(A.diagonal())).tocsr()


def _log_scaling(domain: GridDomain, c: float, convention: str) -> np.ndarray:
    """``log D`` per interior point, from products of neighbour ratios along each axis."""
    sign = -1.0 if convention == "paper" else 1.0
    h = domain.h
    total = np.zeros(domain.mask.shape)
    axes = [0] if domain.dimension == 1 else [1, 0]
    for axis, coord in zip(axes, domain.coordinates()):
        # ratio d_{i+1}/d_i = sqrt(a_{i,i+1} / a_{i+1,i}) for the x_i -> x_{i+1} link
        x = np.moveaxis(coord, axis, -1)
        up = 1.0 / h ** 2 + sign * c * x[..., :-1] / h
        down = 1.0 / h ** 2 - sign * c * x[..., 1:] / h
        steps = 0.5 * (np.log(np.abs(up)) - np.log(np.abs(down)))
        cum = np.concatenate([np.zeros(x.shape[:-1] + (1,)), np.cumsum(steps, axis=-1)], axis=-1)
        total += np.moveaxis(cum, -1, axis)
    return total[domain.mask]


def lambda1(domain: GridDomain, c: float = 0.0, sign_convention: str = "paper", max_iter: int = 500,
            raise_on_failure: bool = False) -> EigenResult:
    """Smallest eigenvalue of ``-L`` by shifted inverse power iteration.

    Works on the symmetric similar matrix, starting from all ones on the
    mask.  The shift sits below the spectrum (``-c d - 1`` for the paper
    sign, whose ``-L`` is bounded below by ``-c d``).  The residual is
    reported for the verbatim operator and the eigenvector mapped back.
    """
    A = assemble_operator(domain, c, sign_convention)
    S = -_symmetrize(A)
    n = S.shape[0]
    d = domain.dimension
    shift = -(c * d + 1.0) if sign_convention == "paper" else -1.0
    lu = splu((S - shift * sp.identity(n, format="csr")).tocsc(), permc_spec="MMD_AT_PLUS_A",
              options={"SymmetricMode": True})
    v = np.ones(n) / math.sqrt(n)
    lam = math.inf
    res = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = lu.solve(v)
        v = w / np.linalg.norm(w)
        Sv = S @ v
        lam = float(v @ Sv)
        res = float(np.linalg.norm(Sv - lam * v))
        if res <= 0.1 * RESIDUAL_TOL:
            break
    # map back: A = D^{-1} (-S) D, eigenvector of A is D^{-1} v
    logd = _log_scaling(domain, c, sign_convention)
    phi = v * np.exp(-(logd - logd.max()))
    true_res = float(np.linalg.norm(-(A @ phi) - lam * phi) / np.linalg.norm(phi))
    ok = true_res <= RESIDUAL_TOL or res <= RESIDUAL_TOL * 0.1
    result = EigenResult(lam, it, true_res, domain.h, ok, sign_convention)
    if not ok and raise_on_failure:
        raise ConvergenceError(f"inverse iteration stalled at residual {true_res:.3e}", result)
    return result


# ---------------------------------------------------------------------------


def _ball_radius(volume: float, c: float, dim: int) -> float:
    def vol(R):
        if dim == 1:
            return 2 * integrate(lambda t: np.exp(c * t * t), 0.0, R, tol=1e-14)
        return 2 * math.pi * integrate(lambda s: np.exp(c * s * s) * s, 0.0, R, tol=1e-14)

    lo, hi = 0.0, 1.0
    while vol(hi) < volume:
        hi *= 2
    while hi - lo > 1e-13 * hi:
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if vol(mid) < volume else (lo, mid)
    return 0.5 * (lo + hi)


def _ball_domain(radius: float, h: float, dim: int) -> GridDomain:
    if dim == 1:
        k = math.ceil(radius / h) + 1
        xs = h * np.arange(-k, k + 1)
        return GridDomain(np.abs(xs) < radius, h, (-k * h,))
    return GridDomain.disk(radius, h)


@dataclass
class FaberKrahnResult:
    lambda1_domain: float
    lambda1_ball: float
    ball_radius: float
    volume: float
    holds: bool
    equality: bool
    convention: str
    tolerance: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def faber_krahn_compare(domain: GridDomain, c: float, sign_convention: str = "paper",
                        tolerance: float = 1e-2) -> FaberKrahnResult:
    """``lambda1(domain)`` against the centred ball of equal ``exp(c|x|^2)`` volume.

    Volume is the grid sum of the density; the ball radius comes from the
    radial volume by bisection and the ball is rasterized at the same ``h``.
    ``holds`` allows a relative ``tolerance`` for the two rasterizations;
    ``equality`` means the two eigenvalues agree within it and the masks
    differ in at most a boundary layer.
    """
    if not domain.is_connected():
        warnings.warn("domain mask is not connected", RuntimeWarning, stacklevel=2)
    vol = domain.weighted_volume(c)
    R = _ball_radius(vol, c, domain.dimension)
    ball = _ball_domain(R, domain.h, domain.dimension)
    la = lambda1(domain, c, sign_convention, raise_on_failure=True).lambda1
    lb = lambda1(ball, c, sign_convention, raise_on_failure=True).lambda1
    scale = max(abs(lb), 1.0)
    holds = la >= lb - tolerance * scale
    close = abs(la - lb) <= tolerance * scale
    same_shape = _mask_difference(domain, ball) <= 2 * (2 * math.pi * R if domain.dimension == 2 else 2) / domain.h
    return FaberKrahnResult(la, lb, R, vol, holds, bool(close and same_shape), sign_convention, tolerance)


def _mask_difference(a: GridDomain, b: GridDomain) -> int:
    """Number of grid points in exactly one of the two masks (grids aligned to multiples of h)."""
    pa = {tuple(np.round(p / a.h).astype(np.int64)) for p in a.points()}
    pb = {tuple(np.round(p / b.h).astype(np.int64)) for p in b.points()}
    return len(pa ^ pb)
