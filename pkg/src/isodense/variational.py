"""Curvature, first variation and stability of spheres and hyperplanes under radial densities.

Conventions: ``N`` is the inner normal of the region, the generalized mean
curvature is ``H_psi = n H - <grad psi, N>``, and a normal flow with speed
``u`` moves the boundary in the direction of ``N``.  Then
``V'(0) = -int f u`` and ``P'(0) = -int H_psi f u``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .density import DensityModel, RadialDensity

__all__ = [
    "RadialDensity",
    "StabilityReport",
    "mean_curvature_sphere",
    "mean_curvature_hyperplane",
    "hyperplane_cmc_rigidity",
    "RigidityVerdict",
    "ball_stability",
    "mode_value",
    "first_variation_check",
    "FirstVariationResult",
    "connectedness_criterion",
]


def mean_curvature_sphere(density: RadialDensity, r: float) -> float:
    """``n/r + delta'(r)`` for the centred sphere of radius ``r`` (inner normal)."""
    if not r > 0:
        raise ValueError("radius must be positive")
    return density.n / r + float(density.ddelta(r))


def _ratio_at(density: RadialDensity, r: float) -> float:
    """``delta'(r)/r``, with the limit ``delta''(0)`` at the origin when ``delta'(0) = 0``."""
    if r > 0:
        return float(density.ddelta(r)) / r
    d1 = float(density.ddelta(0.0))
    if d1 != 0.0:
        raise ValueError("delta'(r)/r has no finite limit at r = 0")
    return float(density.d2delta(0.0))


def mean_curvature_hyperplane(density: RadialDensity, c: float, p: Sequence[float], normal: Sequence[float] | None = None) -> float:
    """``-c delta'(r)/r`` at a point ``p`` of the hyperplane ``<x, normal> = c``.

    ``normal`` (default: last coordinate axis) is the unit inner normal.
    """
    p = np.asarray(p, dtype=float)
    if p.size != density.n + 1:
        raise ValueError(f"point must have {density.n + 1} coordinates")
    u = np.zeros(p.size) if normal is None else np.asarray(normal, dtype=float)
    if normal is None:
        u[-1] = 1.0
    u = u / np.linalg.norm(u)
    if abs(float(p @ u) - c) > 1e-9 * max(1.0, abs(c)):
        raise ValueError("point does not lie on the hyperplane")
    if c == 0:
        return 0.0
    return -c * _ratio_at(density, float(np.linalg.norm(p))) + 0.0


@dataclass(frozen=True)
class RigidityVerdict:
    constant: bool
    value: float | None
    spread: float

    @property
    def verdict(self) -> str:
        return "constant" if self.constant else "non-constant"


def hyperplane_cmc_rigidity(
    density: RadialDensity,
    r_window: tuple[float, float],
    tol: float = 1e-9,
    samples: int = 257,
) -> RigidityVerdict:
    """Is ``delta'(r)/r`` constant on ``r_window``?

    Off-origin hyperplanes have constant generalized mean curvature exactly
    when it is; the constant is reported as ``value``.
    """
    r0, r1 = r_window
    if not 0 <= r0 < r1:
        raise ValueError("need 0 <= r0 < r1")
    rs = np.linspace(r0, r1, samples)
    g = np.array([_ratio_at(density, float(r)) for r in rs])
    spread = float(np.max(g) - np.min(g))
    mean = float(np.mean(g))
    const = spread <= tol * max(1.0, abs(mean))
    return RigidityVerdict(const, mean if const else None, spread)


# ---------------------------------------------------------------------------
# stability


def _laplace_eigenvalue(ell: int, n: int) -> float:
    # eigenvalue of -Delta on the unit n-sphere for degree-ell harmonics
    return float(ell * (ell + n - 1))


def mode_value(density: RadialDensity, r: float, ell: int) -> float:
    """Index form of a degree-``ell`` spherical harmonic on the radius-``r`` sphere, per unit L2 norm."""
    n = density.n
    return float(density.f(r)) * ((_laplace_eigenvalue(ell, n) - n) / (r * r) + float(density.d2delta(r)))


@dataclass
class StabilityReport:
    radius: float
    delta_second: float
    stable: bool
    mode_values: list[tuple[int, float]] = field(default_factory=list)
    n: int = 1

    def to_dict(self) -> dict:
        return {
            "radius": self.radius,
            "n": self.n,
            "delta_second": self.delta_second,
            "stable": self.stable,
            "mode_values": [[ell, v] for ell, v in self.mode_values],
        }


def ball_stability(density: RadialDensity, r: float, L: int = 8) -> StabilityReport:
    """Stability of the centred ball of radius ``r``: stable iff ``delta''(r) >= 0``.

    Mode values for degrees ``1..L`` come from the spherical-harmonic
    decomposition of the index form; degree 0 is excluded by the volume
    constraint.  They increase with the degree, so degree 1 decides.
    """
    if not r > 0:
        raise ValueError("radius must be positive")
    if L < 1:
        raise ValueError("need at least one mode")
    d2 = float(density.d2delta(r))
    modes = [(ell, mode_value(density, r, ell)) for ell in range(1, L + 1)]
    return StabilityReport(float(r), d2, bool(d2 >= 0), modes, density.n)


# ---------------------------------------------------------------------------
# first variation by finite differences


@dataclass
class FirstVariationResult:
    dP_fd: float
    dP_exact: float
    dV_fd: float
    dV_exact: float
    h: float

    @property
    def residual_P(self) -> float:
        return abs(self.dP_fd - self.dP_exact)

    @property
    def residual_V(self) -> float:
        return abs(self.dV_fd - self.dV_exact)

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "dP_fd": self.dP_fd,
            "dP_exact": self.dP_exact,
            "residual_P": self.residual_P,
            "dV_fd": self.dV_fd,
            "dV_exact": self.dV_exact,
            "residual_V": self.residual_V,
        }


def _flow_coeffs(flow) -> tuple[float, float]:
    if flow == "constant":
        return 1.0, 0.0
    if flow == "harmonic":
        return 0.0, 1.0
    a0, a1 = flow
    return float(a0), float(a1)


class _SphereMesh:
    """Quadrature for zonal functions on the unit n-sphere, n in {1, 2}."""

    def __init__(self, n: int, n_polar: int = 64, n_azimuth: int = 128):
        self.n = n
        if n == 1:
            self.theta = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
            self.w = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
        elif n == 2:
            z, wz = np.polynomial.legendre.leggauss(n_polar)
            self.theta = np.arccos(z)
            # zonal integrands: the azimuthal sum is exact, 2*pi times the polar rule
            self.w = 2.0 * np.pi * wz
        else:
            raise NotImplementedError("sphere meshes are provided for n = 1 and n = 2")


def _radial_gl(order: int = 64):
    return np.polynomial.legendre.leggauss(order)


def _sphere_PV(density: RadialDensity, mesh: _SphereMesh, r: float, a0: float, a1: float, t: float):
    n = density.n
    th = mesh.theta
    u = a0 + a1 * np.cos(th)
    du = -a1 * np.sin(th)
    rho = r - t * u
    drho = -t * du
    f = density.f(rho)
    # the arc element is sqrt(rho^2 + rho'^2); on the 2-sphere it carries an extra rho sin(theta)
    if n == 1:
        P = float(np.sum(mesh.w * f * np.sqrt(rho * rho + drho * drho)))
    else:
        P = float(np.sum(mesh.w * f * rho * np.sqrt(rho * rho + drho * drho)))
    x, wx = _radial_gl()
    s = 0.5 * rho[:, None] * (x[None, :] + 1.0)
    inner = 0.5 * rho * np.sum(wx[None, :] * density.f(s) * s ** n, axis=1)
    V = float(np.sum(mesh.w * inner))
    return P, V


def _hyperplane_PV(density: RadialDensity, c: float, width: float, order: int, t: float):
    n = density.n
    z, wz = np.polynomial.legendre.leggauss(order)
    xs = width * z
    ws = width * wz
    grids = np.meshgrid(*([xs] * n), indexing="ij")
    wts = np.ones_like(grids[0])
    for g in np.meshgrid(*([ws] * n), indexing="ij"):
        wts = wts * g
    # compactly supported C^3 bump and its gradient
    parts = [(1.0 - (g / width) ** 2) ** 4 for g in grids]
    u = np.prod(parts, axis=0)
    grad_sq = np.zeros_like(u)
    for i, g in enumerate(grids):
        others = np.prod([parts[j] for j in range(n) if j != i], axis=0) if n > 1 else 1.0
        d = -8.0 * g / width ** 2 * (1.0 - (g / width) ** 2) ** 3 * others
        grad_sq = grad_sq + d * d
    height = c + t * u
    r_pts = np.sqrt(sum(g * g for g in grids) + height * height)
    P = float(np.sum(wts * density.f(r_pts) * np.sqrt(1.0 + t * t * grad_sq)))
    # volume change: region {y > c + t u} loses the slab between c and c + t u
    x, wx = _radial_gl(32)
    ys = c + 0.5 * (t * u)[..., None] * (x + 1.0)
    rr = np.sqrt(sum(g * g for g in grids)[..., None] + ys * ys)
    slab = 0.5 * (t * u) * np.sum(wx * density.f(rr), axis=-1)
    dV = -float(np.sum(wts * slab))
    # exact first variations, same quadrature
    r0 = np.sqrt(sum(g * g for g in grids) + c * c)
    f0 = density.f(r0)
    ratio = np.where(r0 > 0, density.ddelta(r0) / np.where(r0 > 0, r0, 1.0), 0.0)
    H = -c * ratio
    return P, dV, -float(np.sum(wts * H * f0 * u)), -float(np.sum(wts * f0 * u))


def first_variation_check(
    density: RadialDensity,
    surface: tuple[str, float],
    flow="constant",
    h: float = 1e-2,
    n_polar: int = 64,
    n_azimuth: int = 128,
    bump_width: float = 1.0,
    bump_order: int = 96,
) -> FirstVariationResult:
    """Central-difference ``P'(0)``, ``V'(0)`` along a normal flow against the exact integrals.

    ``surface`` is ``("sphere", r)`` or ``("hyperplane", c)`` (the region
    ``{x_last > c}``).  Sphere flows: ``"constant"``, ``"harmonic"`` (first
    zonal harmonic, a translation) or coefficients ``(a0, a1)`` for
    ``a0 + a1 cos(theta)``.  Hyperplanes use a compactly supported bump.
    """
    kind, value = surface
    if kind == "sphere":
        r = float(value)
        if not r > 0:
            raise ValueError("radius must be positive")
        mesh = _SphereMesh(density.n, n_polar, n_azimuth)
        a0, a1 = _flow_coeffs(flow)
        Pp, Vp = _sphere_PV(density, mesh, r, a0, a1, h)
        Pm, Vm = _sphere_PV(density, mesh, r, a0, a1, -h)
        u = a0 + a1 * np.cos(mesh.theta)
        fr = float(density.f(r))
        area = r ** density.n
        int_fu = fr * area * float(np.sum(mesh.w * u))
        H = mean_curvature_sphere(density, r)
        return FirstVariationResult((Pp - Pm) / (2 * h), -H * int_fu, (Vp - Vm) / (2 * h), -int_fu, h)
    if kind == "hyperplane":
        c = float(value)
        Pp, dVp, dP_exact, dV_exact = _hyperplane_PV(density, c, bump_width, bump_order, h)
        Pm, dVm, _, _ = _hyperplane_PV(density, c, bump_width, bump_order, -h)
        return FirstVariationResult((Pp - Pm) / (2 * h), dP_exact, (dVp - dVm) / (2 * h), dV_exact, h)
    raise ValueError(f"unknown surface {kind!r}")


# ---------------------------------------------------------------------------


def connectedness_criterion(
    density: DensityModel | RadialDensity | None,
    boundary_components: int,
    strictly_log_concave: bool | None = None,
    totally_geodesic: bool = False,
    log_concave: bool | None = None,
) -> str:
    """What log-concavity says about a stable region with this many boundary components.

    Returns ``"consistent"``, ``"violates-stability"``,
    ``"allowed-totally-geodesic"`` or ``"no-conclusion"``.
    """
    if boundary_components < 0:
        raise ValueError("component count must be non-negative")
    convexity = getattr(density, "declared_convexity", None)
    if strictly_log_concave is None:
        strictly_log_concave = convexity == "strictly-log-concave"
    if log_concave is None:
        log_concave = convexity in ("log-concave", "strictly-log-concave")
    log_concave = log_concave or strictly_log_concave
    if boundary_components <= 1:
        return "consistent"
    if strictly_log_concave:
        return "violates-stability"
    if log_concave:
        return "allowed-totally-geodesic" if totally_geodesic else "violates-stability"
    return "no-conclusion"
