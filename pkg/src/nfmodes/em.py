"""Scalar free-space propagation between the two apertures.

All integrals over an aperture use the midpoint rule of its
:class:`~nfmodes.geometry.AntennaMesh`.  Where a profile knows how to
resample itself (``SampledProfile.source``), TX-side integrals are refined by
repeated cell halving until two successive levels agree to ``rtol``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .geometry import AntennaMesh, GeometryError, ScenarioGeometry, point_distance

__all__ = [
    "SampledProfile",
    "CouplingMatrix",
    "QuadratureWarning",
    "green",
    "green_matrix",
    "propagate",
    "kernel_KR",
    "kernel_KT",
    "sum_rule",
    "coupling_matrix",
]

DEFAULT_RTOL = 1e-6
MAX_SAMPLES = 2**20
# elements per dense Green block; bounds peak memory of a single evaluation
_BLOCK = 1 << 22


class QuadratureWarning(UserWarning):
    """Adaptive refinement stopped at the sample cap before converging."""


@dataclass(frozen=True, eq=False)
class SampledProfile:
    """Complex function sampled on an aperture mesh.

    ``source``, when given, evaluates the same function at arbitrary
    coordinates and enables adaptive quadrature in :func:`propagate`.
    """

    mesh: AntennaMesh
    values: np.ndarray
    source: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != self.mesh.coordinates.shape:
            raise ValueError(
                f"profile has {values.size} values for a mesh of {len(self.mesh)} samples"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("profile values must be finite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, mesh: AntennaMesh, func) -> "SampledProfile":
        return cls(mesh, func(mesh.coordinates), source=func)

    @property
    def norm(self) -> float:
        return math.sqrt(float(np.sum(self.mesh.weights * np.abs(self.values) ** 2)))

    def normalized(self) -> "SampledProfile":
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize a zero profile")
        src = self.source
        scaled = None if src is None else (lambda x, _s=src, _n=n: _s(x) / _n)
        return SampledProfile(self.mesh, self.values / n, scaled)

    def scaled(self, factor: complex) -> "SampledProfile":
        src = self.source
        scaled = None if src is None else (lambda x, _s=src, _f=factor: _f * _s(x))
        return SampledProfile(self.mesh, self.values * factor, scaled)

    def __add__(self, other: "SampledProfile") -> "SampledProfile":
        if other.mesh is not self.mesh and not _same_mesh(self.mesh, other.mesh):
            raise ValueError("profiles live on different meshes")
        if self.source is not None and other.source is not None:
            a, b = self.source, other.source
            src = lambda x: a(x) + b(x)  # noqa: E731
        else:
            src = None
        return SampledProfile(self.mesh, self.values + other.values, src)

    def inner(self, other: "SampledProfile") -> complex:
        """``<self, other> = sum w conj(self) other``."""
        if not _same_mesh(self.mesh, other.mesh):
            raise ValueError("profiles live on different meshes")
        return self.mesh.inner(self.values, other.values)


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Coupling intensities ``xi[m, n]`` (RX basis ``m``, TX basis ``n``)."""

    entries: np.ndarray

    @property
    def shape(self):
        return self.entries.shape

    @property
    def total_power(self) -> float:
        return float(np.sum(np.abs(self.entries) ** 2))

    def offdiagonal_ratio(self) -> float:
        """Off-diagonal power divided by diagonal power."""
        p = np.abs(self.entries) ** 2
        diag = float(np.sum(np.diagonal(p)))
        return (float(p.sum()) - diag) / diag


def _same_mesh(a: AntennaMesh, b: AntennaMesh) -> bool:
    if a is b:
        return True
    return (
        len(a) == len(b)
        and np.array_equal(a.coordinates, b.coordinates)
        and np.array_equal(a.weights, b.weights)
    )


def green(r, wavenumber: float):
    """Free-space scalar Green function ``exp(-j k r) / (4 pi r)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise GeometryError("Green function requires r > 0")
    out = np.exp(-1j * wavenumber * r) / (4 * math.pi * r)
    return out if out.ndim else complex(out)


def green_matrix(g: ScenarioGeometry, eta: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Dense ``G[m, n] = G(r(eta_n, y_m))``."""
    r = point_distance(np.asarray(eta)[None, :], np.asarray(y)[:, None], g)
    if np.any(r <= 0):
        raise GeometryError("RX sample located on the TX segment")
    return np.exp(-1j * g.wavenumber * r) / (4 * math.pi * r)


def _field(g: ScenarioGeometry, eta, weighted_source, y) -> np.ndarray:
    """``sum_n G(r(eta_n, y_m)) * weighted_source_n`` evaluated in row blocks."""
    y = np.asarray(y, dtype=float)
    out = np.empty(y.size, dtype=complex)
    rows = max(1, _BLOCK // max(1, eta.size))
    for start in range(0, y.size, rows):
        sl = slice(start, start + rows)
        out[sl] = green_matrix(g, eta, y[sl]) @ weighted_source
    return out


def _relative_change(new: np.ndarray, old: np.ndarray) -> float:
    scale = np.linalg.norm(new)
    if scale == 0:
        return 0.0 if np.linalg.norm(old) == 0 else math.inf
    return float(np.linalg.norm(new - old) / scale)


def _adaptive(evaluate, mesh: AntennaMesh, rtol: float, max_samples: int):
    """Halve ``mesh`` cells until ``evaluate`` changes by less than ``rtol``."""
    current = evaluate(mesh)
    while True:
        if 2 * len(mesh) > max_samples:
            warnings.warn(
                f"quadrature not converged to rtol={rtol:g} at {len(mesh)} samples",
                QuadratureWarning,
                stacklevel=3,
            )
            return current
        mesh = mesh.refined(2)
        finer = evaluate(mesh)
        if _relative_change(finer, current) <= rtol:
            return finer
        current = finer


def propagate(
    profile: SampledProfile,
    g: ScenarioGeometry,
    rx_mesh: AntennaMesh,
    rtol: Optional[float] = DEFAULT_RTOL,
    max_samples: int = MAX_SAMPLES,
) -> SampledProfile:
    """Field radiated on the RX by a TX source distribution.

    With ``rtol=None`` (or a profile without ``source``) this is the plain
    midpoint sum ``psi(y_m) = sum_n w_n G(r(eta_n, y_m)) phi(eta_n)``.
    Otherwise TX cells are halved until the RX field changes by less than
    ``rtol`` in relative L2 norm.
    """
    g.check_separable()
    mesh = profile.mesh
    if rtol is None or profile.source is None:
        values = _field(g, mesh.coordinates, mesh.weights * profile.values, rx_mesh.coordinates)
    else:
        src = profile.source

        def evaluate(m: AntennaMesh):
            return _field(g, m.coordinates, m.weights * src(m.coordinates), rx_mesh.coordinates)

        values = _adaptive(evaluate, mesh, rtol, max_samples)
    return SampledProfile(rx_mesh, values)


def _kernel(points_a, points_b, integrand, mesh, rtol, max_samples):
    pa, pb = np.broadcast_arrays(np.asarray(points_a, float), np.asarray(points_b, float))
    flat_a, flat_b = pa.ravel(), pb.ravel()

    def evaluate(m: AntennaMesh):
        out = np.empty(flat_a.size, dtype=complex)
        rows = max(1, _BLOCK // len(m))
        for start in range(0, flat_a.size, rows):
            sl = slice(start, start + rows)
            vals = integrand(m.coordinates[None, :], flat_a[sl, None], flat_b[sl, None])
            out[sl] = vals @ m.weights
        return out

    if rtol is None:
        values = evaluate(mesh)
    else:
        values = _adaptive(evaluate, mesh, rtol, max_samples)
    values = values.reshape(pa.shape)
    return values if values.ndim else complex(values)


def kernel_KR(
    y,
    y_prime,
    g: ScenarioGeometry,
    mode: str = "exact",
    tx_mesh: Optional[AntennaMesh] = None,
    rtol: Optional[float] = DEFAULT_RTOL,
    max_samples: int = MAX_SAMPLES,
):
    """RX-side kernel ``K_R(y, y') = int G(r(eta, y)) conj(G(r(eta, y'))) d eta``.

    ``mode="amplitude-approx"`` replaces both ``1/(4 pi r)`` factors with
    ``1/(4 pi d_c)`` and keeps the exact phases.
    """
    k = g.wavenumber
    if mode == "exact":
        def integrand(eta, a, b):
            ra, rb = point_distance(eta, a, g), point_distance(eta, b, g)
            return np.exp(-1j * k * (ra - rb)) / ((4 * math.pi) ** 2 * ra * rb)
    elif mode in ("amplitude-approx", "approx"):
        scale = 1.0 / (4 * math.pi * g.center_distance) ** 2

        def integrand(eta, a, b):
            ra, rb = point_distance(eta, a, g), point_distance(eta, b, g)
            return scale * np.exp(-1j * k * (ra - rb))
    else:
        raise ValueError(f"unknown kernel mode {mode!r}")
    mesh = tx_mesh if tx_mesh is not None else g.tx_mesh()
    return _kernel(y, y_prime, integrand, mesh, rtol, max_samples)


def kernel_KT(
    eta,
    eta_prime,
    g: ScenarioGeometry,
    mode: str = "exact",
    rx_mesh: Optional[AntennaMesh] = None,
    rtol: Optional[float] = DEFAULT_RTOL,
    max_samples: int = MAX_SAMPLES,
):
    """TX-side kernel ``K_T(eta, eta') = int conj(G(r(eta, y))) G(r(eta', y)) dy``.

    With this ordering the TX modes solve
    ``xi^2 phi(eta) = int K_T(eta, eta') phi(eta') d eta'``.
    """
    k = g.wavenumber
    if mode == "exact":
        def integrand(y, a, b):
            ra, rb = point_distance(a, y, g), point_distance(b, y, g)
            return np.exp(1j * k * (ra - rb)) / ((4 * math.pi) ** 2 * ra * rb)
    elif mode in ("amplitude-approx", "approx"):
        scale = 1.0 / (4 * math.pi * g.center_distance) ** 2

        def integrand(y, a, b):
            ra, rb = point_distance(a, y, g), point_distance(b, y, g)
            return scale * np.exp(1j * k * (ra - rb))
    else:
        raise ValueError(f"unknown kernel mode {mode!r}")
    mesh = rx_mesh if rx_mesh is not None else g.rx_mesh()
    return _kernel(eta, eta_prime, integrand, mesh, rtol, max_samples)


def sum_rule(g: ScenarioGeometry, epsabs: float = 0.0, epsrel: float = 1e-10) -> float:
    """Total squared coupling ``(4 pi)^-2 iint 1/r^2 ds dr``.

    The RX integral is done in closed form (an arctangent); the remaining TX
    integral uses adaptive Gauss-Kronrod quadrature.
    """
    g.check_separable()
    s, c = math.sin(g.tx_rotation), math.cos(g.tx_rotation)
    lo, hi = g.rx_span

    def inner(eta):
        a = abs(g.distance + eta * s)
        b = eta * c
        return (math.atan((hi - b) / a) - math.atan((lo - b) / a)) / a

    half = g.tx_length / 2
    breaks = []
    if abs(s) > 0:
        # keep the (integrable) near-crossing region visible to quad
        eta0 = -g.distance / s
        if -half < eta0 < half:
            breaks.append(eta0)
    value, _ = integrate.quad(
        inner, -half, half, epsabs=epsabs, epsrel=epsrel, limit=500, points=breaks or None
    )
    return value / (4 * math.pi) ** 2


def coupling_matrix(tx_basis, rx_basis, g: ScenarioGeometry, rtol=DEFAULT_RTOL) -> CouplingMatrix:
    """Coupling intensities ``xi[m, n] = <psi_m, propagate(phi_n)>``.

    ``tx_basis`` and ``rx_basis`` are :class:`~nfmodes.basis.BasisSet`
    instances (or plain sequences of :class:`SampledProfile`).
    """
    tx = list(getattr(tx_basis, "members", tx_basis))
    rx = list(getattr(rx_basis, "members", rx_basis))
    if not tx or not rx:
        raise ValueError("bases must be non-empty")
    rx_mesh = rx[0].mesh
    for member in rx[1:]:
        if not _same_mesh(member.mesh, rx_mesh):
            raise ValueError("RX basis members live on different meshes")
    tx_mesh = tx[0].mesh
    for member in tx[1:]:
        if not _same_mesh(member.mesh, tx_mesh):
            raise ValueError("TX basis members live on different meshes")
    psi = np.array([m.values for m in rx])  # (M, ny)
    fields = np.array([propagate(p, g, rx_mesh, rtol=rtol).values for p in tx])  # (N, ny)
    xi = (np.conj(psi) * rx_mesh.weights) @ fields.T
    return CouplingMatrix(xi)
