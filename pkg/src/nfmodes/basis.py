"""Transmit and receive basis sets built from focusing and steering profiles.

The general construction starts from a focusing profile aimed at the RX
center and walks along the RX in both directions, dropping a new focus at
every local minimum of the amplitude-approximated kernel ``|K_R(y, y_c)|``.
Closed forms are provided for two special cases: a small TX feeding a large
RX (the TX focusing degenerates into beam steering) and a large TX feeding a
small, centered, parallel RX (Fresnel focusing).
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .em import DEFAULT_RTOL, SampledProfile, kernel_KR, propagate
from .geometry import AntennaMesh, GeometryError, ScenarioGeometry, point_distance

__all__ = [
    "ValidityWarning",
    "FocusingProfile",
    "BasisSet",
    "NullSet",
    "gram_matrix",
    "worst_correlation_db",
    "steering_profile",
    "focusing_profile",
    "hemisphere_steering_basis",
    "find_orthogonal_foci",
    "focusing_basis",
    "sis_uplink_foci",
    "sis_uplink_bases",
    "fresnel_downlink_foci",
    "fresnel_downlink_bases",
    "write_basis_csv",
    "basis_summary",
]

DB_FLOOR = -160.0


class ValidityWarning(UserWarning):
    """A closed form is being used outside the regime it was derived for."""


@dataclass(frozen=True, eq=False)
class FocusingProfile:
    """Phase-only TX profile concentrating energy on one RX point or angle.

    ``focal_point`` is an RX coordinate in meters for ``focusing`` and
    ``fresnel-focusing`` profiles and a steering angle in radians for
    ``steering`` profiles.
    """

    focal_point: float
    profile: SampledProfile
    kind: str


@dataclass(frozen=True, eq=False)
class BasisSet:
    """Ordered family of (near-)orthonormal profiles on one aperture."""

    members: tuple
    foci: np.ndarray
    side: str
    gram_worst_db: float
    kind: str = ""
    notes: tuple = ()

    @classmethod
    def build(cls, members, foci, side, kind="", notes=()) -> "BasisSet":
        members = tuple(members)
        return cls(
            members=members,
            foci=np.asarray(foci, dtype=float),
            side=side,
            gram_worst_db=worst_correlation_db(members),
            kind=kind,
            notes=tuple(notes),
        )

    def __len__(self) -> int:
        return len(self.members)

    def __getitem__(self, i) -> SampledProfile:
        return self.members[i]

    @property
    def mesh(self) -> AntennaMesh:
        return self.members[0].mesh

    def matrix(self) -> np.ndarray:
        """Members stacked row-wise, shape ``(n_members, n_samples)``."""
        return np.array([m.values for m in self.members])


class NullSet(NamedTuple):
    """Closed-form focal points and the integer indices that generated them."""

    foci: np.ndarray
    indices: np.ndarray


def gram_matrix(members: Sequence[SampledProfile]) -> np.ndarray:
    """Normalized Gram matrix ``<f_m, f_n> / (|f_m| |f_n|)``."""
    mesh = members[0].mesh
    a = np.array([m.values for m in members])
    gram = (np.conj(a) * mesh.weights) @ a.T
    norms = np.sqrt(np.real(np.diagonal(gram)))
    return gram / np.outer(norms, norms)


def worst_correlation_db(members: Sequence[SampledProfile]) -> float:
    if len(members) < 2:
        return -math.inf
    gram = np.abs(gram_matrix(members))
    off = gram[~np.eye(len(members), dtype=bool)]
    worst = float(off.max())
    return 20 * math.log10(worst) if worst > 0 else -math.inf


def _check_tx_mesh(g: ScenarioGeometry, tx_mesh: Optional[AntennaMesh]) -> AntennaMesh:
    mesh = tx_mesh if tx_mesh is not None else g.tx_mesh()
    if abs(mesh.length - g.tx_length) > 1e-9 * g.tx_length:
        raise ValueError("TX mesh does not cover the TX aperture")
    return mesh


def steering_profile(angle: float, g: ScenarioGeometry, tx_mesh=None) -> FocusingProfile:
    """Linear-phase profile ``exp(-j k eta sin(angle)) / sqrt(L_T)``."""
    if not abs(angle) <= math.pi / 2 + 1e-12:
        raise ValueError(f"steering angle must satisfy |angle| <= pi/2, got {angle!r}")
    mesh = _check_tx_mesh(g, tx_mesh)
    k, amp = g.wavenumber, 1 / math.sqrt(g.tx_length)
    slope = k * math.sin(angle)

    def source(eta):
        return amp * np.exp(-1j * slope * np.asarray(eta))

    return FocusingProfile(angle, SampledProfile.from_function(mesh, source), "steering")


def focusing_profile(y_focus: float, g: ScenarioGeometry, tx_mesh=None) -> FocusingProfile:
    """Phase-conjugate profile focusing on the RX point ``(z, y_focus)``."""
    mesh = _check_tx_mesh(g, tx_mesh)
    k, amp = g.wavenumber, 1 / math.sqrt(g.tx_length)

    def source(eta):
        return amp * np.exp(1j * k * point_distance(np.asarray(eta), y_focus, g))

    return FocusingProfile(float(y_focus), SampledProfile.from_function(mesh, source), "focusing")


def hemisphere_steering_basis(g: ScenarioGeometry, tx_mesh=None) -> BasisSet:
    """All orthogonal far-field beams of the TX over ``[-pi/2, pi/2]``.

    Beam ``n`` points at ``arcsin(n lambda / L_T)``; there are
    ``2 floor(L_T/lambda) + 1`` of them.
    """
    ratio = g.wavelength / g.tx_length
    n_max = math.floor(1 / ratio + 1e-12)
    angles = [math.asin(max(-1.0, min(1.0, n * ratio))) for n in range(-n_max, n_max + 1)]
    members = [steering_profile(a, g, tx_mesh).profile for a in angles]
    return BasisSet.build(members, angles, "tx", kind="steering")


def _strictly_inside(y: float, g: ScenarioGeometry) -> bool:
    lo, hi = g.rx_span
    return lo < y < hi


def find_orthogonal_foci(
    g: ScenarioGeometry,
    tx_mesh: Optional[AntennaMesh] = None,
    search_resolution: Optional[float] = None,
    kernel: str = "amplitude-approx",
) -> np.ndarray:
    """Focal points whose focusing profiles are orthogonal to the central one.

    Starting at the RX center, the kernel magnitude ``|K_R(y, y_c)|`` is
    scanned outward on a uniform grid in each direction.  Every local minimum
    strictly inside the RX becomes a focus after sub-grid refinement.

    Returns
    -------
    ndarray
        Sorted foci, always including ``y_c``.
    """
    mesh = _check_tx_mesh(g, tx_mesh)
    spacing = g.wavelength * g.center_distance / g.tx_length
    if search_resolution is None:
        search_resolution = spacing / 40
    elif not 0 < search_resolution <= spacing / 20 * (1 + 1e-12):
        raise ValueError(
            f"search_resolution must be in (0, {spacing / 20:g}] to resolve the kernel nulls"
        )
    yc = g.rx_center_offset

    def power(y):
        return np.abs(kernel_KR(y, yc, g, mode=kernel, tx_mesh=mesh, rtol=None)) ** 2

    steps = math.ceil(g.rx_length / 2 / search_resolution) + 2
    found = [yc]
    for direction in (1.0, -1.0):
        grid = yc + direction * search_resolution * np.arange(steps)
        p = power(grid)
        inner = np.arange(1, steps - 1)
        minima = inner[(p[inner] < p[inner - 1]) & (p[inner] <= p[inner + 1])]
        for i in minima:
            y = _refine_minimum(power, grid, p, i)
            if not _strictly_inside(grid[i], g) and not _strictly_inside(y, g):
                break
            if _strictly_inside(y, g):
                found.append(y)
    return np.sort(np.array(found))


def _refine_minimum(power, grid, p, i) -> float:
    """Locate a kernel minimum bracketed by grid points ``i-1`` and ``i+1``."""
    a, b = sorted((grid[i - 1], grid[i + 1]))
    denom = p[i - 1] - 2 * p[i] + p[i + 1]
    h = grid[i + 1] - grid[i]
    seed = grid[i] + (0.5 * h * (p[i - 1] - p[i + 1]) / denom if denom > 0 else 0.0)
    res = minimize_scalar(
        lambda y: float(power(y)),
        bounds=(a, b),
        method="bounded",
        options={"xatol": abs(h) * 1e-9},
    )
    best = res.x if res.fun <= float(power(seed)) else seed
    return float(best)


def focusing_basis(
    g: ScenarioGeometry,
    tx_mesh: Optional[AntennaMesh] = None,
    rx_mesh: Optional[AntennaMesh] = None,
    foci: Optional[Sequence[float]] = None,
    kernel: str = "amplitude-approx",
    rtol: Optional[float] = DEFAULT_RTOL,
) -> tuple[BasisSet, BasisSet]:
    """Focusing-function TX basis and the RX beams it produces.

    RX members are the propagated focused fields normalized to unit norm.
    """
    mesh = _check_tx_mesh(g, tx_mesh)
    rx_mesh = rx_mesh if rx_mesh is not None else g.rx_mesh()
    if foci is None:
        foci = find_orthogonal_foci(g, mesh, kernel=kernel)
    foci = np.asarray(foci, dtype=float)
    if foci.size == 0:
        raise ValueError("at least one focus is required")
    tx = [focusing_profile(y, g, mesh).profile for y in foci]
    rx = [propagate(p, g, rx_mesh, rtol=rtol).normalized() for p in tx]
    return (
        BasisSet.build(tx, foci, "tx", kind="focusing"),
        BasisSet.build(rx, foci, "rx", kind="focusing"),
    )


def _steering_parameter(y, g: ScenarioGeometry):
    """``rho(y) = (sin t - (y/z) cos t) / sqrt(1 + (y/z)^2)``, the sine of the
    (negated) steering angle from the TX boresight toward ``(z, y)``."""
    gamma = np.asarray(y, dtype=float) / g.distance
    t = g.tx_rotation
    return (math.sin(t) - gamma * math.cos(t)) / np.sqrt(1 + gamma**2)


def _sis_phase_curvature(g: ScenarioGeometry) -> float:
    """Largest dropped second-order phase term of the linearized focusing."""
    lo, hi = g.rx_span
    worst = 0.0
    for y in (lo, g.rx_center_offset, hi):
        r0 = math.hypot(g.distance, y)
        rho = float(_steering_parameter(y, g))
        worst = max(worst, g.wavenumber * 0.5 * (1 - rho**2) / r0 * (g.tx_length / 2) ** 2)
    return worst


def sis_uplink_foci(g: ScenarioGeometry) -> NullSet:
    """Closed-form foci of the steering basis of a small TX.

    Index ``n`` steers toward ``asin(-n lambda/L_T - rho_c) + theta`` from the
    ``z`` axis.  It is kept when that direction exists and its ray hits the RX
    strictly inside the segment.  When the forward ray misses, the mirror lobe
    of the same linear aperture (same ``rho``) is tried.
    """
    lam_over_l = g.wavelength / g.tx_length
    rho_c = float(_steering_parameter(g.rx_center_offset, g))
    t = g.tx_rotation
    n_max = math.ceil(2 / lam_over_l) + 1
    foci, indices = [], []
    for n in range(-n_max, n_max + 1):
        x = -n * lam_over_l - rho_c
        if n == 0:
            x = -rho_c
        if not -1 - 1e-12 <= x <= 1 + 1e-12:
            continue
        beta = math.asin(max(-1.0, min(1.0, x)))
        for alpha in (beta + t, math.pi - beta + t):
            alpha = math.remainder(alpha, 2 * math.pi)
            if abs(alpha) >= math.pi / 2:
                continue
            y = g.distance * math.tan(alpha)
            if n == 0 or _strictly_inside(y, g):
                foci.append(g.rx_center_offset if n == 0 else y)
                indices.append(n)
                break
    order = np.argsort(foci)
    return NullSet(np.asarray(foci)[order], np.asarray(indices, dtype=int)[order])


def sis_uplink_bases(
    g: ScenarioGeometry,
    tx_mesh: Optional[AntennaMesh] = None,
    rx_mesh: Optional[AntennaMesh] = None,
) -> tuple[BasisSet, BasisSet]:
    """Closed-form steering TX basis and sinc RX basis for a small TX.

    RX members are the space-varying sincs
    ``sinc((L_T/lambda) (rho(y) - rho_n))`` normalized on the RX mesh; the
    propagation phase across the RX is not part of the closed form.
    """
    mesh = _check_tx_mesh(g, tx_mesh)
    rx_mesh = rx_mesh if rx_mesh is not None else g.rx_mesh()
    nulls = sis_uplink_foci(g)
    rho_c = float(_steering_parameter(g.rx_center_offset, g))
    lam_over_l = g.wavelength / g.tx_length
    k, amp = g.wavenumber, 1 / math.sqrt(g.tx_length)
    notes = []
    curvature = _sis_phase_curvature(g)
    if curvature > math.pi / 8:
        msg = (
            f"dropped second-order TX phase reaches {curvature:.3g} rad (> pi/8); "
            "the linear steering closed form is approximate here"
        )
        warnings.warn(msg, ValidityWarning, stacklevel=2)
        notes.append(msg)
    tx, rx = [], []
    rho_rx = _steering_parameter(rx_mesh.coordinates, g)
    for n in nulls.indices:
        rho_n = rho_c + n * lam_over_l

        def source(eta, _s=k * rho_n):
            return amp * np.exp(1j * _s * np.asarray(eta))

        tx.append(SampledProfile.from_function(mesh, source))
        rx.append(
            SampledProfile(rx_mesh, np.sinc(g.tx_length / g.wavelength * (rho_rx - rho_n))).normalized()
        )
    return (
        BasisSet.build(tx, nulls.foci, "tx", kind="sis-uplink", notes=notes),
        BasisSet.build(rx, nulls.foci, "rx", kind="sis-uplink", notes=notes),
    )


def _require_paraxial(g: ScenarioGeometry) -> None:
    if g.tx_rotation != 0 or g.rx_center_offset != 0:
        raise GeometryError(
            "the Fresnel closed form needs tx_rotation = 0 and rx_center_offset = 0; "
            "use focusing_basis for other geometries"
        )


def fresnel_downlink_foci(g: ScenarioGeometry) -> NullSet:
    """Foci ``y_n = n lambda z / L_T`` strictly inside the RX."""
    _require_paraxial(g)
    step = g.wavelength * g.distance / g.tx_length
    n_max = math.floor(g.rx_length / 2 / step) + 1
    idx = np.array([n for n in range(-n_max, n_max + 1) if _strictly_inside(n * step, g)], dtype=int)
    return NullSet(idx * step, idx)


def fresnel_downlink_bases(
    g: ScenarioGeometry,
    tx_mesh: Optional[AntennaMesh] = None,
    rx_mesh: Optional[AntennaMesh] = None,
) -> tuple[BasisSet, BasisSet]:
    """Fresnel-focusing TX basis and sinc RX basis for a centered parallel RX.

    TX member ``n`` is ``exp(j pi eta^2/(lambda z)) exp(-j 2 pi n eta / L_T) / sqrt(L_T)``;
    RX member ``n`` is ``sinc(L_T y / (lambda z) - n)`` normalized, the
    paraxial field of TX member ``n``, which peaks at ``y_n``.
    """
    nulls = fresnel_downlink_foci(g)
    mesh = _check_tx_mesh(g, tx_mesh)
    rx_mesh = rx_mesh if rx_mesh is not None else g.rx_mesh()
    lam, z, lt = g.wavelength, g.distance, g.tx_length
    notes = []
    if lt**2 / (8 * z) > lam / 16:
        msg = (
            f"quadratic focusing phase reaches {math.pi * lt**2 / (4 * lam * z):.3g} rad "
            "(> pi/8); Fresnel members may deviate from exact focusing"
        )
        warnings.warn(msg, ValidityWarning, stacklevel=2)
        notes.append(msg)
    amp = 1 / math.sqrt(lt)
    tx, rx = [], []
    for n in nulls.indices:
        def source(eta, _n=int(n)):
            eta = np.asarray(eta)
            return amp * np.exp(1j * math.pi * eta**2 / (lam * z)) * np.exp(-2j * math.pi * _n * eta / lt)

        tx.append(SampledProfile.from_function(mesh, source))
        rx.append(
            SampledProfile(rx_mesh, np.sinc(lt * rx_mesh.coordinates / (lam * z) - n)).normalized()
        )
    return (
        BasisSet.build(tx, nulls.foci, "tx", kind="fresnel-downlink", notes=notes),
        BasisSet.build(rx, nulls.foci, "rx", kind="fresnel-downlink", notes=notes),
    )


def _db_for_output(value: float) -> float:
    return max(DB_FLOOR, value)


def basis_summary(basis: BasisSet) -> dict:
    """JSON-ready description of a basis (foci and measured orthogonality)."""
    return {
        "side": basis.side,
        "kind": basis.kind,
        "n_members": len(basis),
        "foci": [float(f) for f in basis.foci],
        "gram_worst_db": _db_for_output(basis.gram_worst_db),
        "notes": list(basis.notes),
    }


def write_basis_csv(basis: BasisSet, path, header: Optional[str] = None) -> None:
    """Write ``member_index, coordinate_m, re, im`` rows plus a JSON sidecar.

    The sidecar is written next to ``path`` with a ``.json`` suffix.
    """
    from pathlib import Path

    path = Path(path)
    with path.open("w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["member_index", "coordinate_m", "re", "im"])
        for i, member in enumerate(basis.members):
            for x, v in zip(member.mesh.coordinates, member.values):
                writer.writerow([i, repr(float(x)), repr(float(v.real)), repr(float(v.imag))])
    path.with_suffix(".json").write_text(json.dumps(basis_summary(basis), indent=2) + "\n")
