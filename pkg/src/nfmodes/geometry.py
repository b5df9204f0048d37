"""Link geometry and aperture discretization.

Two linear apertures lie in the same plane.  The receiver (RX) runs along
the ``y`` axis at horizontal distance ``z`` and is centered at ``y = y_c``.
The transmitter (TX) is centered at the origin and rotated by ``theta``
(counterclockwise positive) with respect to the ``y`` axis; ``eta`` is the
coordinate along it.  A TX point sits at ``(-eta*sin(theta), eta*cos(theta))``
in ``(z, y)`` coordinates.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import speed_of_light

__all__ = [
    "GeometryError",
    "ScenarioGeometry",
    "AntennaMesh",
    "point_distance",
    "build_mesh",
    "default_spacing",
    "segments_intersect",
]

#: Minimum link distance, in wavelengths (reactive near field is not modeled).
MIN_DISTANCE_WAVELENGTHS = 5.0


class GeometryError(ValueError):
    """Raised for physically invalid or unsupported link geometries."""


@dataclass(frozen=True)
class ScenarioGeometry:
    """Full description of a two-aperture link.

    Parameters
    ----------
    tx_length, rx_length : float
        Aperture lengths ``L_T`` and ``L_R`` in meters.
    distance : float
        Horizontal distance ``z`` between the aperture centers, meters.
    frequency : float
        Carrier frequency ``f0`` in hertz.
    rx_center_offset : float
        Vertical offset ``y_c`` of the RX center, meters.
    tx_rotation : float
        TX rotation ``theta`` in radians, within ``[-pi/2, pi/2]``.
    """

    tx_length: float
    rx_length: float
    distance: float
    frequency: float
    rx_center_offset: float = 0.0
    tx_rotation: float = 0.0

    def __post_init__(self):
        for name in ("tx_length", "rx_length", "distance", "frequency"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise GeometryError(f"{name} must be positive and finite, got {value!r}")
        if not np.isfinite(self.rx_center_offset):
            raise GeometryError("rx_center_offset must be finite")
        if not (-math.pi / 2 - 1e-12 <= self.tx_rotation <= math.pi / 2 + 1e-12):
            raise GeometryError(
                f"tx_rotation must lie in [-pi/2, pi/2], got {self.tx_rotation!r}"
            )
        if self.distance < MIN_DISTANCE_WAVELENGTHS * self.wavelength:
            raise GeometryError(
                f"distance {self.distance:g} m is below {MIN_DISTANCE_WAVELENGTHS:g} "
                f"wavelengths ({MIN_DISTANCE_WAVELENGTHS * self.wavelength:g} m)"
            )

    @property
    def wavelength(self) -> float:
        return speed_of_light / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength

    @property
    def center_distance(self) -> float:
        return math.hypot(self.distance, self.rx_center_offset)

    @property
    def rx_span(self) -> tuple[float, float]:
        """Open interval ``(y_c - L_R/2, y_c + L_R/2)`` covered by the RX."""
        half = self.rx_length / 2
        return self.rx_center_offset - half, self.rx_center_offset + half

    def replace(self, **changes) -> "ScenarioGeometry":
        return dataclasses.replace(self, **changes)

    def mirrored(self) -> "ScenarioGeometry":
        """Reflect the scene through the ``z`` axis (``y -> -y``).

        Negative rotations map to positive ones, which is what the closed-form
        counters expect.
        """
        return self.replace(
            rx_center_offset=-self.rx_center_offset, tx_rotation=-self.tx_rotation
        )

    def tx_mesh(self, max_spacing: float | None = None) -> "AntennaMesh":
        spacing = max_spacing or default_spacing(self.tx_length, self.wavelength)
        return build_mesh(self.tx_length, spacing, label="tx")

    def rx_mesh(self, max_spacing: float | None = None) -> "AntennaMesh":
        spacing = max_spacing or default_spacing(self.rx_length, self.wavelength)
        return build_mesh(
            self.rx_length, spacing, center=self.rx_center_offset, label="rx"
        )

    def check_separable(self) -> None:
        """Raise :class:`GeometryError` if the two segments touch or cross."""
        if segments_intersect(self):
            raise GeometryError("TX and RX segments intersect (zero distance)")


@dataclass(frozen=True, eq=False)
class AntennaMesh:
    """Midpoint-rule discretization of one aperture.

    ``coordinates`` are positions along the aperture's own axis (``eta`` for
    the TX, absolute ``y`` for the RX) and ``weights`` the cell widths.
    """

    coordinates: np.ndarray
    weights: np.ndarray
    label: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if coords.ndim != 1 or coords.shape != weights.shape or coords.size == 0:
            raise ValueError("coordinates and weights must be equal-length 1D arrays")
        if coords.size > 1 and not np.all(np.diff(coords) > 0):
            raise ValueError("mesh coordinates must be strictly increasing")
        if not np.all(weights > 0):
            raise ValueError("mesh weights must be positive")
        coords.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "weights", weights)

    def __len__(self) -> int:
        return self.coordinates.size

    @property
    def length(self) -> float:
        return float(self.weights.sum())

    @property
    def spacing(self) -> float:
        """Largest cell width."""
        return float(self.weights.max())

    def refined(self, factor: int = 2) -> "AntennaMesh":
        """Split every cell into ``factor`` equal sub-cells."""
        if factor < 1:
            raise ValueError("refinement factor must be >= 1")
        offsets = (np.arange(factor) + 0.5) / factor - 0.5
        coords = (self.coordinates[:, None] + offsets[None, :] * self.weights[:, None]).ravel()
        weights = np.repeat(self.weights / factor, factor)
        return AntennaMesh(coords, weights, self.label)

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """Weighted inner product ``sum_i w_i conj(a_i) b_i``."""
        return complex(np.sum(self.weights * np.conj(a) * b))


def point_distance(eta, y, g: ScenarioGeometry):
    """Distance between TX point ``eta`` and RX point ``y``.

    Broadcasts over array inputs.
    """
    s, c = math.sin(g.tx_rotation), math.cos(g.tx_rotation)
    return np.sqrt((g.distance + eta * s) ** 2 + (y - eta * c) ** 2)


def default_spacing(length: float, wavelength: float) -> float:
    """Default cell width ``min(lambda/8, L/64)``."""
    return min(wavelength / 8, length / 64)


def build_mesh(
    length: float, max_spacing: float, center: float = 0.0, label: str = ""
) -> AntennaMesh:
    """Uniform midpoint mesh over ``[center - length/2, center + length/2]``.

    The number of cells is ``ceil(length / max_spacing)`` so that the actual
    spacing never exceeds ``max_spacing``.
    """
    if not (length > 0 and max_spacing > 0):
        raise ValueError("length and max_spacing must be positive")
    n = max(1, math.ceil(length / max_spacing - 1e-12))
    h = length / n
    coords = center - length / 2 + h * (np.arange(n) + 0.5)
    return AntennaMesh(coords, np.full(n, h), label)


def segments_intersect(g: ScenarioGeometry) -> bool:
    """True if the TX segment touches or crosses the RX segment."""
    s, c = math.sin(g.tx_rotation), math.cos(g.tx_rotation)
    half = g.tx_length / 2
    lo, hi = g.rx_center_offset - g.rx_length / 2, g.rx_center_offset + g.rx_length / 2
    if abs(s) < 1e-15:
        return False
    # TX reaches the RX line z = distance at eta = -distance / sin(theta)
    eta = -g.distance / s
    if abs(eta) > half:
        return False
    y = eta * c
    return lo <= y <= hi
