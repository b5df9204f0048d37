"""Communication modes: numerical SVD and closed-form counters.

The SVD works on the quadrature-weighted Green matrix
``M = diag(sqrt(w_R)) G diag(sqrt(w_T))`` so that its singular values
approximate the singular values of the continuous coupling operator.

The counters take lengths and distance from a :class:`ScenarioGeometry`.
Each formula assumes its own configuration (parallel, perpendicular, rotated
by ``theta``) with a centered RX, and the offset ``y_c`` is not used.
Every counter returns a real value.  :func:`round_count` gives the integer.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg

from .basis import BasisSet
from .em import SampledProfile, green_matrix
from .geometry import AntennaMesh, ScenarioGeometry, build_mesh

__all__ = [
    "MAX_SVD_SAMPLES",
    "NumericalError",
    "MeshCoarseningWarning",
    "ModeSolution",
    "ModeCountReport",
    "svd_modes",
    "energy_mode_count",
    "round_count",
    "count_parallel",
    "count_perpendicular",
    "count_generic",
    "count_limit",
    "count_classic_paraxial",
    "f_ratio_counts",
    "fraunhofer_distance",
    "fraunhofer_mode_count",
    "mode_count_report",
    "write_spectrum_csv",
]

MAX_SVD_SAMPLES = 4096


class NumericalError(RuntimeError):
    """A factorization or solver failed to produce a result."""


class MeshCoarseningWarning(UserWarning):
    """A mesh exceeded the SVD size cap and was coarsened."""


@dataclass(frozen=True, eq=False)
class ModeSolution:
    """Singular system of the discretized link.

    ``tx_modes`` and ``rx_modes`` hold the leading ``len(tx_modes)`` singular
    function pairs (by default the first ``mode_count``); ``singular_values``
    holds the full spectrum.
    """

    singular_values: np.ndarray
    tx_modes: BasisSet
    rx_modes: BasisSet
    mode_count: int
    energy_fraction: float
    energy: str = "power"

    @property
    def coupling_gain(self) -> float:
        """``sum sigma_i^2``, the discrete counterpart of the sum rule."""
        return float(np.sum(self.singular_values**2))

    def cumulative_fraction(self) -> np.ndarray:
        w = _energy_weights(self.singular_values, self.energy)
        return np.cumsum(w) / np.sum(w)


def _energy_weights(s: np.ndarray, energy: str) -> np.ndarray:
    if energy == "power":
        return s**2
    if energy == "amplitude":
        return s
    raise ValueError(f"energy must be 'power' or 'amplitude', got {energy!r}")


def energy_mode_count(singular_values, energy_fraction: float = 0.99, energy: str = "power") -> int:
    """Smallest ``k`` whose leading ``k`` values hold ``energy_fraction`` of the total.

    With ``energy="power"`` the values are squared before summing.
    """
    if not 0 < energy_fraction < 1:
        raise ValueError("energy_fraction must lie in (0, 1)")
    w = _energy_weights(np.asarray(singular_values, dtype=float), energy)
    cum = np.cumsum(w)
    return int(np.argmax(cum >= energy_fraction * cum[-1])) + 1


def _capped(mesh: AntennaMesh, cap: int) -> AntennaMesh:
    if len(mesh) <= cap:
        return mesh
    warnings.warn(
        f"{mesh.label or 'aperture'} mesh has {len(mesh)} samples; coarsened to {cap} for the SVD",
        MeshCoarseningWarning,
        stacklevel=3,
    )
    lo = mesh.coordinates[0] - mesh.weights[0] / 2
    hi = mesh.coordinates[-1] + mesh.weights[-1] / 2
    return build_mesh(hi - lo, (hi - lo) / cap, center=(lo + hi) / 2, label=mesh.label)


def svd_modes(
    g: ScenarioGeometry,
    tx_mesh: Optional[AntennaMesh] = None,
    rx_mesh: Optional[AntennaMesh] = None,
    energy_fraction: float = 0.99,
    energy: str = "power",
    keep: Optional[int] = None,
    max_samples: int = MAX_SVD_SAMPLES,
) -> ModeSolution:
    """Singular value decomposition of the sampled coupling operator.

    Parameters
    ----------
    g : ScenarioGeometry
    tx_mesh, rx_mesh : AntennaMesh, optional
        Defaults to ``g.tx_mesh()`` and ``g.rx_mesh()``.  Meshes above
        ``max_samples`` cells are rebuilt uniformly at the cap.
    energy_fraction : float
        Fraction of the total used to define the mode count.
    energy : {"power", "amplitude"}
        Sum ``sigma**2`` (default) or ``sigma``.
    keep : int, optional
        Number of singular function pairs stored; default the mode count.

    Returns
    -------
    ModeSolution
    """
    g.check_separable()
    if not 0 < energy_fraction < 1:
        raise ValueError("energy_fraction must lie in (0, 1)")
    tx_mesh = _capped(tx_mesh if tx_mesh is not None else g.tx_mesh(), max_samples)
    rx_mesh = _capped(rx_mesh if rx_mesh is not None else g.rx_mesh(), max_samples)
    sw_t, sw_r = np.sqrt(tx_mesh.weights), np.sqrt(rx_mesh.weights)
    m = sw_r[:, None] * green_matrix(g, tx_mesh.coordinates, rx_mesh.coordinates) * sw_t[None, :]
    try:
        u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesdd")
    except np.linalg.LinAlgError:
        try:
            u, s, vh = scipy.linalg.svd(m, full_matrices=False, lapack_driver="gesvd")
        except np.linalg.LinAlgError as exc:
            raise NumericalError(f"SVD did not converge: {exc}") from exc
    n = energy_mode_count(s, energy_fraction, energy)
    k = min(s.size, keep if keep is not None else n)
    tx = [SampledProfile(tx_mesh, np.conj(vh[i]) / sw_t) for i in range(k)]
    rx = [SampledProfile(rx_mesh, u[:, i] / sw_r) for i in range(k)]
    return ModeSolution(
        singular_values=s,
        tx_modes=BasisSet.build(tx, np.arange(k), "tx", kind="svd"),
        rx_modes=BasisSet.build(rx, np.arange(k), "rx", kind="svd"),
        mode_count=n,
        energy_fraction=energy_fraction,
        energy=energy,
    )


def round_count(value: float) -> int:
    """Closest integer, halves away from zero, never below one."""
    return max(1, int(math.floor(value + 0.5)))


def _phi_max(g: ScenarioGeometry) -> float:
    return math.atan(g.rx_length / (2 * g.distance))


def count_parallel(g: ScenarioGeometry) -> float:
    """``1 + 2 L_T L_R / (lambda sqrt(4 z^2 + L_R^2))`` for parallel apertures."""
    return 1 + 2 * g.tx_length * g.rx_length / (
        g.wavelength * math.sqrt(4 * g.distance**2 + g.rx_length**2)
    )


def count_perpendicular(g: ScenarioGeometry) -> float:
    """``1 + L_T (sqrt(4z^2 + L_R^2) - 2z) / (lambda sqrt(4z^2 + L_R^2))``."""
    root = math.sqrt(4 * g.distance**2 + g.rx_length**2)
    return 1 + g.tx_length * (root - 2 * g.distance) / (g.wavelength * root)


def count_generic(g: ScenarioGeometry) -> float:
    """Mode count for a TX rotated by ``theta`` in ``[0, pi/2]``.

    Below ``theta_b = pi/2 - phi_max/2`` both RX half-planes collect beams;
    above it only the upper one does.  The two branches agree at ``theta_b``.
    """
    theta = g.tx_rotation
    if not 0 <= theta <= math.pi / 2:
        raise ValueError(f"count_generic needs 0 <= theta <= pi/2, got {theta!r}")
    phi = _phi_max(g)
    ratio = g.tx_length / g.wavelength
    if theta <= math.pi / 2 - phi / 2:
        return 1 + 2 * ratio * math.sin(phi) * math.cos(theta)
    return 1 + ratio * (math.sin(phi - theta) + math.sin(theta))


def count_limit(g: ScenarioGeometry) -> float:
    """Limit of :func:`count_generic` for an infinitely large or close RX."""
    theta = abs(g.tx_rotation)
    ratio = g.tx_length / g.wavelength
    if theta <= math.pi / 4:
        return 1 + 2 * ratio * math.cos(theta)
    return 1 + ratio * (math.cos(theta) + math.sin(theta))


def count_classic_paraxial(g: ScenarioGeometry) -> float:
    """Paraxial estimate ``L_T L_R / (lambda z)``."""
    return g.tx_length * g.rx_length / (g.wavelength * g.distance)


def f_ratio_counts(F: float, tx_length: float, wavelength: float) -> tuple[float, float]:
    """Parallel and perpendicular counts written in terms of ``F = z / L_R``."""
    if not F > 0:
        raise ValueError("F must be positive")
    root = math.sqrt(1 + 4 * F**2)
    ratio = tx_length / wavelength
    return 1 + 2 * ratio / root, 1 + ratio * (root - 2 * F) / root


def fraunhofer_distance(D: float, wavelength: float) -> float:
    """Fraunhofer distance ``2 D^2 / lambda``."""
    if not D > 0:
        raise ValueError("aperture size must be positive")
    return 2 * D**2 / wavelength


def fraunhofer_mode_count(r_ff_tx: float, r_ff_rx: float, distance: float) -> float:
    """Paraxial count rewritten as ``sqrt(r_ff_T r_ff_R) / (2 z)``."""
    return math.sqrt(r_ff_tx * r_ff_rx) / (2 * distance)


@dataclass(frozen=True)
class ModeCountReport:
    """All closed-form counts for one geometry, with optional numerical counts."""

    F: float
    phi_max: float
    theta: float
    N_classic: float
    N_parallel: float
    N_perpendicular: float
    N_generic: float
    N_limit: float
    N_svd: Optional[int] = None
    N_focusing: Optional[int] = None
    notes: tuple = field(default=())

    CLOSED_FORMS = ("N_classic", "N_parallel", "N_perpendicular", "N_generic", "N_limit")

    def rounded(self) -> dict:
        return {name: round_count(getattr(self, name)) for name in self.CLOSED_FORMS}

    def to_dict(self) -> dict:
        out = {"F": self.F, "phi_max": self.phi_max, "theta": self.theta}
        rounded = self.rounded()
        for name in self.CLOSED_FORMS:
            out[name] = {"value": getattr(self, name), "rounded": rounded[name]}
        out["N_svd"] = self.N_svd
        out["N_focusing"] = self.N_focusing
        out["notes"] = list(self.notes)
        return out

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def mode_count_report(
    g: ScenarioGeometry, n_svd: Optional[int] = None, n_focusing: Optional[int] = None
) -> ModeCountReport:
    """Evaluate every closed-form counter for ``g``.

    A negative rotation is mirrored to ``|theta|``, which leaves the counts
    unchanged by symmetry.
    """
    notes = []
    if g.tx_rotation < 0:
        g = g.mirrored()
        notes.append("negative rotation mirrored to |theta|")
    if g.rx_center_offset != 0:
        notes.append("closed forms assume a centered RX; rx_center_offset ignored")
    return ModeCountReport(
        F=g.distance / g.rx_length,
        phi_max=_phi_max(g),
        theta=g.tx_rotation,
        N_classic=count_classic_paraxial(g),
        N_parallel=count_parallel(g),
        N_perpendicular=count_perpendicular(g),
        N_generic=count_generic(g),
        N_limit=count_limit(g),
        N_svd=n_svd,
        N_focusing=n_focusing,
        notes=tuple(notes),
    )


def write_spectrum_csv(solution: ModeSolution, path, header: Optional[str] = None) -> None:
    """Write ``index, sigma, sigma2, cumulative_fraction`` rows."""
    s = solution.singular_values
    cum = solution.cumulative_fraction()
    with Path(path).open("w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "sigma", "sigma2", "cumulative_fraction"])
        for i, (v, c) in enumerate(zip(s, cum), start=1):
            writer.writerow([i, repr(float(v)), repr(float(v * v)), repr(float(c))])
