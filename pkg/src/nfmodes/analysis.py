"""Orthogonality audits, beam patterns and parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .basis import (
    DB_FLOOR,
    BasisSet,
    FocusingProfile,
    focusing_basis,
    fresnel_downlink_foci,
    gram_matrix,
    sis_uplink_foci,
)
from .em import DEFAULT_RTOL, propagate
from .geometry import AntennaMesh, ScenarioGeometry
from .modes import count_generic, mode_count_report, svd_modes

__all__ = [
    "CorrelationMatrix",
    "BeamPattern",
    "MethodComparison",
    "SweepResult",
    "SWEEP_AXES",
    "cross_correlation_db",
    "beam_pattern",
    "compare_methods",
    "sweep",
    "write_pattern_csv",
    "write_sweep_csv",
    "write_correlation_csv",
]

SWEEP_AXES = ("F", "theta", "z", "f0")


class CorrelationMatrix(NamedTuple):
    db: np.ndarray
    worst_db: float


def cross_correlation_db(basis: BasisSet) -> CorrelationMatrix:
    """Pairwise normalized correlations ``20 log10 |<f_m, f_n>|`` in dB.

    The diagonal is 0 dB by construction.  A single-member set has no
    off-diagonal entries and reports ``worst_db = -inf``.
    """
    members = list(getattr(basis, "members", basis))
    mag = np.abs(gram_matrix(members))
    np.fill_diagonal(mag, 1.0)
    with np.errstate(divide="ignore"):
        db = 20 * np.log10(mag)
    db = 0.5 * (db + db.T)
    if len(members) < 2:
        return CorrelationMatrix(db, -math.inf)
    off = db[~np.eye(len(members), dtype=bool)]
    return CorrelationMatrix(db, float(off.max()))


class BeamPattern(NamedTuple):
    y: np.ndarray
    field: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray


def beam_pattern(
    profile,
    g: ScenarioGeometry,
    y_grid,
    normalize: bool = True,
    rtol: Optional[float] = DEFAULT_RTOL,
) -> BeamPattern:
    """Field radiated by a TX profile along the RX line.

    Parameters
    ----------
    profile : FocusingProfile or SampledProfile
    y_grid : array_like
        Strictly increasing RX-line coordinates within the RX segment
        extended by ``L_R`` on both sides.
    normalize : bool
        Scale the magnitude to a unit maximum.  ``field`` is never scaled.
    """
    if isinstance(profile, FocusingProfile):
        profile = profile.profile
    y = np.asarray(y_grid, dtype=float)
    lo, hi = g.rx_span
    if y.size == 0 or y.min() < lo - g.rx_length or y.max() > hi + g.rx_length:
        raise ValueError("pattern grid must lie within the RX segment extended by L_R")
    grid = AntennaMesh(y, np.ones_like(y), label="pattern")
    values = propagate(profile, g, grid, rtol=rtol).values
    mag = np.abs(values)
    if normalize and mag.max() > 0:
        mag = mag / mag.max()
    return BeamPattern(y, values, mag, np.angle(values))


@dataclass(frozen=True)
class MethodComparison:
    """One-scenario comparison of the three mode-counting methods."""

    N_svd: int
    N_focusing: int
    N_closed_form: Optional[int]
    gram_worst_tx_db: float
    gram_worst_rx_db: float
    closed_form: Optional[str]
    N_generic: Optional[float]

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["gram_worst_tx_db"] = max(DB_FLOOR, self.gram_worst_tx_db)
        out["gram_worst_rx_db"] = max(DB_FLOOR, self.gram_worst_rx_db)
        return out


def _closed_form_count(g: ScenarioGeometry) -> tuple[Optional[int], Optional[str]]:
    if g.tx_length <= g.rx_length:
        return len(sis_uplink_foci(g).foci), "sis-uplink"
    if g.tx_rotation == 0 and g.rx_center_offset == 0:
        return len(fresnel_downlink_foci(g).foci), "fresnel-downlink"
    return None, None


def compare_methods(
    g: ScenarioGeometry,
    mesh_spacing: Optional[float] = None,
    energy_fraction: float = 0.99,
) -> MethodComparison:
    """Mode counts from the SVD, the focusing null search and a closed form.

    The closed form is the number of well-coupled steering beams when the TX
    is the smaller aperture, the number of Fresnel foci for a larger TX in
    the paraxial geometry, and absent otherwise.
    """
    tx_mesh, rx_mesh = g.tx_mesh(mesh_spacing), g.rx_mesh(mesh_spacing)
    sol = svd_modes(g, tx_mesh, rx_mesh, energy_fraction=energy_fraction)
    tx, rx = focusing_basis(g, tx_mesh, rx_mesh)
    n_closed, method = _closed_form_count(g)
    theta = abs(g.tx_rotation)
    try:
        n_generic = count_generic(g.replace(tx_rotation=theta))
    except ValueError:
        n_generic = None
    return MethodComparison(
        N_svd=sol.mode_count,
        N_focusing=len(tx),
        N_closed_form=n_closed,
        gram_worst_tx_db=tx.gram_worst_db,
        gram_worst_rx_db=rx.gram_worst_db,
        closed_form=method,
        N_generic=n_generic,
    )


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Mode-count reports along one swept parameter.

    ``errors`` maps failed sample indices to diagnostics; those samples have
    ``None`` in ``rows``.
    """

    axis: str
    values: np.ndarray
    rows: tuple
    provenance: dict
    errors: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        out = []
        for row in self.rows:
            value = None if row is None else getattr(row, name)
            out.append(np.nan if value is None else value)
        return np.array(out, dtype=float)


def _at(g: ScenarioGeometry, axis: str, value: float) -> ScenarioGeometry:
    if axis == "F":
        return g.replace(distance=value * g.rx_length)
    if axis == "theta":
        return g.replace(tx_rotation=value)
    if axis == "z":
        return g.replace(distance=value)
    if axis == "f0":
        return g.replace(frequency=value)
    raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")


def sweep(
    g_template: ScenarioGeometry,
    axis: str,
    values: Sequence[float],
    svd_every: Optional[int] = 5,
    focusing: bool = True,
    mesh_spacing: Optional[float] = None,
    energy_fraction: float = 0.99,
) -> SweepResult:
    """Evaluate mode counts while varying one parameter.

    ``axis`` is ``"F"`` (distance ``F * L_R``), ``"theta"`` (radians), ``"z"``
    or ``"f0"``.  The SVD and, if requested, the focusing count are computed
    at every ``svd_every``-th sample starting from the first; ``None``
    disables them.  A failing sample is recorded in ``errors`` and the sweep
    continues.
    """
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("sweep needs at least one value")
    steps = np.diff(values)
    if values.size > 1 and not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("sweep values must be strictly monotone")
    if svd_every is not None and svd_every < 1:
        raise ValueError("svd_every must be a positive integer")
    rows, errors = [], {}
    for i, v in enumerate(values):
        try:
            g = _at(g_template, axis, float(v))
            n_svd = n_foc = None
            if svd_every is not None and i % svd_every == 0:
                tx_mesh, rx_mesh = g.tx_mesh(mesh_spacing), g.rx_mesh(mesh_spacing)
                n_svd = svd_modes(g, tx_mesh, rx_mesh, energy_fraction=energy_fraction).mode_count
                if focusing:
                    n_foc = len(focusing_basis(g, tx_mesh, rx_mesh, rtol=None)[0])
            rows.append(mode_count_report(g, n_svd=n_svd, n_focusing=n_foc))
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            rows.append(None)
            errors[i] = f"{type(exc).__name__}: {exc}"
    return SweepResult(axis, values, tuple(rows), dataclasses.asdict(g_template), errors)


def _writer(path, header):
    fh = Path(path).open("w", newline="")
    if header:
        fh.write(f"# {header}\n")
    return fh, csv.writer(fh, lineterminator="\n")


def _num(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if not isinstance(x, (int, np.integer)) else str(int(x))


def write_pattern_csv(pattern: BeamPattern, path, header: Optional[str] = None) -> None:
    fh, w = _writer(path, header)
    with fh:
        w.writerow(["y_m", "magnitude", "phase_rad"])
        for y, m, p in zip(pattern.y, pattern.magnitude, pattern.phase):
            w.writerow([_num(y), _num(m), _num(p)])


SWEEP_COLUMNS = ("N_classic", "N_parallel", "N_perpendicular", "N_generic", "N_svd", "N_focusing")


def write_sweep_csv(result: SweepResult, path, header: Optional[str] = None) -> None:
    """One row per sweep value; failed samples and skipped markers are empty."""
    fh, w = _writer(path, header)
    with fh:
        w.writerow(["axis_value", *SWEEP_COLUMNS])
        for v, row in zip(result.values, result.rows):
            cells = [_num(None if row is None else getattr(row, c)) for c in SWEEP_COLUMNS]
            w.writerow([_num(v), *cells])


def write_correlation_csv(corr: CorrelationMatrix, path, header: Optional[str] = None) -> None:
    """Long-format ``m, n, db`` rows, with dB values clamped at the floor."""
    fh, w = _writer(path, header)
    with fh:
        w.writerow(["m", "n", "db"])
        n = corr.db.shape[0]
        for i in range(n):
            for j in range(n):
                w.writerow([i, j, _num(max(DB_FLOOR, float(corr.db[i, j])))])
