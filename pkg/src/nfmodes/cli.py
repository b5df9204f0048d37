"""Command-line front end.

Scenario files are flat ``key = value`` lines (``#`` starts a comment)::

    tx_length_m = 1.0
    rx_length_m = 0.2
    distance_m = 2.0
    rx_center_offset_m = 1.2
    tx_rotation_deg = 20
    frequency_hz = 28e9

Command parameters (``method``, ``profile``, ``axis``, ``values`` ...) may
appear in the same file; command-line flags override them.  Every output
table starts with a ``# config: {...}`` line holding the resolved config.
"""

from __future__ import annotations

import argparse
import configparser
import io
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import analysis, basis, modes
from .geometry import GeometryError, ScenarioGeometry

__all__ = ["ConfigError", "RunConfig", "parse_config", "serialize_config", "load_config", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SCENARIO_KEYS = {
    "tx_length_m": float,
    "rx_length_m": float,
    "distance_m": float,
    "frequency_hz": float,
    "rx_center_offset_m": float,
    "tx_rotation_deg": float,
}
REQUIRED_KEYS = ("tx_length_m", "rx_length_m", "distance_m", "frequency_hz")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _fraction(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise ValueError("must lie in (0, 1)")
    return value


def _positive(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise ValueError("must be positive")
    return value


def _boolean(text: str) -> bool:
    lowered = str(text).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError("must be a boolean")


def _choice(*options):
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return text

    return parse


PARAM_KEYS = {
    "mesh_spacing_m": _positive,
    "energy_fraction": _fraction,
    "method": _choice("focusing", "sis-uplink", "fresnel-downlink"),
    "profile": str,
    "axis": _choice(*analysis.SWEEP_AXES),
    "values": str,
    "svd_every": _positive_int,
    "pattern_points": _positive_int,
    "pattern_margin_m": float,
    "normalize": _boolean,
    "write_bases": _boolean,
}
KEY_ORDER = list(SCENARIO_KEYS) + list(PARAM_KEYS)


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


@dataclass
class RunConfig:
    """Resolved scenario plus command parameters."""

    scenario: dict
    params: dict = field(default_factory=dict)

    def geometry(self) -> ScenarioGeometry:
        s = self.scenario
        return ScenarioGeometry(
            tx_length=s["tx_length_m"],
            rx_length=s["rx_length_m"],
            distance=s["distance_m"],
            frequency=s["frequency_hz"],
            rx_center_offset=s.get("rx_center_offset_m", 0.0),
            tx_rotation=math.radians(s.get("tx_rotation_deg", 0.0)),
        )

    def get(self, key: str, default=None):
        return self.params.get(key, default)

    def as_dict(self) -> dict:
        merged = {**self.scenario, **self.params}
        return {k: merged[k] for k in KEY_ORDER if k in merged}


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text, rejecting unknown or malformed keys."""
    parser = configparser.ConfigParser(
        interpolation=None, comment_prefixes=("#", ";"), inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        parser.read_string("[scenario]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    scenario, params = {}, {}
    for key, raw in parser.items("scenario"):
        if key in SCENARIO_KEYS:
            target, convert = scenario, SCENARIO_KEYS[key]
        elif key in PARAM_KEYS:
            target, convert = params, PARAM_KEYS[key]
        else:
            raise ConfigError(f"unknown config key {key!r}")
        try:
            target[key] = convert(raw)
        except ValueError as exc:
            raise ConfigError(f"invalid value for {key!r}: {raw!r} ({exc})") from exc
    missing = [k for k in REQUIRED_KEYS if k not in scenario]
    if missing:
        raise ConfigError(f"missing required config key {missing[0]!r}")
    return RunConfig(scenario, params)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_config(config: RunConfig) -> str:
    return "".join(f"{k} = {_format_value(v)}\n" for k, v in config.as_dict().items())


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------- output


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.17g" % float(value)
    return str(value)


def _json_safe(value):
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isinf(value):
            return None
        return value
    return value


class Output:
    """Routes tables and documents to ``--out`` files or stdout."""

    def __init__(self, config: RunConfig, out: Optional[str], fmt: str, stream=None):
        self.config = config
        self.out = Path(out) if out else None
        self.fmt = fmt
        self.stream = stream or sys.stdout
        if self.out:
            self.out.mkdir(parents=True, exist_ok=True)
        self.header = "config: " + json.dumps(config.as_dict(), sort_keys=True)

    def table(self, name: str, columns, rows, primary: bool = True) -> None:
        if self.fmt == "json":
            doc = {"config": self.config.as_dict(), "columns": list(columns),
                   "rows": [[_json_safe(c) for c in r] for r in rows]}
            text = json.dumps(doc, indent=1) + "\n"
        else:
            buf = io.StringIO()
            buf.write(f"# {self.header}\n")
            buf.write(",".join(columns) + "\n")
            for r in rows:
                buf.write(",".join(_cell(c) for c in r) + "\n")
            text = buf.getvalue()
        self._emit(f"{name}.{self.fmt}", text, primary)

    def document(self, name: str, doc: dict, primary: bool = True) -> None:
        text = json.dumps(_json_safe({"config": self.config.as_dict(), **doc}), indent=2) + "\n"
        self._emit(f"{name}.json", text, primary)

    def _emit(self, filename: str, text: str, primary: bool) -> None:
        if self.out:
            (self.out / filename).write_text(text)
        elif primary:
            self.stream.write(text)


# --------------------------------------------------------------- commands


def _meshes(config: RunConfig, g: ScenarioGeometry):
    spacing = config.get("mesh_spacing_m")
    return g.tx_mesh(spacing), g.rx_mesh(spacing)


def cmd_count(config: RunConfig, output: Output) -> None:
    report = modes.mode_count_report(config.geometry())
    if output.fmt == "csv":
        rounded = report.rounded()
        rows = [(name, getattr(report, name), rounded[name]) for name in report.CLOSED_FORMS]
        rows += [("F", report.F, None), ("phi_max", report.phi_max, None)]
        output.table("count", ["quantity", "value", "rounded"], rows)
    else:
        output.document("count", report.to_dict())


def _basis_rows(b: basis.BasisSet):
    for i, member in enumerate(b.members):
        for x, v in zip(member.mesh.coordinates, member.values):
            yield i, float(x), float(v.real), float(v.imag)


BASIS_COLUMNS = ["member_index", "coordinate_m", "re", "im"]


def cmd_svd(config: RunConfig, output: Output) -> None:
    g = config.geometry()
    tx_mesh, rx_mesh = _meshes(config, g)
    sol = modes.svd_modes(g, tx_mesh, rx_mesh, energy_fraction=config.get("energy_fraction", 0.99))
    s, cum = sol.singular_values, sol.cumulative_fraction()
    rows = [(i + 1, v, v * v, c) for i, (v, c) in enumerate(zip(s, cum))]
    output.table("spectrum", ["index", "sigma", "sigma2", "cumulative_fraction"], rows)
    summary = {
        "mode_count": sol.mode_count,
        "energy_fraction": sol.energy_fraction,
        "energy": sol.energy,
        "coupling_gain": sol.coupling_gain,
        "tx_samples": len(sol.tx_modes.mesh),
        "rx_samples": len(sol.rx_modes.mesh),
    }
    output.document("svd_summary", summary, primary=False)
    if config.get("write_bases", False):
        output.table("svd_tx_modes", BASIS_COLUMNS, _basis_rows(sol.tx_modes), primary=False)
        output.table("svd_rx_modes", BASIS_COLUMNS, _basis_rows(sol.rx_modes), primary=False)


def cmd_basis(config: RunConfig, output: Output) -> None:
    g = config.geometry()
    tx_mesh, rx_mesh = _meshes(config, g)
    method = config.get("method", "focusing")
    if method == "focusing":
        tx, rx = basis.focusing_basis(g, tx_mesh, rx_mesh)
    elif method == "sis-uplink":
        tx, rx = basis.sis_uplink_bases(g, tx_mesh, rx_mesh)
    else:
        tx, rx = basis.fresnel_downlink_bases(g, tx_mesh, rx_mesh)
    output.table("basis_tx", BASIS_COLUMNS, _basis_rows(tx), primary=False)
    output.table("basis_rx", BASIS_COLUMNS, _basis_rows(rx), primary=False)
    for name, b in (("tx", tx), ("rx", rx)):
        corr = analysis.cross_correlation_db(b)
        n = corr.db.shape[0]
        rows = [(i, j, max(basis.DB_FLOOR, corr.db[i, j])) for i in range(n) for j in range(n)]
        output.table(f"correlation_{name}", ["m", "n", "db"], rows, primary=False)
    output.document(
        "gram_report",
        {"method": method, "tx": basis.basis_summary(tx), "rx": basis.basis_summary(rx)},
    )


def _parse_profile(spec: str, g: ScenarioGeometry, tx_mesh):
    kind, _, arg = spec.partition(":")
    try:
        if kind == "rect" and not arg:
            return basis.steering_profile(0.0, g, tx_mesh)
        if kind == "steer":
            return basis.steering_profile(math.radians(float(arg)), g, tx_mesh)
        if kind == "focus":
            return basis.focusing_profile(float(arg), g, tx_mesh)
    except ValueError as exc:
        raise ConfigError(f"invalid profile {spec!r}: {exc}") from exc
    raise ConfigError(f"invalid profile {spec!r}; expected rect, steer:<deg> or focus:<y_m>")


def cmd_pattern(config: RunConfig, output: Output) -> None:
    g = config.geometry()
    tx_mesh, _ = _meshes(config, g)
    profile = _parse_profile(config.get("profile", "rect"), g, tx_mesh)
    margin = config.get("pattern_margin_m", 0.0)
    if not 0 <= margin <= g.rx_length:
        raise ConfigError("pattern_margin_m must lie in [0, rx_length_m]")
    lo, hi = g.rx_span
    y = np.linspace(lo - margin, hi + margin, config.get("pattern_points", 1001))
    pattern = analysis.beam_pattern(profile, g, y, normalize=config.get("normalize", True))
    rows = zip(pattern.y, pattern.magnitude, pattern.phase)
    output.table("pattern", ["y_m", "magnitude", "phase_rad"], rows)


def _parse_values(text: str, axis: str) -> np.ndarray:
    text = text.strip()
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            values = np.linspace(float(start), float(stop), int(num))
        else:
            values = np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise ConfigError(f"invalid sweep values {text!r}: use start:stop:num or a comma list") from exc
    if values.size == 0:
        raise ConfigError("sweep values are empty")
    return np.radians(values) if axis == "theta" else values


def cmd_sweep(config: RunConfig, output: Output) -> None:
    g = config.geometry()
    axis = config.get("axis")
    if axis is None or config.get("values") is None:
        raise ConfigError("sweep needs 'axis' and 'values'")
    values = _parse_values(config.get("values"), axis)
    result = analysis.sweep(
        g,
        axis,
        values,
        svd_every=config.get("svd_every", 5),
        mesh_spacing=config.get("mesh_spacing_m"),
        energy_fraction=config.get("energy_fraction", 0.99),
    )
    shown = np.degrees(result.values) if axis == "theta" else result.values
    rows = []
    for v, row in zip(shown, result.rows):
        rows.append([v] + [None if row is None else getattr(row, c) for c in analysis.SWEEP_COLUMNS])
    output.table("sweep", ["axis_value", *analysis.SWEEP_COLUMNS], rows)
    if result.errors:
        output.document("sweep_errors", {"errors": {str(k): v for k, v in result.errors.items()}},
                        primary=False)
        for i, msg in result.errors.items():
            print(f"sweep point {i}: {msg}", file=sys.stderr)


def cmd_compare(config: RunConfig, output: Output) -> None:
    g = config.geometry()
    record = analysis.compare_methods(
        g, config.get("mesh_spacing_m"), config.get("energy_fraction", 0.99)
    )
    if output.fmt == "csv":
        items = record.to_dict()
        output.table("compare", list(items), [list(items.values())])
    else:
        output.document("compare", record.to_dict())


COMMANDS = {
    "count": (cmd_count, "closed-form mode counts"),
    "svd": (cmd_svd, "singular value spectrum of the link"),
    "basis": (cmd_basis, "build a TX/RX basis and audit its orthogonality"),
    "pattern": (cmd_pattern, "field pattern of one TX profile along the RX"),
    "sweep": (cmd_sweep, "mode counts along one swept parameter"),
    "compare": (cmd_compare, "SVD vs focusing vs closed-form counts"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nfmodes", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="scenario file (key = value lines)")
    common.add_argument("--out", help="output directory; stdout when omitted")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--mesh-spacing", type=float, dest="mesh_spacing_m",
                        help="maximum mesh spacing in meters")
    common.add_argument("--energy-fraction", type=float, dest="energy_fraction")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        if name == "basis":
            p.add_argument("--method", choices=("focusing", "sis-uplink", "fresnel-downlink"))
        if name == "pattern":
            p.add_argument("--profile", help="rect, steer:<deg> or focus:<y_m>")
            p.add_argument("--points", type=int, dest="pattern_points")
            p.add_argument("--absolute", action="store_const", const=False, dest="normalize",
                           help="report raw field magnitudes")
        if name == "sweep":
            p.add_argument("--axis", choices=analysis.SWEEP_AXES)
            p.add_argument("--values", help="start:stop:num or comma list (theta in degrees)")
            p.add_argument("--svd-every", type=int, dest="svd_every")
        if name == "svd":
            p.add_argument("--write-bases", action="store_const", const=True, dest="write_bases")
    return parser


DEFAULT_FORMATS = {"count": "json", "compare": "json"}


def main(argv=None, stream=None) -> int:
    args = build_parser().parse_args(argv)
    stream = stream or sys.stdout
    try:
        config = load_config(args.config)
        overrides = {k: v for k, v in vars(args).items()
                     if k in PARAM_KEYS and v is not None}
        for key, value in overrides.items():
            try:
                config.params[key] = PARAM_KEYS[key](str(value))
            except ValueError as exc:
                raise ConfigError(f"invalid value for {key!r}: {value!r} ({exc})") from exc
        fmt = args.format or DEFAULT_FORMATS.get(args.command, "csv")
        output = Output(config, args.out, fmt, stream)
        COMMANDS[args.command][0](config, output)
    except (ConfigError, GeometryError) as exc:
        print(f"nfmodes: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (modes.NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"nfmodes: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"nfmodes: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
