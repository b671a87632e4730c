"""Run configuration files (flat ``key=value``) and run manifests."""

from __future__ import annotations

import datetime as _dt
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .errors import ConfigError
from .operators import MODEL_MODES, FilterParams
from .solver import FORCING_PRESETS, IC_PRESETS, SolverConfig

SCHEMA_VERSION = 1

DEFAULTS = {
    "grid_n": 32,
    "nu": 0.02,
    "alpha": 0.25,
    "theta": 0.5,
    "deconv_n": 4,
    "dt": 1e-3,
    "t_end": 0.5,
    "ic": "taylor_green_2d",
    "seed": 7,
    "forcing": "none",
    "model_mode": "radm",
    "cfl_safety": 0.5,
    "sample_every": 1,
    "out_dir": "radm_out",
}

_INT_KEYS = {"grid_n", "deconv_n", "seed", "sample_every"}
_FLOAT_KEYS = {"nu", "alpha", "theta", "dt", "t_end", "cfl_safety"}
_ENUMS = {"ic": IC_PRESETS, "forcing": FORCING_PRESETS, "model_mode": MODEL_MODES}


@dataclass(frozen=True)
class RunSettings:
    """A parsed configuration: solver settings plus output controls."""

    solver: SolverConfig
    sample_every: int = 1
    out_dir: str = "radm_out"
    lines: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def grid_n(self) -> int:
        return self.solver.grid_n

    def as_flat(self) -> dict:
        s = self.solver
        return {
            "grid_n": s.grid_n,
            "nu": s.nu,
            "alpha": s.filter.alpha,
            "theta": s.filter.theta,
            "deconv_n": s.filter.deconv_order,
            "dt": s.dt,
            "t_end": s.t_end,
            "ic": s.ic_preset,
            "seed": s.ic_seed,
            "forcing": s.forcing_preset,
            "model_mode": s.model_mode,
            "cfl_safety": s.cfl_safety,
            "sample_every": self.sample_every,
            "out_dir": self.out_dir,
        }


def _convert(key: str, raw: str, line: int):
    if key in _INT_KEYS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{key} expects an integer, got {raw!r}", line, key) from None
    if key in _FLOAT_KEYS:
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"{key} expects a number, got {raw!r}", line, key) from None
        if not math.isfinite(val):
            raise ConfigError(f"{key} must be finite, got {raw!r}", line, key)
        return val
    if key in _ENUMS and raw not in _ENUMS[key]:
        choices = ", ".join(_ENUMS[key])
        raise ConfigError(f"{key} must be one of {choices}; got {raw!r}", line, key)
    return raw


def _check_ranges(values: dict, lines: dict) -> None:
    def fail(key, msg):
        raise ConfigError(f"{key} {msg}", lines.get(key), key)

    if values["grid_n"] < 8 or values["grid_n"] % 2:
        fail("grid_n", f"must be even and >= 8, got {values['grid_n']}")
    if values["nu"] < 0:
        fail("nu", f"must be >= 0, got {values['nu']}")
    if not 0.0 <= values["theta"] <= 1.0:
        fail("theta", f"must lie in [0, 1], got {values['theta']}")
    if values["alpha"] < 0:
        fail("alpha", f"must be >= 0, got {values['alpha']}")
    if values["deconv_n"] < 0:
        fail("deconv_n", f"must be >= 0, got {values['deconv_n']}")
    for key in ("dt", "t_end"):
        if values[key] <= 0:
            fail(key, f"must be positive, got {values[key]}")
    if not 0.0 < values["cfl_safety"] <= 1.0:
        fail("cfl_safety", f"must lie in (0, 1], got {values['cfl_safety']}")
    if values["sample_every"] < 1:
        fail("sample_every", f"must be >= 1, got {values['sample_every']}")
    if values["nu"] == 0 and values["forcing"] != "none":
        fail("nu", "= 0 is only allowed with forcing=none")


def parse_key_values(text: str, *, allowed=None) -> tuple[dict, dict]:
    """Split ``key=value`` lines into (raw values, line numbers).

    Blank lines and ``#`` comments are skipped; with ``allowed`` set, unknown
    keys raise ConfigError.
    """
    raw, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected key=value, got {body!r}", lineno)
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if allowed is not None and key not in allowed:
            raise ConfigError(f"unknown key {key!r}", lineno, key)
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (first on line {lines[key]})", lineno, key)
        raw[key], lines[key] = value, lineno
    return raw, lines


def settings_from_values(raw: dict, lines: dict | None = None) -> RunSettings:
    lines = lines or {}
    values = dict(DEFAULTS)
    for key, value in raw.items():
        values[key] = _convert(key, value, lines.get(key)) if isinstance(value, str) else value
    _check_ranges(values, lines)
    try:
        solver = SolverConfig(
            nu=values["nu"],
            filter=FilterParams(values["alpha"], values["theta"], values["deconv_n"]),
            dt=values["dt"],
            t_end=values["t_end"],
            forcing_preset=values["forcing"],
            ic_preset=values["ic"],
            ic_seed=values["seed"],
            cfl_safety=values["cfl_safety"],
            model_mode=values["model_mode"],
            grid_n=values["grid_n"],
        )
    except ConfigError as exc:
        key = exc.key
        raise ConfigError(str(exc), lines.get(key), key) from None
    return RunSettings(solver, values["sample_every"], str(values["out_dir"]), dict(lines))


def parse_config(text: str) -> RunSettings:
    """Parse a strict ``key=value`` run configuration.

    Missing keys take the values in DEFAULTS.  Errors carry the offending
    line number.
    """
    raw, lines = parse_key_values(text, allowed=DEFAULTS.keys())
    return settings_from_values(raw, lines)


def load_config(path: str | Path) -> RunSettings:
    path = Path(path)
    if path.suffix == ".json":
        return RunManifest.read(path).settings
    return parse_config(path.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class RunManifest:
    settings: RunSettings
    created_at: str
    code_revision: str = __version__
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def create(cls, settings: RunSettings) -> "RunManifest":
        stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
        return cls(settings, stamp)

    def to_json(self) -> str:
        # json emits floats with repr(), the shortest round-trip decimal
        flat = self.settings.as_flat()
        doc = {
            "schema_version": self.schema_version,
            "created_at": self.created_at,
            "code_revision": self.code_revision,
            "grid": {"n_per_axis": flat.pop("grid_n"), "box_length": "2*pi"},
            "config": flat,
        }
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ConfigError(f"unsupported manifest schema {doc.get('schema_version')!r}")
        values = dict(doc["config"])
        values["grid_n"] = doc["grid"]["n_per_axis"]
        unknown = set(values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown manifest keys {sorted(unknown)}")
        settings = settings_from_values(values)
        return cls(settings, doc["created_at"], doc.get("code_revision", "unknown"), SCHEMA_VERSION)

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8", newline="\n")

    @classmethod
    def read(cls, path: str | Path) -> "RunManifest":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))
