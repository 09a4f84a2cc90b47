"""Problem instances: loading, validation and unit normalization.

A scenario file is YAML (JSON is accepted too).  Every physical field may be
given in SI/linear form under its plain name, or with a unit suffix that is
converted on load::

    name_dB   ->  10**(x/10)
    name_dBm  ->  10**((x-30)/10) W
    name_km   ->  x * 1000 m
    name_deg  ->  radians
    name_kg   ->  x * g0 N   (weight force)

Nested parameter groups live under the keys ``FlightLimits``, ``SarParams``
and ``AeroParams``.  Omitted aerodynamic and SAR parameters take the default
platform values below.
"""

from __future__ import annotations

import dataclasses
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, NamedTuple

import numpy as np
import yaml


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (``1e-9``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)(?:[eE][-+]?[0-9]+)?$
               |^[-+]?\.(?:inf|Inf|INF)$|^\.(?:nan|NaN|NAN)$""", re.X),
    list("-+0123456789."))

BOLTZMANN = 1.380649e-23
SPEED_OF_LIGHT = 299_792_458.0
STANDARD_GRAVITY = 9.80665


class ScenarioError(ValueError):
    """Base class; ``errors`` holds one message per failure."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class SchemaError(ScenarioError):
    pass


class ValidationError(ScenarioError):
    pass


class GroundPoint(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class FlightLimits:
    H_min: float = 20e3
    H_max: float = 30e3
    V_xy_max: float = 40.0
    V_z_max: float = 30.0
    bank_angle: float = math.radians(10.0)
    obs_angle: float = math.radians(45.0)

    @property
    def V_max(self) -> float:
        return math.hypot(self.V_xy_max, self.V_z_max)


@dataclass(frozen=True)
class SarParams:
    G_t: float = 10 ** 3.5
    G_r: float = 10 ** 3.5
    sigma0: float = 1.0
    tau_p: float = 10e-6
    PRF: float = 2.0
    T_o: float = 290.0
    NF: float = 10 ** 0.6
    B_r: float = 200e6
    L_tot: float = 10.0
    kappa: float = BOLTZMANN
    c: float = SPEED_OF_LIGHT


@dataclass(frozen=True)
class AeroParams:
    C_D0: float = 0.015
    S: float = 143.0
    f_p: float = 0.85
    f_e: float = 0.90
    e_o: float = 0.6385
    AR_w: float = 30.0
    F_w: float = 165.0 * STANDARD_GRAVITY

    @property
    def induced_factor(self) -> float:
        return 1.0 / (math.pi * self.e_o * self.AR_w)


@dataclass(frozen=True)
class Scenario:
    users: tuple[GroundPoint, ...]
    targets: tuple[GroundPoint, ...]
    M: int
    wavelength: float
    weights: tuple[float, ...] = ()
    ref_gain: float = 1e3
    noise_power: tuple[float, ...] = ()
    rician_K: float = 10.0
    flight: FlightLimits = field(default_factory=FlightLimits)
    sar: SarParams = field(default_factory=SarParams)
    aero: AeroParams = field(default_factory=AeroParams)
    power_max: float = 10.0
    bp_threshold: float = 10 ** ((-36 - 30) / 10)
    snr_min: float = 0.0
    e_start: float | None = None
    horizon: float = 350.0
    slots: int = 35
    rng_seed: int = 0
    disc_accuracy: float | None = None
    area: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        # fill per-user defaults so K-length tuples are always present
        if not self.weights:
            object.__setattr__(self, "weights", (1.0,) * len(self.users))
        if not self.noise_power:
            object.__setattr__(self, "noise_power", (1e-9,) * len(self.users))

    @property
    def K(self) -> int:
        return len(self.users)

    @property
    def Q(self) -> int:
        return len(self.targets)

    @property
    def dt(self) -> float:
        return self.horizon / self.slots

    @property
    def user_xy(self) -> np.ndarray:
        return np.array(self.users, dtype=float).reshape(-1, 2)

    @property
    def target_xy(self) -> np.ndarray:
        return np.array(self.targets, dtype=float).reshape(-1, 2)

    @property
    def noise(self) -> np.ndarray:
        return np.array(self.noise_power, dtype=float)

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)

    def deployment_area(self) -> tuple[float, float, float, float]:
        """(x_min, x_max, y_min, y_max); defaults to the bounding box of all ground points."""
        if self.area is not None:
            return self.area
        pts = np.vstack([self.user_xy, self.target_xy])
        return (float(pts[:, 0].min()), float(pts[:, 0].max()),
                float(pts[:, 1].min()), float(pts[:, 1].max()))

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)


class TimeGrid(NamedTuple):
    dt: float
    indices: np.ndarray
    midpoints: np.ndarray


def time_grid(scenario: Scenario) -> TimeGrid:
    """Slot indices 0..N and the midpoints of slots 1..N."""
    N = scenario.slots
    if N < 1:
        raise ValueError(f"slots must be >= 1, got {N}")
    dt = scenario.horizon / N
    return TimeGrid(dt, np.arange(N + 1), (np.arange(1, N + 1) - 0.5) * dt)


def slots_for(horizon: float, dt: float) -> int:
    n = horizon / dt
    if n < 1 or abs(n - round(n)) > 1e-9 * n:
        raise ValueError(f"horizon {horizon} is not a whole number of {dt} s slots")
    return int(round(n))


# ---------------------------------------------------------------------------
# loading

def _db(x):
    return 10 ** (x / 10)


def _dbm(x):
    return 10 ** ((x - 30) / 10)


_SUFFIXES = {
    "dB": _db,
    "dBm": _dbm,
    "km": lambda x: x * 1000.0,
    "deg": math.radians,
    "kg": lambda x: x * STANDARD_GRAVITY,
}

# field -> allowed unit suffixes (plain name is always allowed)
_TOP_FIELDS = {
    "users": ("km",), "targets": ("km",), "weights": (), "M": (),
    "wavelength": (), "ref_gain": ("dB",), "noise_power": ("dBm",),
    "rician_K": ("dB",), "power_max": ("dBm",), "bp_threshold": ("dBm",),
    "snr_min": ("dB",), "e_start": (), "horizon": (), "slots": (),
    "rng_seed": (), "disc_accuracy": (), "area": ("km",),
}
_GROUPS = {
    "FlightLimits": (FlightLimits, {
        "H_min": ("km",), "H_max": ("km",), "V_xy_max": (), "V_z_max": (),
        "bank_angle": ("deg",), "obs_angle": ("deg",)}),
    "SarParams": (SarParams, {
        "G_t": ("dB",), "G_r": ("dB",), "sigma0": ("dB",), "tau_p": (), "PRF": (),
        "T_o": (), "NF": ("dB",), "B_r": (), "L_tot": ("dB",), "kappa": (), "c": ()}),
    "AeroParams": (AeroParams, {
        "C_D0": (), "S": (), "f_p": (), "f_e": (), "e_o": (), "AR_w": (), "F_w": ("kg",)}),
}
_GROUP_ATTR = {"FlightLimits": "flight", "SarParams": "sar", "AeroParams": "aero"}
_REQUIRED = ("users", "targets", "M", "wavelength")


def _convert(value, fn):
    if isinstance(value, (list, tuple)):
        return [_convert(v, fn) for v in value]
    return fn(value)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_numeric(value, path, errors) -> bool:
    if isinstance(value, (list, tuple)):
        return all([_check_numeric(v, f"{path}[{i}]", errors) for i, v in enumerate(value)])
    if not _is_number(value):
        errors.append(f"{path}: expected a number, got {value!r}")
        return False
    return True


def _normalize_section(raw: dict, allowed: dict, prefix: str, errors: list) -> dict:
    out: dict[str, Any] = {}
    for key, value in raw.items():
        path = f"{prefix}{key}"
        base, conv = key, None
        for sfx, fn in _SUFFIXES.items():
            if key.endswith("_" + sfx) and key[: -len(sfx) - 1] in allowed:
                base, conv = key[: -len(sfx) - 1], fn
                if sfx not in allowed[base]:
                    errors.append(f"{path}: unit suffix '_{sfx}' not accepted for {base}")
                    conv = False
                break
        if base not in allowed:
            errors.append(f"{path}: unknown field")
            continue
        if base in out:
            errors.append(f"{path}: {base} given more than once")
            continue
        if conv is False:
            continue
        if value is None:
            out[base] = None
            continue
        if not _check_numeric(value, path, errors):
            continue
        out[base] = _convert(value, conv) if conv else value
    return out


def _points(value, path, errors) -> tuple[GroundPoint, ...]:
    pts = []
    for i, p in enumerate(value or []):
        if not isinstance(p, (list, tuple)) or len(p) != 2:
            errors.append(f"{path}[{i}]: expected [x, y]")
            continue
        pts.append(GroundPoint(float(p[0]), float(p[1])))
    return tuple(pts)


def scenario_from_dict(raw: dict) -> Scenario:
    """Build a validated Scenario from a parsed configuration mapping."""
    if not isinstance(raw, dict):
        raise SchemaError(["<root>: expected a mapping"])
    errors: list[str] = []
    top_raw = {k: v for k, v in raw.items() if k not in _GROUPS}
    top = _normalize_section(top_raw, _TOP_FIELDS, "", errors)
    groups = {}
    for gname, (cls, allowed) in _GROUPS.items():
        sub = raw.get(gname) or {}
        if not isinstance(sub, dict):
            errors.append(f"{gname}: expected a mapping")
            continue
        groups[_GROUP_ATTR[gname]] = cls(**_normalize_section(sub, allowed, f"{gname}.", errors))
    for key in _REQUIRED:
        if key not in top:
            errors.append(f"{key}: required field missing")
    if errors:
        raise SchemaError(errors)

    kwargs = dict(top)
    kwargs["users"] = _points(top["users"], "users", errors)
    kwargs["targets"] = _points(top["targets"], "targets", errors)
    if errors:
        raise SchemaError(errors)
    K = len(kwargs["users"])
    if "noise_power" in kwargs and kwargs["noise_power"] is not None:
        n = kwargs["noise_power"]
        kwargs["noise_power"] = tuple(float(v) for v in (n if isinstance(n, list) else [n] * K))
    if "weights" in kwargs:
        kwargs["weights"] = tuple(float(v) for v in kwargs["weights"])
    if kwargs.get("area") is not None:
        kwargs["area"] = tuple(float(v) for v in kwargs["area"])
    for key in ("M", "slots", "rng_seed"):
        if key in kwargs and kwargs[key] is not None:
            if float(kwargs[key]) != int(kwargs[key]):
                errors.append(f"{key}: expected an integer")
            kwargs[key] = int(kwargs[key])
    for key in ("wavelength", "ref_gain", "rician_K", "power_max", "bp_threshold",
                "snr_min", "horizon", "e_start", "disc_accuracy"):
        if kwargs.get(key) is not None:
            kwargs[key] = float(kwargs[key])
    if errors:
        raise SchemaError(errors)
    scenario = Scenario(**kwargs, **groups)
    validate(scenario)
    return scenario


def validation_errors(s: Scenario) -> list[str]:
    errs = []
    fl = s.flight
    if s.K == 0:
        errs.append("users: must be non-empty")
    if s.Q == 0:
        errs.append("targets: must be non-empty")
    for name, pts in (("users", s.users), ("targets", s.targets)):
        for i, p in enumerate(pts):
            if not all(math.isfinite(c) for c in p):
                errs.append(f"{name}[{i}]: non-finite coordinate")
    if len(s.weights) != s.K:
        errs.append(f"weights: expected {s.K} entries, got {len(s.weights)}")
    if any(not b > 0 for b in s.weights):
        errs.append("weights: all entries must be > 0")
    if len(s.noise_power) != s.K:
        errs.append(f"noise_power: expected {s.K} entries, got {len(s.noise_power)}")
    if any(not n > 0 for n in s.noise_power):
        errs.append("noise_power: all entries must be > 0")
    if s.M < 1:
        errs.append("M: must be >= 1")
    if not s.wavelength > 0:
        errs.append("wavelength: must be > 0")
    if not s.ref_gain > 0:
        errs.append("ref_gain: must be > 0")
    if not s.rician_K >= 0:
        errs.append("rician_K: must be >= 0")
    if not s.power_max > 0:
        errs.append("power_max: must be > 0")
    if not s.bp_threshold >= 0:
        errs.append("bp_threshold: must be >= 0")
    if not s.snr_min >= 0:
        errs.append("snr_min: must be >= 0")
    if s.e_start is not None and not s.e_start > 0:
        errs.append("e_start: must be > 0 when given")
    if s.slots < 1:
        errs.append("slots: must be >= 1")
    if not s.horizon > 0:
        errs.append("horizon: must be > 0")
    if not 0 < fl.H_min < fl.H_max:
        errs.append(f"FlightLimits: need 0 < H_min < H_max, got [{fl.H_min}, {fl.H_max}]")
    if not (fl.V_xy_max > 0 and fl.V_z_max >= 0):
        errs.append("FlightLimits: speed limits must be positive")
    if not 0 < fl.obs_angle < math.pi / 2:
        errs.append("FlightLimits.obs_angle: must lie in (0, pi/2)")
    if not 0 <= fl.bank_angle < math.pi / 2:
        errs.append("FlightLimits.bank_angle: must lie in [0, pi/2)")
    for f in dataclasses.fields(s.sar):
        if not getattr(s.sar, f.name) > 0:
            errs.append(f"SarParams.{f.name}: must be > 0")
    a = s.aero
    for name in ("C_D0", "S", "e_o", "AR_w", "F_w"):
        if not getattr(a, name) > 0:
            errs.append(f"AeroParams.{name}: must be > 0")
    for name in ("f_p", "f_e"):
        if not 0 < getattr(a, name) <= 1:
            errs.append(f"AeroParams.{name}: must lie in (0, 1]")
    if s.area is not None:
        if len(s.area) != 4 or not (s.area[0] <= s.area[1] and s.area[2] <= s.area[3]):
            errs.append("area: expected [x_min, x_max, y_min, y_max] with min <= max")
    if s.disc_accuracy is not None and s.slots >= 1 and fl.H_min > 0:
        if not s.disc_accuracy > 0:
            errs.append("disc_accuracy: must be > 0")
        else:
            need = fl.V_xy_max * s.horizon / (fl.H_min * s.disc_accuracy)
            if s.slots < need:
                errs.append(f"slots: {s.slots} below the discretization minimum {math.ceil(need)}")
    return errs


def validate(scenario: Scenario) -> Scenario:
    errs = validation_errors(scenario)
    if errs:
        raise ValidationError(errs)
    return scenario


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        raw = yaml.load(path.read_text(), Loader=_Loader)
    except yaml.YAMLError as exc:
        raise SchemaError([f"<root>: cannot parse {path.name}: {exc}"]) from None
    return scenario_from_dict(raw)


def scenario_to_dict(s: Scenario) -> dict:
    """SI-only mapping; ``scenario_from_dict`` of the result reproduces ``s`` exactly."""
    out: dict[str, Any] = {
        "users": [list(p) for p in s.users],
        "targets": [list(p) for p in s.targets],
        "M": s.M,
        "wavelength": s.wavelength,
        "weights": list(s.weights),
        "ref_gain": s.ref_gain,
        "noise_power": list(s.noise_power),
        "rician_K": s.rician_K,
        "power_max": s.power_max,
        "bp_threshold": s.bp_threshold,
        "snr_min": s.snr_min,
        "e_start": s.e_start,
        "horizon": s.horizon,
        "slots": s.slots,
        "rng_seed": s.rng_seed,
        "disc_accuracy": s.disc_accuracy,
        "area": list(s.area) if s.area is not None else None,
    }
    for gname, attr in _GROUP_ATTR.items():
        out[gname] = dataclasses.asdict(getattr(s, attr))
    return out


def dump_scenario(s: Scenario) -> str:
    return json.dumps(scenario_to_dict(s), indent=2)


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dump_scenario(s) + "\n")


def builtin_scenario(name: str) -> Scenario:
    """Load one of the packaged scenarios (``desk``, ``desk_compact``, ``full``)."""
    here = Path(__file__).parent / "data" / f"{name}.yaml"
    if not here.exists():
        raise FileNotFoundError(f"no packaged scenario named {name!r}")
    return load_scenario(here)
