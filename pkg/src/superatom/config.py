"""Scenario configuration: INI-style files with explicit units in key names.

Frequencies given in ``*_MHz`` keys are converted to rad/us on parsing.
Pulse shapes are dimensionless envelopes written ``t_us:value`` separated by
commas and scaled by the matching amplitude key.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import json
import math
import re
import warnings
from dataclasses import dataclass, field
from pathlib import Path

from . import params
from .basis import ELLIPTIC, SPHERICAL

KINDS = ("basis", "dos", "effective", "simulate", "validate", "sweep")


class ConfigError(ValueError):
    """Invalid scenario configuration."""


@dataclass(frozen=True)
class CloudConfig:
    sigma_um: float = 5.0
    sigma_z_um: float | None = None
    N: int = 400
    N0: float = params.N0_EXPERIMENT

    @property
    def sigma_z(self) -> float:
        return self.sigma_um if self.sigma_z_um is None else self.sigma_z_um


@dataclass(frozen=True)
class ModelConfig:
    state: str = "109S"
    C6_MHz_um6: float | None = None
    symmetry: str = SPHERICAL
    n_max: int = 3
    z_e: str = "z_omega"
    stage: str = "drive"
    decay: str = "spectral"
    leak: bool = True
    omega_grid: int = 64

    @property
    def C6(self) -> float:
        if self.C6_MHz_um6 is not None:
            return self.C6_MHz_um6 * params.TWO_PI
        return params.c6(self.state)


# flat-top drive of 500 ns inside a longer second-branch window, then a
# quasi-adiabatic mapping ramp
OMEGA1_SHAPE = ((0.0, 0.0), (0.10, 0.0), (0.15, 1.0), (0.55, 1.0), (0.60, 0.0))
OMEGA2_SHAPE = ((0.0, 0.0), (0.05, 1.0), (0.65, 1.0), (0.70, 0.0))
OMEGA_M_SHAPE = ((0.0, 0.0), (0.80, 0.0), (1.80, 1.0), (3.00, 1.0))


@dataclass(frozen=True)
class PulseConfig:
    omega_MHz: float | None = 3.0
    omega1_MHz: float = 22.0
    omega2_MHz: float = 7.8
    delta_MHz: float = -500.0
    omega_m_MHz: float = 0.0
    omega1_shape: tuple = OMEGA1_SHAPE
    omega2_shape: tuple = OMEGA2_SHAPE
    omega_m_shape: tuple = OMEGA_M_SHAPE


@dataclass(frozen=True)
class RateConfig:
    gamma_r_MHz: float = 0.0
    omega0_MHz: float = 0.0
    gamma_MHz: float = params.GAMMA_E / params.TWO_PI
    kappa_MHz: float = params.KAPPA / params.TWO_PI
    kappa0_MHz: float = params.KAPPA0 / params.TWO_PI
    g_MHz: float = params.G_CAVITY / params.TWO_PI
    eta_mm: float = 1.0
    tau_r_us: float = params.TAU_R


@dataclass(frozen=True)
class TimeConfig:
    t_end_us: float | None = None
    n_points: int = 201
    rtol: float = 1e-10


@dataclass(frozen=True)
class OracleConfig:
    realizations: int = 8
    seed: int = 1
    cutoff_multiple: float = 32.0
    tol: float = 1e-10


@dataclass(frozen=True)
class SweepConfig:
    states: tuple = ("109S", "95S", "80S")
    n_max: tuple = (3, 6, 8)
    n_values: int = 37
    omega1_min_MHz: float = 0.0
    omega1_max_MHz: float = 22.0
    measurement: str = "both"
    not_g_correction: float = 1.0


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "out"


@dataclass(frozen=True)
class DosConfig:
    beta: float = 0.0
    z_min: float = 1e-6
    z_max: float = 1e-2
    n_points: int = 2001


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str = "simulate"
    cloud: CloudConfig = field(default_factory=CloudConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    pulses: PulseConfig = field(default_factory=PulseConfig)
    rates: RateConfig = field(default_factory=RateConfig)
    time: TimeConfig = field(default_factory=TimeConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    dos: DosConfig = field(default_factory=DosConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    @property
    def beta(self) -> float:
        return 1.0 - self.cloud.sigma_z**2 / self.cloud.sigma_um**2

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """sha256 of the resolved configuration."""
        blob = json.dumps(self.as_dict(), sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()

    def replace(self, section: str | None = None, **kw) -> "ScenarioConfig":
        if section is None:
            return dataclasses.replace(self, **kw)
        return dataclasses.replace(self, **{section: dataclasses.replace(getattr(self, section), **kw)})


_SECTIONS = {
    "scenario": None,
    "cloud": CloudConfig,
    "model": ModelConfig,
    "pulses": PulseConfig,
    "rates": RateConfig,
    "time": TimeConfig,
    "oracle": OracleConfig,
    "sweep": SweepConfig,
    "dos": DosConfig,
    "output": OutputConfig,
}

_NON_NEGATIVE = {
    "rates": ("gamma_r_MHz", "omega0_MHz", "gamma_MHz", "kappa_MHz", "kappa0_MHz", "g_MHz", "eta_mm", "tau_r_us"),
    "pulses": ("omega2_MHz", "omega_m_MHz"),
}
_POSITIVE = {
    "cloud": ("sigma_um", "sigma_z_um", "N", "N0"),
    "time": ("t_end_us", "n_points", "rtol"),
    "oracle": ("realizations", "cutoff_multiple", "tol"),
    "sweep": ("n_values",),
    "dos": ("z_min", "z_max", "n_points"),
}


def _line_of(text: str, section: str, key: str | None = None) -> int:
    current = None
    for k, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"\[(.+)\]$", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return k
            continue
        if current == section and key is not None:
            m = re.match(r"([^=:\s]+)\s*[=:]", line)
            if m and m.group(1).lower() == key.lower():
                return k
    return 0


def _parse_shape(value: str) -> tuple:
    pts = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        t, v = item.split(":")
        pts.append((float(t), float(v)))
    if len(pts) < 2:
        raise ValueError("a pulse shape needs at least two t:value samples")
    return tuple(pts)


def convert_value(cls, name: str, value: str):
    f = {x.name: x for x in dataclasses.fields(cls)}[name]
    typ = str(f.type)
    v = value.strip()
    if name.endswith("_shape"):
        return _parse_shape(v)
    if typ.startswith("tuple"):
        items = [x.strip() for x in v.split(",") if x.strip()]
        if name == "n_max":
            return tuple(int(x) for x in items)
        return tuple(items)
    if "bool" in typ:
        low = v.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"expected a boolean, got {v!r}")
    if typ.startswith("int"):
        return int(v)
    if typ.startswith("float"):
        if "None" in typ and v.lower() in ("", "none"):
            return None
        return float(v)
    return v


def validate_config(cfg: ScenarioConfig, text: str, path: str):
    def fail(section, key, msg):
        line = _line_of(text, section, key)
        where = f"{path}:{line}" if line else path
        raise ConfigError(f"{where}: [{section}] {key}: {msg}")

    for section, keys in _NON_NEGATIVE.items():
        for k in keys:
            v = getattr(getattr(cfg, section), k)
            if v is not None and (not math.isfinite(v) or v < 0):
                fail(section, k, f"must be non-negative, got {v}")
    for section, keys in _POSITIVE.items():
        for k in keys:
            v = getattr(getattr(cfg, section), k)
            if v is not None and not v > 0:
                fail(section, k, f"must be positive, got {v}")
    if cfg.kind not in KINDS:
        fail("scenario", "kind", f"unknown scenario {cfg.kind!r}; expected one of {', '.join(KINDS)}")
    m = cfg.model
    if m.symmetry not in (SPHERICAL, ELLIPTIC):
        fail("model", "symmetry", f"expected spherical or elliptic, got {m.symmetry!r}")
    if m.n_max < 0:
        fail("model", "n_max", "must be non-negative")
    if m.stage not in ("drive", "drive+mapping"):
        fail("model", "stage", f"unknown stage {m.stage!r}")
    if m.decay not in ("spectral", "double_sum"):
        fail("model", "decay", f"unknown decay representation {m.decay!r}")
    if m.z_e not in ("z0", "z_omega"):
        try:
            if float(m.z_e) <= 0:
                raise ValueError
        except ValueError:
            fail("model", "z_e", f"expected z0, z_omega or a positive number, got {m.z_e!r}")
    if m.C6_MHz_um6 is None and m.state not in params.C6_MHZ_UM6:
        fail("model", "state", f"unknown Rydberg state {m.state!r}; give C6_MHz_um6")
    if m.C6_MHz_um6 is not None and m.C6_MHz_um6 == 0:
        fail("model", "C6_MHz_um6", "must be nonzero")
    if cfg.rates.kappa0_MHz > cfg.rates.kappa_MHz:
        fail("rates", "kappa0_MHz", "cannot exceed kappa_MHz")
    if cfg.pulses.delta_MHz == 0:
        fail("pulses", "delta_MHz", "must be nonzero")
    if cfg.kind == "validate" and cfg.oracle.realizations < 2:
        fail("oracle", "realizations", "need at least two")
    sw = cfg.sweep
    if len(sw.states) != len(sw.n_max):
        fail("sweep", "n_max", "needs one entry per state")
    for s in sw.states:
        if s not in params.C6_MHZ_UM6:
            fail("sweep", "states", f"unknown Rydberg state {s!r}")
    if sw.measurement not in ("notG", "photons", "both"):
        fail("sweep", "measurement", f"expected notG, photons or both, got {sw.measurement!r}")
    if cfg.beta < 0 and m.symmetry == ELLIPTIC:
        warnings.warn("sigma_z > sigma: prolate cloud, beta < 0", stacklevel=3)
    if m.symmetry == SPHERICAL and cfg.cloud.sigma_z_um is not None and cfg.cloud.sigma_z_um != cfg.cloud.sigma_um:
        warnings.warn("spherical model ignores sigma_z_um", stacklevel=3)


def parse_config_text(text: str, path: str = "<config>") -> ScenarioConfig:
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]") from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: duplicate section [{exc.section}]") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    parts = {}
    kind = None
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}:{_line_of(text, section)}: unknown section [{section}]")
        items = dict(parser.items(section))
        if section == "scenario":
            for key in items:
                if key != "kind":
                    raise ConfigError(f"{path}:{_line_of(text, section, key)}: unknown key {key!r} in [scenario]")
            kind = items.get("kind")
            continue
        cls = _SECTIONS[section]
        names = {f.name for f in dataclasses.fields(cls)}
        kw = {}
        for key, value in items.items():
            if key not in names:
                raise ConfigError(
                    f"{path}:{_line_of(text, section, key)}: unknown key {key!r} in [{section}]"
                )
            try:
                kw[key] = convert_value(cls, key, value)
            except ValueError as exc:
                raise ConfigError(f"{path}:{_line_of(text, section, key)}: [{section}] {key}: {exc}") from None
        parts[section] = cls(**kw)
    if kind is None:
        raise ConfigError(f"{path}: missing required key 'kind' in [scenario]")
    cfg = ScenarioConfig(kind=kind, **parts)
    validate_config(cfg, text, path)
    return cfg


def parse_config(path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"{path}: no such file")
    return parse_config_text(p.read_text(), str(p))
