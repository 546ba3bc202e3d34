"""Scenario configuration: YAML file -> typed sections, with dotted-key overrides.

Every section maps onto a frozen dataclass; unknown keys and invalid values
raise :class:`ConfigError` naming the offending key.  ``Config.to_dict()``
round-trips through YAML exactly (floats are written with ``repr``), which is
what the run manifest relies on.
"""
from __future__ import annotations

import copy
import dataclasses
import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .autotuner import TunerConfigError
from .machine import INTEGRATORS, MachineParams


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-3`` style floats (YAML 1.2) as numbers."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*(?:\.[0-9_]*)?|\.[0-9_]+)[eE][-+]?[0-9]+$"""),
    list("-+0123456789."),
)


def _yaml_load(text: str):
    return yaml.load(text, Loader=_Loader)


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class PlantOptions:
    substeps: int = 10
    integrator: str = "rk4"
    rotor_branch: bool = True

    def __post_init__(self):
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {sorted(INTEGRATORS)}")


@dataclass(frozen=True)
class PredictorOptions:
    rebuild_threshold: float = 0.0
    g_filter: bool = False
    g_filter_alpha: float = 0.5

    def __post_init__(self):
        if self.rebuild_threshold < 0:
            raise ValueError("rebuild_threshold must be >= 0")
        if not 0 < self.g_filter_alpha <= 1:
            raise ValueError("g_filter_alpha must lie in (0, 1]")


@dataclass(frozen=True)
class OuterLoopConfig:
    kp: float = 0.5
    ki: float = 2.0
    ids_ref: float = 1.0
    iqs_max: float = 3.0
    decimation: int = 10
    tau_r_multiplier: float = 1.0

    def __post_init__(self):
        if self.ids_ref == 0:
            raise ValueError("ids_ref must be non-zero")
        if self.iqs_max <= 0:
            raise ValueError("iqs_max must be positive")
        if self.decimation < 1:
            raise ValueError("decimation must be >= 1")
        if self.tau_r_multiplier <= 0:
            raise ValueError("tau_r_multiplier must be positive")


@dataclass(frozen=True)
class MetricsConfig:
    N: int = 720

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be >= 1")


@dataclass(frozen=True)
class TunerSection:
    mode: str = "fixed"
    time_base: str = "blocks"
    lambda0: tuple = (0.4, 0.0020)
    gamma2_ref: float = 0.050
    gamma3_ref: float = 100.0
    g_p2: float = -1.0
    g_i2: float = -2.8
    g_p3: float = -4.5e-8
    g_i3: float = -1e-7
    lambda_xy_bounds: tuple = (0.0, 5.0)
    lambda_sc_bounds: tuple = (0.0, 0.01)

    def __post_init__(self):
        if self.mode not in ("fixed", "adaptive"):
            raise ValueError("mode must be 'fixed' or 'adaptive'")
        if self.time_base not in ("blocks", "seconds"):
            raise ValueError("time_base must be 'blocks' or 'seconds'")
        if len(self.lambda0) != 2 or min(self.lambda0) < 0:
            raise ValueError("lambda0 must be two non-negative weights")


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _check_pair(value, what: str):
    if value is None:
        return
    if len(value) != 2 or not all(_is_number(v) and v >= 0 for v in value):
        raise ValueError(f"{what} must be null or two non-negative numbers, got {value!r}")


def _check_schedule(points, width: int, what: str):
    last = -math.inf
    for row in points:
        if len(row) != width or not all(_is_number(v) for v in row):
            raise ValueError(f"{what} rows need {width} numbers, got {list(row)}")
        if row[0] < last:
            raise ValueError(f"{what} must be time-ordered")
        last = row[0]


@dataclass(frozen=True)
class ScenarioSection:
    """Time profiles and schedules.

    ``speed``/``load``: ``[[t, value], ...]`` interpolated linearly, held
    outside the listed range; a step is two points sharing one time.
    ``wf_steps``: ``[[t, lambda_xy, lambda_sc], ...]``.
    ``ref_steps``: ``[[t, gamma2_ref, gamma3_ref], ...]``, applied at the
    first block boundary at or after ``t``.
    """

    duration: float = 2.0
    speed: tuple = ((0.0, 50.0),)
    load: tuple = ((0.0, 0.0),)
    initial_speed: float | None = None
    wf_steps: tuple = ()
    ref_steps: tuple = ()

    def __post_init__(self):
        if not (self.duration >= 0):
            raise ValueError("duration must be >= 0")
        if not self.speed:
            raise ValueError("speed profile needs at least one point")
        if not self.load:
            raise ValueError("load profile needs at least one point")
        if self.initial_speed is not None and not _is_number(self.initial_speed):
            raise ValueError(f"initial_speed must be a number or null, got {self.initial_speed!r}")
        _check_schedule(self.speed, 2, "speed")
        _check_schedule(self.load, 2, "load")
        _check_schedule(self.wf_steps, 3, "wf_steps")
        _check_schedule(self.ref_steps, 3, "ref_steps")
        for row in self.wf_steps:
            if min(row[1:]) < 0:
                raise ValueError("wf_steps weights must be non-negative")
        for row in self.ref_steps:
            if min(row[1:]) < 0:
                raise ValueError("ref_steps references must be non-negative")


@dataclass(frozen=True)
class AnalysisConfig:
    discard_blocks: int = 10


@dataclass(frozen=True)
class StepWfExperiment:
    pre: tuple = (0.15, 0.0020)
    post: tuple = (0.75, 0.0020)
    t_step: float = 1.0368
    duration: float = 2.0


@dataclass(frozen=True)
class StepRefExperiment:
    t_step: float = 1.0368
    duration: float = 3.0
    gamma2: tuple | None = (0.050, 0.030)
    gamma3: tuple | None = None

    def __post_init__(self):
        _check_pair(self.gamma2, "gamma2")
        _check_pair(self.gamma3, "gamma3")


@dataclass(frozen=True)
class ReversalExperiment:
    omega_target: float = 50.0
    t_flip: float = 0.5
    duration: float = 1.0

    def __post_init__(self):
        if self.omega_target == 0:
            raise ValueError("omega_target must be non-zero")


@dataclass(frozen=True)
class ParetoExperiment:
    lambda_xy: tuple = (0.1, 0.2, 0.4, 0.8, 1.6)
    lambda_sc: tuple = (0.0005, 0.001, 0.002, 0.004, 0.008)
    duration: float = 0.6696

    def __post_init__(self):
        if not self.lambda_xy or not self.lambda_sc:
            raise ValueError("pareto grid must be non-empty")


@dataclass(frozen=True)
class Experiments:
    step_wf: StepWfExperiment = field(default_factory=StepWfExperiment)
    step_ref: StepRefExperiment = field(default_factory=StepRefExperiment)
    reversal: ReversalExperiment = field(default_factory=ReversalExperiment)
    pareto: ParetoExperiment = field(default_factory=ParetoExperiment)


@dataclass(frozen=True)
class Config:
    machine: MachineParams = field(default_factory=MachineParams)
    plant: PlantOptions = field(default_factory=PlantOptions)
    predictor: PredictorOptions = field(default_factory=PredictorOptions)
    outer_loop: OuterLoopConfig = field(default_factory=OuterLoopConfig)
    metrics: MetricsConfig = field(default_factory=MetricsConfig)
    tuner: TunerSection = field(default_factory=TunerSection)
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)
    experiments: Experiments = field(default_factory=Experiments)

    def to_dict(self) -> dict:
        return _to_plain(dataclasses.asdict(self))

    def replace(self, **sections) -> "Config":
        return dataclasses.replace(self, **sections)


def _to_plain(obj):
    if isinstance(obj, dict):
        return {k: _to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_to_plain(v) for v in obj]
    return obj


def _to_tuple(value):
    if isinstance(value, list):
        return tuple(_to_tuple(v) for v in value)
    return value


def _coerce(key: str, value, default):
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(key, f"expected true/false, got {value!r}")
        return value
    if isinstance(default, int) and not isinstance(default, bool):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(key, f"expected a string, got {value!r}")
        return value
    return _to_tuple(value)


def _build(cls, data, prefix: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(prefix, "expected a mapping")
    known = {f.name: f for f in fields(cls)}
    for key in data:
        if key not in known:
            raise ConfigError(f"{prefix}.{key}" if prefix else key, "unknown key")
    defaults = cls()
    kwargs = {}
    for name, f in known.items():
        key = f"{prefix}.{name}" if prefix else name
        default = getattr(defaults, name)
        if dataclasses.is_dataclass(default):
            kwargs[name] = _build(type(default), data.get(name), key)
        elif name in data:
            kwargs[name] = _coerce(key, data[name], default)
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (ValueError, TypeError, TunerConfigError) as exc:
        raise ConfigError(prefix or "config", str(exc)) from None


def config_from_dict(data: dict | None) -> Config:
    return _build(Config, data or {}, "")


def parse_override(text: str):
    if "=" not in text:
        raise ConfigError(text, "override must look like section.key=value")
    key, raw = text.split("=", 1)
    key = key.strip()
    if not key:
        raise ConfigError(text, "empty override key")
    return key, _yaml_load(raw)


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data)
    for text in overrides:
        key, value = parse_override(text)
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            if not isinstance(child, dict):
                raise ConfigError(key, f"'{part}' is not a section")
            node = child
        node[parts[-1]] = value
    return data


def load_config(path=None, overrides=()) -> Config:
    data = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(str(path), "config file not found")
        try:
            data = _yaml_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(str(path), f"invalid YAML: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(str(path), "top level must be a mapping")
        # run-manifest metadata
        data.pop("verb", None)
        data.pop("overrides", None)
    return config_from_dict(apply_overrides(data, overrides))


def dump_config(cfg: Config, **extra) -> str:
    doc = dict(extra)
    doc.update(cfg.to_dict())
    return yaml.safe_dump(doc, sort_keys=False, default_flow_style=None)
