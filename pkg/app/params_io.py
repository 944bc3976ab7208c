"""
Чтение файлов параметров и конфигураций запусков.

Поддерживаемые форматы параметров:
- плоский текст `name = value` (комментарии через #);
- JSON-объект;
- YAML (.yaml / .yml).
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import yaml

from app.config import OUTPUT_FORMATS, PARAM_KEYS, SYSTEMS
from app.errors import ConfigError
from app.integrator import IntegrationConfig, sample_omega
from app.json_utils import safe_json_loads
from app.model_core import ModelParams, component_names, lift_state

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


def parse_flat(text: str) -> Dict[str, float]:
    values: Dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'name = value'", field=f"line {lineno}")

        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError(f"duplicate parameter {key!r}", field=key)
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{key}: not a number: {value!r}", field=key)
    return values


def parse_params(text: str, suffix: str = "") -> ModelParams:
    suffix = suffix.lower()
    if suffix in (".yaml", ".yml"):
        try:
            mapping = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML: {exc}", field="params")
        if not isinstance(mapping, dict):
            raise ConfigError("YAML params must be a mapping", field="params")
    elif suffix == ".json" or text.lstrip().startswith("{"):
        mapping = safe_json_loads(text, source="params")
    else:
        mapping = parse_flat(text)

    return ModelParams.from_mapping(mapping)


def read_params(path: PathLike) -> ModelParams:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read params file {path}: {exc.strerror}", field="params")

    params = parse_params(text, path.suffix)
    log.debug("📦 params loaded from %s", path)
    return params


def dump_params(p: ModelParams) -> str:
    return "".join(f"{key} = {value!r}\n" for key, value in p.to_mapping().items())


# -------------------------
# run and sweep configs
# -------------------------

@dataclass(frozen=True)
class SamplerSpec:
    count: int
    seed: int


@dataclass
class RunConfig:
    params: ModelParams
    system: str
    integration: IntegrationConfig
    output_path: Path
    output_format: str = "csv"
    initial_states: Optional[List[Tuple[float, ...]]] = None
    sampler: Optional[SamplerSpec] = None

    def __post_init__(self):
        if self.system not in SYSTEMS:
            raise ConfigError(f"system must be one of {SYSTEMS}, got {self.system!r}", field="system")
        if self.output_format not in OUTPUT_FORMATS:
            raise ConfigError(f"format must be one of {OUTPUT_FORMATS}", field="format")
        if (self.initial_states is None) == (self.sampler is None):
            raise ConfigError("give either explicit initial states or a sampler", field="init")

        if self.initial_states is not None:
            dim = len(component_names(self.system))
            for state in self.initial_states:
                if len(state) != dim:
                    raise ConfigError(
                        f"initial state {state} has {len(state)} components, system {self.system} needs {dim}",
                        field="init",
                    )
        elif self.sampler.count < 1:
            raise ConfigError("n-init must be >= 1", field="n_init")

    def resolve_initial_states(self) -> List[np.ndarray]:
        if self.initial_states is not None:
            return [np.asarray(s, dtype=float) for s in self.initial_states]

        samples = sample_omega(self.params, self.sampler.count, self.sampler.seed)
        return [np.asarray(lift_state(self.params, s, self.system), dtype=float) for s in samples]


def parse_state(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(part) for part in text.split(","))
    except ValueError:
        raise ConfigError(f"bad initial state {text!r}", field="init")


@dataclass
class SweepSpec:
    base: ModelParams
    axis: str
    values: List[float]
    simulate: bool = False
    outputs: List[dict] = field(default_factory=list)

    def __post_init__(self):
        if self.axis not in PARAM_KEYS:
            raise ConfigError(f"axis must be one of {PARAM_KEYS}, got {self.axis!r}", field="axis")
        if not self.values:
            raise ConfigError("sweep needs at least one value", field="values")

    def points(self) -> List[ModelParams]:
        # ModelParams validation rejects out-of-range axis values
        return [self.base.with_value(self.axis, value) for value in self.values]


def parse_values(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"bad value list {text!r}", field="values")


def load_sweep_spec(path: PathLike) -> SweepSpec:
    """
    YAML-описание перебора:

        base: data/case1.params   # или словарь параметров
        axis: a
        values: [0.001, 0.008]
        simulate: false
    """
    path = Path(path)
    try:
        spec = yaml.safe_load(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read sweep spec {path}: {exc.strerror}", field="spec")
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}", field="spec")

    if not isinstance(spec, dict):
        raise ConfigError("sweep spec must be a mapping", field="spec")
    for key in ("base", "axis", "values"):
        if key not in spec:
            raise ConfigError(f"sweep spec is missing {key!r}", field=key)

    base = spec["base"]
    if isinstance(base, dict):
        params = ModelParams.from_mapping(base)
    else:
        base_path = Path(str(base))
        if not base_path.is_absolute() and (path.parent / base_path).exists():
            base_path = path.parent / base_path
        params = read_params(base_path)

    values = spec["values"]
    if not isinstance(values, list):
        raise ConfigError("values must be a list", field="values")
    try:
        values = [float(v) for v in values]
    except (TypeError, ValueError):
        raise ConfigError("values must be numbers", field="values")

    return SweepSpec(base=params, axis=str(spec["axis"]), values=values, simulate=bool(spec.get("simulate", False)))
