"""Configuration for the neurocortex simulator.

Parameters are grouped per subsystem. ``Settings`` composes the groups and
loads overrides from the environment (``NEUROCORTEX_NET__C1=50``), a ``.env``
file, and key=value config files.
"""

import math
from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, ValidationError, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from neurocortex.exceptions import ConfigurationError


class NetParams(BaseModel):
    """Activation and weight-cap parameters shared by every neuron."""

    model_config = ConfigDict(frozen=True)

    c1: float = 100.0  # activation ceiling
    c2: float = 0.02  # activation slope
    f_thr: float = 20.0  # fired threshold
    w_max: float = 1.0
    s_max: float = 0.5
    dt: float = 1.0
    rng_seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "NetParams":
        if not self.c1 > 0 or not self.c2 > 0:
            raise ConfigurationError("c1 and c2 must be positive", {"c1": self.c1, "c2": self.c2})
        if not 0 < self.f_thr < self.c1:
            raise ConfigurationError("f_thr must lie in (0, c1)", {"f_thr": self.f_thr, "c1": self.c1})
        if not self.w_max > 0 or not self.s_max > 0:
            raise ConfigurationError("w_max and s_max must be positive", {"w_max": self.w_max, "s_max": self.s_max})
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigurationError("rng_seed must fit in 64 bits", {"rng_seed": self.rng_seed})
        return self

    @property
    def sigma_threshold(self) -> float:
        """Smallest summed input whose activation reaches ``f_thr``."""
        return -math.log1p(-self.f_thr / self.c1) / self.c2


class PlasticityParams(BaseModel):
    """Constants of the co-firing and interval-dependent learning rules."""

    model_config = ConfigDict(frozen=True)

    a_plus: float = 0.1
    a_minus: float = 0.12
    tau_plus: float = 5.0
    tau_minus: float = 5.0
    eta_cofire: float = 0.02
    tau_stm: float = 100.0
    consolidate_rate: float = 0.5
    window_W: int = 20
    grow_new: bool = False
    grow_threshold: int = 3
    grow_weight: float = 0.2

    @model_validator(mode="after")
    def _check(self) -> "PlasticityParams":
        positive = {
            "a_plus": self.a_plus,
            "a_minus": self.a_minus,
            "tau_plus": self.tau_plus,
            "tau_minus": self.tau_minus,
            "eta_cofire": self.eta_cofire,
            "tau_stm": self.tau_stm,
            "consolidate_rate": self.consolidate_rate,
            "window_W": self.window_W,
            "grow_threshold": self.grow_threshold,
        }
        bad = {k: v for k, v in positive.items() if not v > 0}
        if bad:
            raise ConfigurationError("plasticity constants must be positive", bad)
        if self.window_W < max(self.tau_plus, self.tau_minus):
            raise ConfigurationError(
                "window_W must cover both kernel time constants",
                {"window_W": self.window_W, "tau_plus": self.tau_plus, "tau_minus": self.tau_minus},
            )
        if self.consolidate_rate > 1:
            raise ConfigurationError("consolidate_rate must be in (0, 1]", {"consolidate_rate": self.consolidate_rate})
        return self


class CompetitionParams(BaseModel):
    """Lateral inhibition (winner-take-all) settings."""

    model_config = ConfigDict(frozen=True)

    overlap_threshold: int = 1
    inhibition_strength: float = 5.0
    wta_mode: Literal["hard", "soft"] = "hard"
    wta_criterion: Literal["sigma", "fan_in"] = "sigma"
    tie_break: Literal["lowest_id"] = "lowest_id"

    @model_validator(mode="after")
    def _check(self) -> "CompetitionParams":
        if self.overlap_threshold < 1:
            raise ConfigurationError("overlap_threshold must be at least 1", {"overlap_threshold": self.overlap_threshold})
        if self.inhibition_strength < 0:
            raise ConfigurationError("inhibition_strength must be non-negative")
        return self


class SequenceParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    gap: int = 2
    strength: float = 50.0
    repetitions: int = 20
    recall_strength: float = 50.0
    assoc_cutoff: int = 3
    object_gap: int = 2
    object_repetitions: int = 20

    @model_validator(mode="after")
    def _check(self) -> "SequenceParams":
        if self.gap < 1 or self.object_gap < 1:
            raise ConfigurationError("gaps must be at least one tick")
        if self.repetitions < 1 or self.object_repetitions < 1:
            raise ConfigurationError("repetition counts must be at least 1")
        if self.strength < 0 or self.recall_strength < 0:
            raise ConfigurationError("injection strengths must be non-negative")
        return self


class LanguageParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    sentence_gap: int = 2
    ground_weight: float = 0.5
    context_strength: float = 50.0
    cue_strength: float = 50.0
    repetitions: int = 20


class LogicParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    d_rule: int = 2
    safety: float = 1.5
    inhibition_factor: int = 2
    fact_strength: float = 50.0
    bias_atom: str = "TRUE"
    horizon: int = 20

    @model_validator(mode="after")
    def _check(self) -> "LogicParams":
        if self.d_rule < 1:
            raise ConfigurationError("d_rule must be at least one tick", {"d_rule": self.d_rule})
        if self.safety < 1 or self.inhibition_factor < 1:
            raise ConfigurationError("safety and inhibition_factor must be at least 1")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be at least one tick", {"horizon": self.horizon})
        return self


class TopologyParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    probe_strength: float = 50.0
    horizon: int = 30


class Settings(BaseSettings):
    """Application settings loaded from defaults, environment and config files."""

    app_name: str = "neurocortex"
    app_version: str = "0.1.0"

    net: NetParams = NetParams()
    plasticity: PlasticityParams = PlasticityParams()
    competition: CompetitionParams = CompetitionParams()
    sequence: SequenceParams = SequenceParams()
    language: LanguageParams = LanguageParams()
    logic: LogicParams = LogicParams()
    topology: TopologyParams = TopologyParams()

    # Harness
    trace_format: Literal["csv", "jsonl"] = "csv"
    out_dir: str = "out"
    log_level: str = "WARNING"

    model_config = SettingsConfigDict(
        env_prefix="NEUROCORTEX_",
        env_nested_delimiter="__",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    def with_overrides(self, overrides: Mapping[str, Any]) -> "Settings":
        """Return a copy with dotted ``group.key`` overrides applied."""
        data = self.model_dump()
        for dotted, value in overrides.items():
            _assign(data, dotted, value)
        return _build(Settings, data)


def _assign(data: Dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    target = data
    for part in parts[:-1]:
        if part not in target or not isinstance(target[part], dict):
            raise ConfigurationError(f"unknown config group '{part}'", {"key": dotted})
        target = target[part]
    if parts[-1] not in target:
        raise ConfigurationError(f"unknown config key '{dotted}'", {"key": dotted})
    target[parts[-1]] = value


def _build(model: type, data: Dict[str, Any]) -> Any:
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError("invalid configuration", {"errors": exc.errors(include_url=False)}) from exc


def parse_key_values(lines: Iterable[str], source: str = "<config>") -> Dict[str, str]:
    """Parse ``key = value`` lines, skipping blanks and ``#`` comments."""
    pairs: Dict[str, str] = {}
    for number, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected key = value", {"line": number})
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: empty key", {"line": number})
        pairs[key] = value
    return pairs


def load_settings(
    config_path: Optional[Path] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> Settings:
    """Build settings from the environment, an optional config file, then overrides."""
    try:
        settings = Settings()
    except ValidationError as exc:
        raise ConfigurationError("invalid environment configuration", {"errors": exc.errors(include_url=False)}) from exc
    merged: Dict[str, Any] = {}
    if config_path is not None:
        try:
            text = Path(config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {config_path}", {"path": str(config_path)}) from exc
        merged.update(parse_key_values(text.splitlines(), str(config_path)))
    merged.update(overrides or {})
    return settings.with_overrides(merged) if merged else settings
