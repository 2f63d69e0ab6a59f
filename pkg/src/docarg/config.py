"""Run configuration: nested sections with flat dotted-key overrides.

The boundary-loss weight is exposed externally as ``head.lambda`` (the JSON
key and override name); internally the attribute is ``boundary_weight``
because ``lambda`` is reserved in Python.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError
from .twostream import EncoderConfig


@dataclass
class DataConfig:
    train: str | None = None
    dev: str | None = None
    test: str | None = None
    out_dir: str | None = None


@dataclass
class InteractionConfig:
    layers: int = 3
    enabled: bool = True
    single_self_loop: bool = False
    share_local_global_weights: bool = False

    def __post_init__(self) -> None:
        if self.layers < 1:
            raise ConfigError(f"interaction.layers must be >= 1, got {self.layers}")


@dataclass
class HeadConfig:
    max_span_len: int = 8
    d_type: int = 64
    d_len: int = 64
    hidden_dim: int | None = None
    dropout: float = 0.1
    boundary_weight: float = 0.1
    share_boundary_projections: bool = True
    legal_role_mask: bool = True
    top1_per_role: bool = False
    exclude_trigger_overlap: bool = False

    def __post_init__(self) -> None:
        if self.max_span_len < 1:
            raise ConfigError(f"head.max_span_len must be >= 1, got {self.max_span_len}")
        if self.boundary_weight < 0:
            raise ConfigError(f"head.lambda must be >= 0, got {self.boundary_weight}")


@dataclass
class AblationConfig:
    use_global: bool = True
    use_local: bool = True
    use_amr: bool = True
    use_boundary_loss: bool = True

    def __post_init__(self) -> None:
        if not (self.use_global or self.use_local):
            raise ConfigError("at least one of ablation.use_global / use_local must stay on")


@dataclass
class TrainingConfig:
    seed: int = 13
    optimizer: str = "adam"
    batch_size: int = 8
    learning_rate: float = 3e-5
    weight_decay: float = 0.0
    epochs: int = 50
    max_grad_norm: float | None = None
    selection_metric: str = "span_f1"
    early_stop_f1: float | None = None
    shuffle: bool = True

    _METRICS = ("span_f1", "head_f1", "coref_f1")
    _OPTIMIZERS = ("adam", "adamw")

    def __post_init__(self) -> None:
        if self.batch_size < 1:
            raise ConfigError(f"training.batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ConfigError(f"training.epochs must be >= 0, got {self.epochs}")
        if self.optimizer not in self._OPTIMIZERS:
            raise ConfigError(
                f"training.optimizer must be one of {self._OPTIMIZERS},"
                f" got {self.optimizer!r}"
            )
        if self.selection_metric not in self._METRICS:
            raise ConfigError(
                f"training.selection_metric must be one of {self._METRICS},"
                f" got {self.selection_metric!r}"
            )


_SECTIONS = {
    "data": DataConfig,
    "encoder": EncoderConfig,
    "interaction": InteractionConfig,
    "head": HeadConfig,
    "ablation": AblationConfig,
    "training": TrainingConfig,
}

# attribute name <-> external key name, per section
_RENAMES = {"head": {"boundary_weight": "lambda"}}


def _to_external(section: str, obj) -> dict:
    renames = _RENAMES.get(section, {})
    out = {}
    for f in dataclasses.fields(obj):
        out[renames.get(f.name, f.name)] = getattr(obj, f.name)
    return out


def _from_external(section: str, cls, obj: dict):
    renames = {v: k for k, v in _RENAMES.get(section, {}).items()}
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in obj.items():
        attr = renames.get(key, key)
        if attr not in names:
            raise ConfigError(f"unknown config key {section}.{key}")
        kwargs[attr] = value
    return cls(**kwargs)


@dataclass
class RunConfig:
    data: DataConfig = field(default_factory=DataConfig)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    interaction: InteractionConfig = field(default_factory=InteractionConfig)
    head: HeadConfig = field(default_factory=HeadConfig)
    ablation: AblationConfig = field(default_factory=AblationConfig)
    training: TrainingConfig = field(default_factory=TrainingConfig)

    def to_dict(self) -> dict:
        return {name: _to_external(name, getattr(self, name)) for name in _SECTIONS}

    @classmethod
    def from_dict(cls, obj: dict) -> "RunConfig":
        unknown = set(obj) - set(_SECTIONS)
        if unknown:
            raise ConfigError(f"unknown config sections: {sorted(unknown)}")
        kwargs = {}
        for name, section_cls in _SECTIONS.items():
            kwargs[name] = _from_external(name, section_cls, obj.get(name, {}))
        return cls(**kwargs)

    def to_flat(self) -> dict:
        return {
            f"{section}.{key}": value
            for section, entries in self.to_dict().items()
            for key, value in entries.items()
        }

    @classmethod
    def from_flat(cls, flat: dict) -> "RunConfig":
        nested: dict[str, dict] = {}
        for key, value in flat.items():
            if key.count(".") != 1:
                raise ConfigError(f"config key must look like section.key, got {key!r}")
            section, entry = key.split(".")
            nested.setdefault(section, {})[entry] = value
        return cls.from_dict(nested)

    def save(self, path: str | Path) -> None:
        """Write the flat key-value form (the documented config-file format)."""
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_flat(), f, indent=2, sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        """Read a config file: flat dotted keys, or the nested-section form."""
        with open(path, "r", encoding="utf-8") as f:
            obj = json.load(f)
        if not isinstance(obj, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        if any("." in key for key in obj):
            return cls.from_flat(obj)
        return cls.from_dict(obj)


def parse_value(raw: str):
    """Interpret a command-line override value: bool, none, number, or string."""
    lowered = raw.strip().lower()
    if lowered in ("true", "yes", "on"):
        return True
    if lowered in ("false", "no", "off"):
        return False
    if lowered in ("none", "null"):
        return None
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def apply_overrides(config: RunConfig, overrides: dict[str, object]) -> RunConfig:
    """Rebuild the config with dotted-key overrides applied and revalidated.

    Values given as strings pass through :func:`parse_value` first, so CLI
    ``--set head.lambda=0.2`` style pairs work directly.
    """
    nested = config.to_dict()
    for key, value in overrides.items():
        if key.count(".") != 1:
            raise ConfigError(f"override key must look like section.key, got {key!r}")
        section, entry = key.split(".")
        if section not in nested:
            raise ConfigError(f"unknown config section {section!r} in override {key!r}")
        if entry not in nested[section]:
            raise ConfigError(f"unknown config key {key!r}")
        nested[section][entry] = parse_value(value) if isinstance(value, str) else value
    return RunConfig.from_dict(nested)


def parse_override_pair(pair: str) -> tuple[str, str]:
    if "=" not in pair:
        raise ConfigError(f"override must look like section.key=value, got {pair!r}")
    key, value = pair.split("=", 1)
    return key.strip(), value.strip()
