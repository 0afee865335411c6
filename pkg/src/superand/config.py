"""Training configuration and its flat key=value file format.

Every hyperparameter lives here with its full-scale default; desk-scale
runs override fields through a config file. The text form is canonical
(fields in declaration order, repr-exact floats), so a config snapshot
embedded in a checkpoint round-trips byte-identically.
"""

import dataclasses
from dataclasses import dataclass

from .augmentation import AugmentPolicy
from .errors import ParameterError


@dataclass
class TrainConfig:
    seed: int = 0
    rounds: int = 5
    epochs_per_round: int = 200
    batch_size: int = 128
    base_lr: float = 0.03
    lr_decay_factor: float = 0.1
    lr_decay_start: int = 80
    lr_decay_every: int = 40
    momentum: float = 0.9
    eta: float = 0.5
    tau: float = 0.07
    k: int = 1
    ue_weight_step: float = 0.2
    ue_weight_every: int = 80
    embed_dim: int = 128
    hidden_dim: int = 128
    disable_ue: bool = False
    disable_aug: bool = False
    crop_area_min: float = 0.2
    crop_area_max: float = 1.0
    crop_aspect_min: float = 0.75
    crop_aspect_max: float = 4.0 / 3.0
    flip_prob: float = 0.5
    flip_enabled: bool = True
    grayscale_prob: float = 0.2
    jitter_strength: float = 0.4
    synthetic_classes: int = 3
    synthetic_per_class: int = 150
    synthetic_image_size: int = 12
    synthetic_noise_sigma: float = 0.15
    synthetic_test_per_class: int = 30

    def validate(self) -> "TrainConfig":
        positive_ints = (
            "rounds", "epochs_per_round", "batch_size", "k", "embed_dim",
            "hidden_dim", "lr_decay_start", "lr_decay_every", "ue_weight_every",
            "synthetic_classes", "synthetic_per_class", "synthetic_image_size",
        )
        for name in positive_ints:
            if getattr(self, name) < 1:
                raise ParameterError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.base_lr <= 0:
            raise ParameterError(f"base_lr must be positive, got {self.base_lr}")
        if not 0.0 < self.lr_decay_factor <= 1.0:
            raise ParameterError(f"lr_decay_factor must be in (0, 1], got {self.lr_decay_factor}")
        if not 0.0 <= self.momentum < 1.0:
            raise ParameterError(f"momentum must be in [0, 1), got {self.momentum}")
        if not 0.0 < self.eta <= 1.0:
            raise ParameterError(f"eta must be in (0, 1], got {self.eta}")
        if self.tau <= 0:
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if self.ue_weight_step < 0:
            raise ParameterError(f"ue_weight_step must be >= 0, got {self.ue_weight_step}")
        if self.embed_dim < 2:
            raise ParameterError(f"embed_dim must be >= 2, got {self.embed_dim}")
        if self.synthetic_classes < 2:
            raise ParameterError(f"synthetic_classes must be >= 2, got {self.synthetic_classes}")
        if self.synthetic_noise_sigma < 0:
            raise ParameterError(f"synthetic_noise_sigma must be >= 0, got {self.synthetic_noise_sigma}")
        if not 0 <= self.synthetic_test_per_class < self.synthetic_per_class:
            raise ParameterError(
                "synthetic_test_per_class must leave at least one training sample per class"
            )
        self.policy()  # AugmentPolicy runs its own range checks
        return self

    def policy(self) -> AugmentPolicy:
        if self.disable_aug:
            return AugmentPolicy.identity()
        return AugmentPolicy(
            crop_area_range=(self.crop_area_min, self.crop_area_max),
            crop_aspect_range=(self.crop_aspect_min, self.crop_aspect_max),
            flip_prob=self.flip_prob,
            grayscale_prob=self.grayscale_prob,
            jitter_strength=self.jitter_strength,
            flip_enabled=self.flip_enabled,
        )

    def to_text(self) -> str:
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            text = ("true" if value else "false") if isinstance(value, bool) else repr(value)
            lines.append(f"{f.name} = {text}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrainConfig":
        """Parse key = value lines; unknown keys and bad types are rejected."""
        field_types = {f.name: f for f in dataclasses.fields(cls)}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"config line {lineno}: expected 'key = value', got {raw!r}")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in field_types:
                raise ParameterError(f"config line {lineno}: unknown key {key!r}")
            values[key] = _parse_value(field_types[key], key, val, lineno)
        return cls(**values)

    @classmethod
    def from_file(cls, path) -> "TrainConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


def _parse_value(field_obj, key, val, lineno):
    kind = field_obj.type if isinstance(field_obj.type, str) else field_obj.type.__name__
    try:
        if kind == "bool":
            lowered = val.lower()
            if lowered not in ("true", "false"):
                raise ValueError(f"expected true/false, got {val!r}")
            return lowered == "true"
        if kind == "int":
            return int(val)
        if kind == "float":
            return float(val)
    except ValueError as exc:
        raise ParameterError(f"config line {lineno}: bad value for {key!r}: {exc}") from None
    raise ParameterError(f"config line {lineno}: unsupported field type for {key!r}")
