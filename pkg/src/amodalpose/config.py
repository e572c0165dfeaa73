"""Flat, hashable configuration objects for generation and training.

Both configs serialize to flat JSON (one key per field, ranges as two-element
lists). ``config_hash`` is the sha256 of the canonical JSON encoding and is
stamped into dataset manifests, checkpoints and run logs so outputs can be
traced back to the exact settings that produced them.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Raised for invalid or inconsistent configuration values."""


def _range(value, name, allow_equal=True):
    lo, hi = float(value[0]), float(value[1])
    if lo > hi or (not allow_equal and lo >= hi):
        raise ConfigError(f"{name}: empty range [{lo}, {hi}]")
    return (lo, hi)


@dataclass
class GeneratorConfig:
    """Settings for the two-domain synthetic scene generator.

    Angles are radians, lengths are pixels unless suffixed ``_frac`` (fraction
    of image size) or ``_scale`` (multiplier on the reference proportions).
    """

    image_size: int = 96
    min_figures: int = 1
    max_figures: int = 2

    # articulated-figure sampling
    figure_height: tuple = (42.0, 68.0)
    bone_scale: tuple = (0.9, 1.1)
    torso_tilt: tuple = (-0.25, 0.25)
    arm_raise: tuple = (-0.4, 1.2)
    elbow_bend: tuple = (-1.0, 1.0)
    leg_swing: tuple = (-0.45, 0.45)
    knee_bend: tuple = (0.0, 0.9)

    # occluders (axis-aligned rectangles drawn in front of all figures)
    occluders_enabled: bool = True
    max_occluders: int = 2
    occluder_prob: float = 0.75
    occluder_size_frac: tuple = (0.12, 0.4)
    occluder_attract: float = 0.75  # chance a rectangle is centered on a figure

    # appearance
    background_noise: float = 0.03
    checker_tile: int = 10

    placement_retries: int = 50

    def validate(self):
        if self.image_size < 64:
            raise ConfigError(f"image_size must be >= 64, got {self.image_size}")
        if self.min_figures < 1 or self.max_figures < self.min_figures:
            raise ConfigError("figure count range invalid")
        for name in ("figure_height", "bone_scale", "torso_tilt", "arm_raise",
                     "elbow_bend", "leg_swing", "knee_bend", "occluder_size_frac"):
            _range(getattr(self, name), name)
        if self.figure_height[0] <= 0 or self.bone_scale[0] <= 0:
            raise ConfigError("figure heights and bone scales must be positive")
        if not 0.0 <= self.occluder_prob <= 1.0:
            raise ConfigError("occluder_prob must be in [0, 1]")
        return self


@dataclass
class TrainConfig:
    """Settings for the multi-task training loop and the model it builds."""

    # optimization
    lr0: float = 0.01
    momentum: float = 0.9
    decay_interval_iters: int = 15000
    max_iters: int = 2000
    warmup_iters: int = 0  # detector-only pre-training steps before the full loss

    # loss weights: total = det + alpha*seg + beta*dc + gamma*pe
    alpha: float = 0.5
    beta: float = 1.0
    gamma: float = 1.0

    # masking curriculum (fraction of segmentation mass removed before fusion)
    p_start: float = 0.0
    p_end: float = 0.5
    ramp_iters: int = 1000

    # adversarial reversal strength; ramp_iters 0 keeps lambda constant
    grl_lambda: float = 1.0
    grl_ramp_iters: int = 0

    # batch composition per step
    batch_source: int = 2
    batch_target: int = 2

    # augmentation toggles
    aug_flip: bool = True
    aug_blur: bool = True
    aug_brightness: bool = True

    # model
    channels: int = 64
    backbone_blocks: int = 3
    anchor_sizes: tuple = (20.0, 36.0, 56.0)
    anchor_aspects: tuple = (0.45, 0.75)
    proposal_top_k: int = 8
    nms_iou: float = 0.5
    mask_size: int = 28
    heatmap_sigma: float = 2.0

    # bookkeeping
    seed: int = 0
    checkpoint_every: int = 500
    log_every: int = 1

    def validate(self):
        if self.lr0 <= 0:
            raise ConfigError("lr0 must be positive")
        if not (0.0 <= self.p_start <= self.p_end <= 0.9):
            raise ConfigError("need 0 <= p_start <= p_end <= 0.9")
        if min(self.alpha, self.beta, self.gamma) < 0:
            raise ConfigError("loss weights must be nonnegative")
        if self.decay_interval_iters < 1 or self.max_iters < 1:
            raise ConfigError("iteration counts must be >= 1")
        if self.batch_source < 1 or self.batch_target < 1:
            raise ConfigError("batch composition must include both domains")
        return self


def to_dict(cfg) -> dict:
    d = dataclasses.asdict(cfg)
    return {k: list(v) if isinstance(v, tuple) else v for k, v in d.items()}


def from_dict(cls, data: dict):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for k, v in data.items():
        kwargs[k] = tuple(v) if isinstance(fields[k].default, tuple) else v
    return cls(**kwargs).validate()


def config_hash(cfg) -> str:
    payload = json.dumps(to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def save_config(cfg, path):
    Path(path).write_text(json.dumps(to_dict(cfg), indent=2, sort_keys=True) + "\n")


def load_config(cls, path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    return from_dict(cls, data)


def apply_overrides(cfg, overrides: dict):
    """Apply ``key=value`` command-line overrides on top of a config."""
    d = to_dict(cfg)
    fields = {f.name: f for f in dataclasses.fields(cfg)}
    for key, raw in overrides.items():
        if key not in d:
            raise ConfigError(f"unknown config key: {key}")
        current = getattr(cfg, key)
        if isinstance(current, bool):
            d[key] = raw.lower() in ("1", "true", "yes") if isinstance(raw, str) else bool(raw)
        elif isinstance(current, int):
            d[key] = int(raw)
        elif isinstance(current, float):
            d[key] = float(raw)
        elif isinstance(current, tuple):
            parts = raw.split(",") if isinstance(raw, str) else list(raw)
            d[key] = [float(p) for p in parts]
        else:
            d[key] = raw
    return from_dict(type(cfg), d)
