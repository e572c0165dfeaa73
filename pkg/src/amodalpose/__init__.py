"""Amodal pose estimation of occluded pedestrians, desk scale.

Two domain-specific detectors feed a shared encoder trained adversarially to
produce domain-invariant instance features; a segmentation decoder gates the
pose branch, and random masking of the segmentation map during training forces
the pose network to predict joints it cannot see.
"""

from .config import GeneratorConfig, TrainConfig, ConfigError, config_hash
from .scenegen import (
    Domain, GeneratorConfig as _GC, InstanceAnnotation, SceneSample, Skeleton13,
    generate_dataset, generate_sample, occlusion_fraction, render_scene, sample_pose,
)
from .dataio import DatasetManifest, export_dataset, import_dataset
from .estimator import AmodalPoseEstimator

__all__ = [
    "AmodalPoseEstimator", "ConfigError", "DatasetManifest", "Domain",
    "GeneratorConfig", "InstanceAnnotation", "SceneSample", "Skeleton13",
    "TrainConfig", "config_hash", "export_dataset", "generate_dataset",
    "generate_sample", "import_dataset", "occlusion_fraction", "render_scene",
    "sample_pose",
]

__version__ = "0.1.0"
