"""COCO-like dataset interchange: export, import, manifest.

Layout under a dataset directory::

    manifest.json       split name, counts, config hash, file pointers
    annotations.json    images[] / annotations[] / categories[] (schema below)
    images/*.png        uint8 RGB renders
    masks/*.png         per-instance lossless 0/255 bitmaps (amodal + visible)

Annotation schema (one entry per instance):

    {"id": int, "image_id": int,
     "bbox": [x, y, w, h],                     # amodal extent, pixels
     "area": int,                              # amodal pixel count
     "keypoints": [x1, y1, v1, ..., x13, y13, v13],
     "num_keypoints": 13,                      # v: 2 = visible, 1 = occluded
     "visibility_fraction": float,
     "amodal_mask": "masks/...png", "visible_mask": "masks/...png"}

Boxes, keypoints, visibility flags and fractions round-trip losslessly
(floats via JSON doubles); masks round-trip exactly as bitmaps. Images are
quantized to the uint8 grid at render time, so they round-trip exactly too.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .config import GeneratorConfig, config_hash, to_dict, from_dict
from .scenegen import (
    Domain, InstanceAnnotation, JOINT_NAMES, NUM_JOINTS, SceneSample,
    Skeleton13, SKELETON_EDGES,
)

V_OCCLUDED = 1
V_VISIBLE = 2


class DatasetError(ValueError):
    """Schema violation or missing file; message carries path and field."""


@dataclass
class DatasetManifest:
    split: str
    sample_count: int
    domain_counts: dict
    config_hash: str
    files: dict


def _save_mask(mask: np.ndarray, path: Path):
    Image.fromarray((mask.astype(np.uint8)) * 255, mode="L").save(path)


def _load_mask(path: Path) -> np.ndarray:
    if not path.exists():
        raise DatasetError(f"missing mask file: {path}")
    return np.asarray(Image.open(path), dtype=np.uint8) > 127


def export_dataset(samples, out_dir, split="train", config: GeneratorConfig | None = None) -> DatasetManifest:
    out = Path(out_dir)
    (out / "images").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)

    images, annotations = [], []
    ann_id = 0
    domain_counts = {d.value: 0 for d in Domain}
    for img_id, sample in enumerate(samples):
        H, W = sample.image.shape[:2]
        file_name = f"images/img_{img_id:05d}.png"
        Image.fromarray(np.round(sample.image * 255.0).astype(np.uint8)).save(out / file_name)
        domain_counts[sample.domain.value] += 1
        images.append({"id": img_id, "file_name": file_name, "width": W, "height": H,
                       "domain": sample.domain.value, "seed": int(sample.seed)})
        for k, inst in enumerate(sample.instances):
            am_path = f"masks/img_{img_id:05d}_inst{k}_amodal.png"
            vi_path = f"masks/img_{img_id:05d}_inst{k}_visible.png"
            _save_mask(inst.amodal_mask, out / am_path)
            _save_mask(inst.visible_mask, out / vi_path)
            flat = []
            for j in range(NUM_JOINTS):
                x, y = inst.keypoints.joints[j]
                flat += [float(x), float(y), V_VISIBLE if inst.keypoint_visible[j] else V_OCCLUDED]
            annotations.append({
                "id": ann_id, "image_id": img_id,
                "bbox": [float(v) for v in inst.bbox],
                "area": int(inst.amodal_mask.sum()),
                "keypoints": flat, "num_keypoints": NUM_JOINTS,
                "visibility_fraction": float(inst.visibility_fraction),
                "amodal_mask": am_path, "visible_mask": vi_path,
            })
            ann_id += 1

    doc = {
        "images": images,
        "annotations": annotations,
        "categories": [{"id": 1, "name": "person", "keypoints": JOINT_NAMES,
                        "skeleton": [list(e) for e in SKELETON_EDGES]}],
    }
    (out / "annotations.json").write_text(json.dumps(doc))

    manifest = DatasetManifest(
        split=split,
        sample_count=len(samples),
        domain_counts=domain_counts,
        config_hash=config_hash(config) if config is not None else "",
        files={"annotations": "annotations.json", "images_dir": "images", "masks_dir": "masks"},
    )
    payload = dict(manifest.__dict__)
    if config is not None:
        payload["config"] = to_dict(config)
    (out / "manifest.json").write_text(json.dumps(payload, indent=2))
    return manifest


def _require(obj, key, where):
    if key not in obj:
        raise DatasetError(f"{where}: missing field '{key}'")
    return obj[key]


def import_dataset(in_dir):
    """Load an exported dataset; returns (samples, manifest)."""
    root = Path(in_dir)
    man_path = root / "manifest.json"
    if not man_path.exists():
        raise DatasetError(f"missing manifest: {man_path}")
    raw = json.loads(man_path.read_text())
    for key in ("split", "sample_count", "domain_counts", "config_hash", "files"):
        _require(raw, key, str(man_path))
    manifest = DatasetManifest(raw["split"], raw["sample_count"], raw["domain_counts"],
                               raw["config_hash"], raw["files"])
    if "config" in raw:
        cfg = from_dict(GeneratorConfig, raw["config"])
        if config_hash(cfg) != manifest.config_hash:
            raise DatasetError(f"{man_path}: config_hash does not match embedded config")

    ann_path = root / manifest.files["annotations"]
    if not ann_path.exists():
        raise DatasetError(f"missing annotations file: {ann_path}")
    doc = json.loads(ann_path.read_text())
    for key in ("images", "annotations", "categories"):
        _require(doc, key, str(ann_path))

    by_image = {}
    for ann in doc["annotations"]:
        where = f"{ann_path}:annotation[{ann.get('id', '?')}]"
        img_id = _require(ann, "image_id", where)
        by_image.setdefault(img_id, []).append(ann)

    samples = []
    for entry in doc["images"]:
        where = f"{ann_path}:image[{entry.get('id', '?')}]"
        img_id = _require(entry, "id", where)
        img_file = root / _require(entry, "file_name", where)
        if not img_file.exists():
            raise DatasetError(f"{where}: missing image file {img_file}")
        image = np.asarray(Image.open(img_file), dtype=np.float32) / 255.0
        domain = Domain(_require(entry, "domain", where))
        instances = [parse_instance(ann, root, f"{ann_path}:annotation[{ann['id']}]")
                     for ann in by_image.get(img_id, [])]
        samples.append(SceneSample(image=image, domain=domain, instances=instances,
                                   seed=int(entry.get("seed", 0))))
    return samples, manifest


def parse_instance(ann: dict, root: Path, where: str) -> InstanceAnnotation:
    """Parse one annotation entry; raises DatasetError naming the bad field."""
    bbox = _require(ann, "bbox", where)
    if len(bbox) != 4:
        raise DatasetError(f"{where}: bbox must have 4 entries, got {len(bbox)}")
    flat = _require(ann, "keypoints", where)
    if len(flat) != NUM_JOINTS * 3:
        raise DatasetError(f"{where}: keypoints must have {NUM_JOINTS * 3} entries, got {len(flat)}")
    joints = np.array(flat, dtype=np.float64).reshape(NUM_JOINTS, 3)
    flags = joints[:, 2].astype(int)
    if not np.isin(flags, (V_OCCLUDED, V_VISIBLE)).all():
        raise DatasetError(f"{where}: keypoint visibility flags must be 1 or 2")
    amodal = _load_mask(root / _require(ann, "amodal_mask", where))
    visible = _load_mask(root / _require(ann, "visible_mask", where))
    if amodal.shape != visible.shape:
        raise DatasetError(f"{where}: mask shapes differ")
    return InstanceAnnotation(
        bbox=tuple(float(v) for v in bbox),
        amodal_mask=amodal,
        visible_mask=visible,
        keypoints=Skeleton13(joints[:, :2]),
        keypoint_visible=flags == V_VISIBLE,
        visibility_fraction=float(_require(ann, "visibility_fraction", where)),
    )
