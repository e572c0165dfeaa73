"""Two-domain synthetic scene generator with full amodal ground truth.

Figures are layered 2D articulated capsule renderings. Every instance carries
an amodal mask (the full figure, ignoring occluders), a visible mask (amodal
minus whatever is drawn in front), all 13 keypoints even when hidden, and the
realized visibility fraction. The two domains differ in background texture
family and figure color palette, which gives a domain classifier a real signal
to latch onto.

Determinism: a scene is a pure function of (seed, config). Per-figure and
per-occluder randomness is drawn from a single numpy Generator in a fixed
order, and the rendered image is quantized to the uint8 grid so that exporting
to PNG and re-importing reproduces it exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import ConfigError, GeneratorConfig

JOINT_NAMES = [
    "head",
    "left_shoulder", "right_shoulder",
    "left_elbow", "right_elbow",
    "left_wrist", "right_wrist",
    "left_hip", "right_hip",
    "left_knee", "right_knee",
    "left_ankle", "right_ankle",
]
NUM_JOINTS = 13

# index pairs swapped by a horizontal flip
FLIP_PAIRS = [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10), (11, 12)]

SKELETON_EDGES = [
    (0, 1), (0, 2), (1, 2), (1, 3), (3, 5), (2, 4), (4, 6),
    (1, 7), (2, 8), (7, 8), (7, 9), (9, 11), (8, 10), (10, 12),
]

# reference body proportions as fractions of figure height
_PROPORTIONS = {
    "neck": 0.15, "torso": 0.30, "shoulder_half": 0.11, "hip_half": 0.08,
    "upper_arm": 0.16, "forearm": 0.15, "thigh": 0.24, "shin": 0.22,
}
_HEAD_RADIUS = 0.085
_TORSO_RADIUS = 0.085
_LIMB_RADIUS = 0.045

# per-part brightness so limbs are visually distinguishable
_PART_SHADE = {"legs": 0.72, "torso": 1.0, "arms": 0.86, "head": 1.22}

_PALETTES = {
    "SOURCE": [(0.85, 0.35, 0.25), (0.9, 0.6, 0.2), (0.75, 0.45, 0.35), (0.8, 0.25, 0.45)],
    "TARGET": [(0.25, 0.45, 0.85), (0.2, 0.7, 0.7), (0.45, 0.35, 0.8), (0.3, 0.6, 0.9)],
}
_BG_COLORS = {
    "SOURCE": [(0.95, 0.87, 0.72), (0.85, 0.72, 0.6), (0.92, 0.8, 0.68)],
    "TARGET": [(0.2, 0.25, 0.35), (0.35, 0.45, 0.55), (0.25, 0.35, 0.45)],
}


class Domain(str, Enum):
    SOURCE = "SOURCE"
    TARGET = "TARGET"


class PlacementError(RuntimeError):
    """A figure could not be placed after the configured number of retries."""

    def __init__(self, seed, retries):
        super().__init__(f"failed to place figure after {retries} retries (scene seed {seed})")
        self.seed = seed


@dataclass
class Skeleton13:
    """13 joints in image coordinates, ordered as in JOINT_NAMES."""

    joints: np.ndarray  # (13, 2) float64, columns x, y

    def __post_init__(self):
        self.joints = np.asarray(self.joints, dtype=np.float64)
        if self.joints.shape != (NUM_JOINTS, 2):
            raise ValueError(f"expected (13, 2) joints, got {self.joints.shape}")

    def translated(self, dx, dy):
        return Skeleton13(self.joints + np.array([dx, dy]))

    def bone_lengths(self) -> dict:
        """Distances between kinematically connected joints plus derived midlines."""
        j = self.joints
        mid_sh = (j[1] + j[2]) / 2
        mid_hip = (j[7] + j[8]) / 2
        d = np.linalg.norm
        return {
            "neck": d(j[0] - mid_sh),
            "torso": d(mid_sh - mid_hip),
            "shoulder_half": d(j[1] - j[2]) / 2,
            "hip_half": d(j[7] - j[8]) / 2,
            "upper_arm_l": d(j[3] - j[1]), "upper_arm_r": d(j[4] - j[2]),
            "forearm_l": d(j[5] - j[3]), "forearm_r": d(j[6] - j[4]),
            "thigh_l": d(j[9] - j[7]), "thigh_r": d(j[10] - j[8]),
            "shin_l": d(j[11] - j[9]), "shin_r": d(j[12] - j[10]),
        }


@dataclass
class InstanceAnnotation:
    """Per-figure ground truth: amodal box/mask/pose plus visibility."""

    bbox: tuple  # (x, y, w, h) over the amodal extent, pixels
    amodal_mask: np.ndarray  # (H, W) bool
    visible_mask: np.ndarray  # (H, W) bool, subset of amodal_mask
    keypoints: Skeleton13
    keypoint_visible: np.ndarray  # (13,) bool, True = joint pixel is visible
    visibility_fraction: float


@dataclass
class SceneSample:
    image: np.ndarray  # (H, W, 3) float32 in [0, 1], quantized to the uint8 grid
    domain: Domain
    instances: list = field(default_factory=list)
    seed: int = 0


def occlusion_fraction(instance: InstanceAnnotation) -> float:
    """Visible-over-amodal pixel fraction of one instance."""
    amodal = int(instance.amodal_mask.sum())
    if amodal == 0:
        raise ValueError("instance has an empty amodal mask")
    return float(instance.visible_mask.sum()) / amodal


def sample_pose(rng: np.random.Generator, config: GeneratorConfig) -> Skeleton13:
    """Sample an articulated skeleton around the origin (mid-hip at (0, 0)).

    All angle ranges of zero width and zero value produce the canonical
    upright T-pose: torso vertical, arms horizontal, legs straight down.
    """
    config.validate()
    height = rng.uniform(*config.figure_height)
    L = {name: base * height * rng.uniform(*config.bone_scale)
         for name, base in _PROPORTIONS.items()}

    tilt = rng.uniform(*config.torso_tilt)
    arm_l, arm_r = rng.uniform(*config.arm_raise, size=2)
    bend_l, bend_r = rng.uniform(*config.elbow_bend, size=2)
    leg_l, leg_r = rng.uniform(*config.leg_swing, size=2)
    knee_l, knee_r = rng.uniform(*config.knee_bend, size=2)

    mid_hip = np.zeros(2)
    mid_sh = mid_hip + np.array([0.0, -L["torso"]])
    head = mid_sh + np.array([0.0, -L["neck"]])
    sh_l = mid_sh + np.array([-L["shoulder_half"], 0.0])
    sh_r = mid_sh + np.array([+L["shoulder_half"], 0.0])
    hip_l = mid_hip + np.array([-L["hip_half"], 0.0])
    hip_r = mid_hip + np.array([+L["hip_half"], 0.0])

    # arm angles measured from horizontal-outward, positive lowers the arm
    def arm(shoulder, side, raise_a, bend_a):
        d1 = np.array([side * np.cos(raise_a), np.sin(raise_a)])
        elbow = shoulder + L["upper_arm"] * d1
        d2 = np.array([side * np.cos(raise_a + bend_a), np.sin(raise_a + bend_a)])
        wrist = elbow + L["forearm"] * d2
        return elbow, wrist

    # leg angles measured from straight down, positive swings toward +x
    def leg(hip, swing_a, knee_a):
        d1 = np.array([np.sin(swing_a), np.cos(swing_a)])
        knee = hip + L["thigh"] * d1
        d2 = np.array([np.sin(swing_a + knee_a), np.cos(swing_a + knee_a)])
        ankle = knee + L["shin"] * d2
        return knee, ankle

    elb_l, wr_l = arm(sh_l, -1.0, arm_l, bend_l)
    elb_r, wr_r = arm(sh_r, +1.0, arm_r, bend_r)
    kn_l, an_l = leg(hip_l, leg_l, knee_l)
    kn_r, an_r = leg(hip_r, leg_r, knee_r)

    joints = np.stack([head, sh_l, sh_r, elb_l, elb_r, wr_l, wr_r,
                       hip_l, hip_r, kn_l, kn_r, an_l, an_r])

    c, s = np.cos(tilt), np.sin(tilt)
    rot = np.array([[c, -s], [s, c]])
    return Skeleton13(joints @ rot.T)


def _capsule_mask(xx, yy, p, q, radius):
    """Pixels whose center lies within `radius` of segment pq."""
    px, py = p
    qx, qy = q
    dx, dy = qx - px, qy - py
    seg2 = dx * dx + dy * dy
    if seg2 < 1e-12:
        return (xx - px) ** 2 + (yy - py) ** 2 <= radius * radius
    t = np.clip(((xx - px) * dx + (yy - py) * dy) / seg2, 0.0, 1.0)
    cx, cy = px + t * dx, py + t * dy
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius * radius


def _render_figure(skel: Skeleton13, height_px, size):
    """Rasterize one figure; returns (amodal_mask, shade map)."""
    ys, xs = np.mgrid[0:size, 0:size]
    xx = xs + 0.5
    yy = ys + 0.5
    j = skel.joints
    mid_sh = (j[1] + j[2]) / 2
    mid_hip = (j[7] + j[8]) / 2
    r_head = _HEAD_RADIUS * height_px
    r_torso = _TORSO_RADIUS * height_px
    r_limb = _LIMB_RADIUS * height_px

    parts = {
        "legs": [(j[7], j[9], r_limb), (j[9], j[11], r_limb),
                 (j[8], j[10], r_limb), (j[10], j[12], r_limb)],
        "torso": [(mid_sh, mid_hip, r_torso), (j[1], j[2], r_limb),
                  (j[7], j[8], r_limb)],
        "arms": [(j[1], j[3], r_limb), (j[3], j[5], r_limb),
                 (j[2], j[4], r_limb), (j[4], j[6], r_limb)],
        "head": [(j[0], mid_sh, r_limb), (j[0], j[0], r_head)],
    }

    amodal = np.zeros((size, size), dtype=bool)
    shade = np.zeros((size, size), dtype=np.float64)
    for name in ("legs", "torso", "arms", "head"):  # painter's order
        for p, q, r in parts[name]:
            m = _capsule_mask(xx, yy, p, q, r)
            amodal |= m
            shade[m] = _PART_SHADE[name]
    return amodal, shade


def _background(rng, domain, size, config):
    colors = _BG_COLORS[domain.value]
    c0 = np.array(colors[rng.integers(len(colors))])
    c1 = np.array(colors[rng.integers(len(colors))])
    img = np.zeros((size, size, 3), dtype=np.float64)
    if domain is Domain.SOURCE:
        ramp = np.linspace(0.0, 1.0, size)[:, None]
        img[:] = c0[None, None, :] * (1 - ramp[..., None]) + c1[None, None, :] * ramp[..., None]
    else:
        tile = max(2, int(config.checker_tile))
        ys, xs = np.mgrid[0:size, 0:size]
        checker = ((xs // tile + ys // tile) % 2).astype(np.float64)
        img[:] = c0[None, None, :] * (1 - checker[..., None]) + c1[None, None, :] * checker[..., None]
    img += rng.normal(0.0, config.background_noise, img.shape)
    return img


def render_scene(rng: np.random.Generator, domain: Domain, n_figures: int,
                 config: GeneratorConfig, seed: int = 0) -> SceneSample:
    """Render one scene: background, layered figures, frontmost occluders.

    Figures are composited back to front in list order; occluder rectangles
    are drawn in front of everything. Visible masks are carved accordingly,
    so `visible_mask <= amodal_mask` holds pixelwise by construction.
    """
    config.validate()
    if n_figures < 1:
        raise ConfigError("n_figures must be >= 1")
    size = config.image_size
    domain = Domain(domain)
    img = _background(rng, domain, size, config)
    palette = _PALETTES[domain.value]

    figures = []
    for _ in range(n_figures):
        placed = False
        for _attempt in range(config.placement_retries):
            skel_local = sample_pose(rng, config)
            height_px = skel_local.bone_lengths()["torso"] / _PROPORTIONS["torso"]
            cx = rng.uniform(0.15 * size, 0.85 * size)
            cy = rng.uniform(0.35 * size, 0.8 * size)
            skel = skel_local.translated(cx, cy)
            hx, hy = int(np.floor(skel.joints[0, 0])), int(np.floor(skel.joints[0, 1]))
            if not (0 <= hx < size and 0 <= hy < size):
                continue
            amodal, shade = _render_figure(skel, height_px, size)
            if amodal.sum() == 0:
                continue
            color = np.array(palette[rng.integers(len(palette))])
            color = color * rng.uniform(0.85, 1.15)
            figures.append({"skel": skel, "amodal": amodal, "shade": shade, "color": color})
            placed = True
            break
        if not placed:
            raise PlacementError(seed, config.placement_retries)

    # occluder rectangles, drawn frontmost
    occluders = np.zeros((size, size), dtype=bool)
    if config.occluders_enabled and config.max_occluders > 0:
        for _ in range(config.max_occluders):
            if rng.uniform() >= config.occluder_prob:
                continue
            w = rng.uniform(*config.occluder_size_frac) * size
            h = rng.uniform(*config.occluder_size_frac) * size
            if figures and rng.uniform() < config.occluder_attract:
                fig = figures[rng.integers(len(figures))]
                ys_, xs_ = np.nonzero(fig["amodal"])
                cx = rng.uniform(xs_.min(), xs_.max() + 1)
                cy = rng.uniform(ys_.min(), ys_.max() + 1)
            else:
                cx = rng.uniform(0, size)
                cy = rng.uniform(0, size)
            x0, x1 = int(max(0, cx - w / 2)), int(min(size, cx + w / 2))
            y0, y1 = int(max(0, cy - h / 2)), int(min(size, cy + h / 2))
            if x1 <= x0 or y1 <= y0:
                continue
            shade = rng.uniform(0.25, 0.55)
            img[y0:y1, x0:x1] = shade + rng.normal(0.0, 0.02, (y1 - y0, x1 - x0, 3))
            occluders[y0:y1, x0:x1] = True

    # composite figures back to front and carve visible masks
    in_front = occluders.copy()
    visibles = [None] * len(figures)
    for i in range(len(figures) - 1, -1, -1):
        visibles[i] = figures[i]["amodal"] & ~in_front
        in_front |= figures[i]["amodal"]
    for i, fig in enumerate(figures):
        vis = visibles[i]
        img[vis] = fig["color"][None, :] * fig["shade"][vis, None]

    img = np.clip(img, 0.0, 1.0)
    img = np.round(img * 255.0) / 255.0  # snap to the uint8 grid for lossless export

    instances = []
    for fig, vis in zip(figures, visibles):
        amodal = fig["amodal"]
        ys_, xs_ = np.nonzero(amodal)
        bbox = (float(xs_.min()), float(ys_.min()),
                float(xs_.max() - xs_.min() + 1), float(ys_.max() - ys_.min() + 1))
        kp = fig["skel"]
        px = np.floor(kp.joints[:, 0]).astype(int)
        py = np.floor(kp.joints[:, 1]).astype(int)
        inside = (px >= 0) & (px < size) & (py >= 0) & (py < size)
        kp_vis = np.zeros(NUM_JOINTS, dtype=bool)
        kp_vis[inside] = vis[py[inside], px[inside]]
        inst = InstanceAnnotation(
            bbox=bbox,
            amodal_mask=amodal,
            visible_mask=vis,
            keypoints=kp,
            keypoint_visible=kp_vis,
            visibility_fraction=occlusion_fraction(
                InstanceAnnotation(bbox, amodal, vis, kp, kp_vis, 0.0)),
        )
        instances.append(inst)

    return SceneSample(image=img.astype(np.float32), domain=domain,
                       instances=instances, seed=seed)


def generate_sample(config: GeneratorConfig, domain: Domain, seed: int) -> SceneSample:
    """Regenerate one scene bit-identically from (seed, config)."""
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    n = int(rng.integers(config.min_figures, config.max_figures + 1))
    return render_scene(rng, domain, n, config, seed=seed)


def sample_seeds(base_seed: int, count: int) -> np.ndarray:
    """Derive per-sample seeds from one base seed (documented splitting scheme)."""
    return np.random.SeedSequence(base_seed).generate_state(count, dtype=np.uint64)


def generate_dataset(config: GeneratorConfig, n_samples: int, base_seed: int = 0,
                     domains=(Domain.SOURCE, Domain.TARGET)) -> list:
    """Generate scenes with domains assigned round-robin; order is deterministic."""
    seeds = sample_seeds(base_seed, n_samples)
    return [generate_sample(config, domains[i % len(domains)], int(seeds[i]))
            for i in range(n_samples)]
