"""2D synthetic detection data: RGBA sprites composited over backgrounds.

Per sample the effects run in a fixed order: background blur, composite,
global blur, film grain, brightness. Each effect has a feature toggle so the
original/noise/size/blur ablation variants can be generated from one config.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from .core import BoundingBox

MIN_SIZE_PX = 4.0
MAX_SIZE_FRAC = 0.9
MAX_PLACEMENT_ATTEMPTS = 100
# zlib level 1: lossless and deterministic, several times faster than the default 6
PNG_COMPRESS_LEVEL = 1
CLASS_NAME = "drone"


class AssetError(IOError):
    """A sprite or background could not be loaded."""


class PlacementError(ValueError):
    """A sprite cannot be placed inside the background."""


class EmptySpriteError(ValueError):
    """The composited sprite left no visible pixels, so there is no box."""


@dataclass(frozen=True)
class FeatureToggles:
    noise: bool = True
    size: bool = True
    blur: bool = True
    lighting: bool = True

    @classmethod
    def original(cls) -> "FeatureToggles":
        return cls(noise=False, size=False, blur=False, lighting=False)


@dataclass(frozen=True)
class SynthConfig:
    sprite_paths: Tuple[str, ...] = ()
    background_paths: Tuple[str, ...] = ()
    num_samples: int = 100
    size_mean_px: float = 40.0
    size_std_px: float = 10.0
    rotation_range_deg: Tuple[float, float] = (-180.0, 180.0)
    blur_sigma_background: float = 1.0
    blur_sigma_global: float = 0.5
    grain_strength: float = 0.02
    brightness_jitter: Tuple[float, float] = (0.8, 1.2)
    feature_toggles: FeatureToggles = field(default_factory=FeatureToggles)
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sprite_paths", tuple(str(p) for p in self.sprite_paths))
        object.__setattr__(self, "background_paths", tuple(str(p) for p in self.background_paths))
        object.__setattr__(self, "rotation_range_deg", tuple(float(v) for v in self.rotation_range_deg))
        object.__setattr__(self, "brightness_jitter", tuple(float(v) for v in self.brightness_jitter))
        if isinstance(self.feature_toggles, dict):
            object.__setattr__(self, "feature_toggles", FeatureToggles(**self.feature_toggles))
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if self.size_mean_px <= 0 or self.size_std_px < 0:
            raise ValueError("need size_mean_px > 0 and size_std_px >= 0")
        if min(self.blur_sigma_background, self.blur_sigma_global, self.grain_strength) < 0:
            raise ValueError("blur sigmas and grain strength must be >= 0")
        lo, hi = self.rotation_range_deg
        if lo > hi:
            raise ValueError("rotation_range_deg must be (low, high)")
        lo, hi = self.brightness_jitter
        if not 0 < lo <= hi:
            raise ValueError("brightness_jitter must be (low, high) with 0 < low <= high")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SynthConfig":
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        d["sprite_paths"] = list(self.sprite_paths)
        d["background_paths"] = list(self.background_paths)
        d["rotation_range_deg"] = list(self.rotation_range_deg)
        d["brightness_jitter"] = list(self.brightness_jitter)
        return d


def ablation_variants(config: SynthConfig) -> Dict[str, SynthConfig]:
    """One config per single feature: original, noise, size, blur."""
    base = FeatureToggles.original()
    return {
        "original": replace(config, feature_toggles=base),
        "noise": replace(config, feature_toggles=replace(base, noise=True)),
        "size": replace(config, feature_toggles=replace(base, size=True)),
        "blur": replace(config, feature_toggles=replace(base, blur=True)),
    }


@dataclass(frozen=True)
class Transform:
    """Sprite placement.

    ``(tx, ty)`` is the top-left corner of the axis-aligned box enclosing the
    scaled and rotated sprite rectangle; rotation is about the sprite center.
    """

    scale: float
    rotation_deg: float
    tx: float
    ty: float
    brightness: float = 1.0
    longest_side: float = 0.0
    longest_side_raw: float = 0.0

    def extents(self, sprite_w: int, sprite_h: int) -> Tuple[float, float]:
        c = abs(math.cos(math.radians(self.rotation_deg)))
        s = abs(math.sin(math.radians(self.rotation_deg)))
        return (
            self.scale * (sprite_w * c + sprite_h * s),
            self.scale * (sprite_w * s + sprite_h * c),
        )

    def forward(self, u, v, sprite_w: int, sprite_h: int):
        """Map sprite coordinates to background coordinates."""
        bw, bh = self.extents(sprite_w, sprite_h)
        th = math.radians(self.rotation_deg)
        du = (np.asarray(u, dtype=float) - sprite_w / 2.0) * self.scale
        dv = (np.asarray(v, dtype=float) - sprite_h / 2.0) * self.scale
        x = math.cos(th) * du - math.sin(th) * dv + self.tx + bw / 2.0
        y = math.sin(th) * du + math.cos(th) * dv + self.ty + bh / 2.0
        return x, y


@dataclass(frozen=True, eq=False)
class Sprite:
    """Premultiplied RGBA in [0, 1], cropped to its nonzero-alpha bounds."""

    premultiplied: np.ndarray
    name: str = ""

    @classmethod
    def from_rgba(cls, rgba: np.ndarray, name: str = "", crop: bool = True) -> "Sprite":
        arr = np.asarray(rgba)
        if arr.ndim != 3 or arr.shape[2] != 4:
            raise ValueError("sprite must be an RGBA array of shape (h, w, 4)")
        arr = arr.astype(np.float64) / 255.0 if arr.dtype == np.uint8 else arr.astype(np.float64)
        if crop:
            ys, xs = np.nonzero(arr[..., 3] > 0)
            if len(xs) == 0:
                raise EmptySpriteError(f"sprite {name!r} is fully transparent")
            arr = arr[ys.min() : ys.max() + 1, xs.min() : xs.max() + 1]
        pm = arr.copy()
        pm[..., :3] *= pm[..., 3:4]
        pm.flags.writeable = False
        return cls(pm, name)

    @property
    def width(self) -> int:
        return self.premultiplied.shape[1]

    @property
    def height(self) -> int:
        return self.premultiplied.shape[0]

    @property
    def alpha(self) -> np.ndarray:
        return self.premultiplied[..., 3]


@dataclass
class SynthSample:
    image: np.ndarray
    annotation: BoundingBox
    provenance: Dict[str, Any]
    class_label: str = CLASS_NAME


def load_sprite(path) -> Sprite:
    try:
        with Image.open(path) as im:
            if "A" not in im.getbands():
                raise AssetError(f"{path}: sprite has no alpha channel")
            rgba = np.asarray(im.convert("RGBA"))
    except (OSError, ValueError) as exc:
        if isinstance(exc, AssetError):
            raise
        raise AssetError(f"{path}: {exc}") from exc
    try:
        return Sprite.from_rgba(rgba, name=Path(path).name)
    except EmptySpriteError as exc:
        raise AssetError(f"{path}: {exc}") from exc


def load_background(path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except OSError as exc:
        raise AssetError(f"{path}: {exc}") from exc


def sample_placement(
    config: SynthConfig,
    sprite_size: Tuple[int, int],
    background_size: Tuple[int, int],
    rng: np.random.Generator,
) -> Transform:
    """Draw a random placement for a ``(w, h)`` sprite on a ``(W, H)`` background.

    All variates are drawn whatever the toggles say, so ablation variants of
    the same seed share positions and rotations.
    """
    sw, sh = sprite_size
    W, H = background_size
    toggles = config.feature_toggles
    raw = rng.normal(config.size_mean_px, config.size_std_px)
    rotation = rng.uniform(*config.rotation_range_deg)
    fx, fy = rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0)
    brightness = rng.uniform(*config.brightness_jitter)

    if not toggles.size:
        raw = config.size_mean_px
    hi = MAX_SIZE_FRAC * min(W, H)
    if hi < MIN_SIZE_PX:
        raise PlacementError(f"background {W}x{H} too small for a {MIN_SIZE_PX:g}px sprite")
    longest = float(np.clip(raw, MIN_SIZE_PX, hi))
    t = Transform(
        scale=longest / max(sw, sh),
        rotation_deg=float(rotation),
        tx=0.0,
        ty=0.0,
        brightness=float(brightness) if toggles.lighting else 1.0,
        longest_side=longest,
        longest_side_raw=float(raw),
    )
    bw, bh = t.extents(sw, sh)
    if bw > W or bh > H:
        raise PlacementError(
            f"rotated sprite {bw:.1f}x{bh:.1f} does not fit background {W}x{H}"
        )
    return replace(t, tx=float(fx * (W - bw)), ty=float(fy * (H - bh)))


def _supersampling(scale: float) -> int:
    # a grid with spacing <= scale/sqrt(2) hits every transformed source pixel
    return max(2, math.ceil(math.sqrt(2.0) / scale))


def warp_sprite(
    sprite: Sprite, transform: Transform, out_shape: Tuple[int, int], row_block: int = 16
) -> np.ndarray:
    """Render the sprite into an ``(H, W, 4)`` premultiplied RGBA layer.

    Each output pixel averages k*k bilinear samples. A sample only counts if
    it lands inside a nonzero-alpha source pixel, so the layer's support is
    the transformed alpha mask rather than the mask grown by the filter.
    """
    H, W = out_shape
    sw, sh = sprite.width, sprite.height
    layer = np.zeros((H, W, 4))
    bw, bh = transform.extents(sw, sh)
    x0, x1 = max(int(math.floor(transform.tx)), 0), min(int(math.ceil(transform.tx + bw)), W)
    y0, y1 = max(int(math.floor(transform.ty)), 0), min(int(math.ceil(transform.ty + bh)), H)
    if x0 >= x1 or y0 >= y1:
        return layer

    k = _supersampling(transform.scale)
    offsets = (np.arange(k) + 0.5) / k
    th = math.radians(transform.rotation_deg)
    cos, sin = math.cos(th), math.sin(th)
    cx, cy = transform.tx + bw / 2.0, transform.ty + bh / 2.0
    pm = sprite.premultiplied
    alpha = sprite.alpha
    xs = ((np.arange(x0, x1)[:, None] + offsets[None, :]).ravel() - cx)

    for r0 in range(y0, y1, row_block):
        r1 = min(r0 + row_block, y1)
        ys = ((np.arange(r0, r1)[:, None] + offsets[None, :]).ravel() - cy)
        dx, dy = np.meshgrid(xs, ys)
        u = (cos * dx + sin * dy) / transform.scale + sw / 2.0
        v = (-sin * dx + cos * dy) / transform.scale + sh / 2.0
        inside = (u >= 0) & (u < sw) & (v >= 0) & (v < sh)
        iu = np.clip(np.floor(u).astype(int), 0, sw - 1)
        iv = np.clip(np.floor(v).astype(int), 0, sh - 1)
        inside &= alpha[iv, iu] > 0

        fu, fv = u - 0.5, v - 0.5
        u0, v0 = np.floor(fu), np.floor(fv)
        au, av = (fu - u0)[..., None], (fv - v0)[..., None]
        u0, v0 = u0.astype(int), v0.astype(int)
        ua, ub = np.clip(u0, 0, sw - 1), np.clip(u0 + 1, 0, sw - 1)
        va, vb = np.clip(v0, 0, sh - 1), np.clip(v0 + 1, 0, sh - 1)
        samples = (
            pm[va, ua] * (1 - au) * (1 - av)
            + pm[va, ub] * au * (1 - av)
            + pm[vb, ua] * (1 - au) * av
            + pm[vb, ub] * au * av
        )
        samples[~inside] = 0.0
        block = samples.reshape(r1 - r0, k, x1 - x0, k, 4).mean(axis=(1, 3))
        layer[r0:r1, x0:x1] = block
    return layer


def alpha_bounds(alpha: np.ndarray) -> Optional[BoundingBox]:
    """Tight box around the pixels with alpha > 0, or None if there are none."""
    ys, xs = np.nonzero(alpha > 0)
    if len(xs) == 0:
        return None
    return BoundingBox(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def _to_float(image: np.ndarray) -> np.ndarray:
    if image.dtype == np.uint8:
        return image.astype(np.float64) / 255.0
    return image.astype(np.float64)


def _to_uint8(image: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(image * 255.0), 0, 255).astype(np.uint8)


def blend(background: np.ndarray, sprite: Sprite, transform: Transform) -> Tuple[np.ndarray, np.ndarray]:
    """Alpha-blend the warped sprite over the background.

    Returns the float image in [0, 1] and the sprite's alpha layer.
    """
    bg = _to_float(background)
    layer = warp_sprite(sprite, transform, bg.shape[:2])
    a = layer[..., 3:4]
    return layer[..., :3] + (1.0 - a) * bg, layer[..., 3]


def composite(background: np.ndarray, sprite: Sprite, transform: Transform) -> SynthSample:
    """Composite one sprite; the annotation is the tight alpha box.

    Raises:
        EmptySpriteError: the transformed sprite covers no pixel.
    """
    image, alpha = blend(background, sprite, transform)
    box = alpha_bounds(alpha)
    if box is None:
        raise EmptySpriteError("composited sprite has no visible pixels")
    return SynthSample(
        image=_to_uint8(image),
        annotation=box,
        provenance={"sprite": sprite.name, "transform": asdict(transform)},
    )


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x**2) / (2.0 * sigma**2))
    return k / k.sum()


def _convolve_axis(image: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pad = [(0, 0)] * image.ndim
    pad[axis] = (r, r)
    padded = np.pad(image, pad, mode="edge")
    n = image.shape[axis]
    window = [slice(None)] * image.ndim
    out = np.zeros(image.shape, dtype=np.float64)
    for i, w in enumerate(kernel):
        window[axis] = slice(i, i + n)
        out += w * padded[tuple(window)]
    return out


def apply_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur, radius ceil(3 sigma), clamp-to-edge borders.

    uint8 input comes back as uint8; float input stays float.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return image.copy()
    kernel = gaussian_kernel(sigma)
    out = _convolve_axis(_convolve_axis(_to_float(image), kernel, 0), kernel, 1)
    return _to_uint8(out) if image.dtype == np.uint8 else out


def apply_grain(image: np.ndarray, strength: float, rng: np.random.Generator) -> np.ndarray:
    """Additive zero-mean Gaussian film grain, std in [0, 1] intensity units."""
    if strength < 0:
        raise ValueError("strength must be >= 0")
    if strength == 0:
        return image.copy()
    noisy = np.clip(_to_float(image) + rng.normal(0.0, strength, size=image.shape), 0.0, 1.0)
    return _to_uint8(noisy) if image.dtype == np.uint8 else noisy


def apply_brightness(image: np.ndarray, factor: float) -> np.ndarray:
    if factor == 1.0:
        return image.copy()
    out = np.clip(_to_float(image) * factor, 0.0, 1.0)
    return _to_uint8(out) if image.dtype == np.uint8 else out


def sample_rngs(seed: int, index: int) -> Tuple[np.random.Generator, np.random.Generator]:
    """Independent placement and grain streams for one sample."""
    return (
        np.random.default_rng([seed, index, 0]),
        np.random.default_rng([seed, index, 1]),
    )


def generate_sample(
    config: SynthConfig,
    sprites: Sequence[Sprite],
    backgrounds: Sequence[np.ndarray],
    index: int,
) -> SynthSample:
    rng, grain_rng = sample_rngs(config.rng_seed, index)
    toggles = config.feature_toggles
    last_error = None
    for attempt in range(MAX_PLACEMENT_ATTEMPTS):
        si = int(rng.integers(len(sprites)))
        bi = int(rng.integers(len(backgrounds)))
        sprite, bg = sprites[si], backgrounds[bi]
        try:
            transform = sample_placement(config, (sprite.width, sprite.height), (bg.shape[1], bg.shape[0]), rng)
        except PlacementError as exc:
            last_error = exc
            continue

        effects = []
        image = _to_float(bg)
        if toggles.blur and config.blur_sigma_background > 0:
            image = apply_blur(image, config.blur_sigma_background)
            effects.append(("background_blur", config.blur_sigma_background))
        image, alpha = blend(image, sprite, transform)
        box = alpha_bounds(alpha)
        if box is None:
            last_error = EmptySpriteError("placement produced no visible pixels")
            continue
        if toggles.blur and config.blur_sigma_global > 0:
            image = apply_blur(image, config.blur_sigma_global)
            effects.append(("global_blur", config.blur_sigma_global))
        if toggles.noise and config.grain_strength > 0:
            image = apply_grain(image, config.grain_strength, grain_rng)
            effects.append(("grain", config.grain_strength))
        if transform.brightness != 1.0:
            image = apply_brightness(image, transform.brightness)
            effects.append(("brightness", transform.brightness))
        return SynthSample(
            image=_to_uint8(image),
            annotation=box,
            provenance={
                "index": index,
                "sprite_id": si,
                "background_id": bi,
                "attempts": attempt + 1,
                "transform": asdict(transform),
                "effects": [list(e) for e in effects],
            },
        )
    raise PlacementError(
        f"sample {index}: no valid placement after {MAX_PLACEMENT_ATTEMPTS} attempts ({last_error})"
    )


def generate_dataset(config: SynthConfig, out_dir, workers: int = 1) -> Path:
    """Write ``num_samples`` images, a COCO annotation file and a manifest.

    Images go to ``<out_dir>/synth/<index>.png``; ``file_name`` entries follow
    the ``{video_id}/{frame_index}`` convention with video id ``synth``.
    Output is identical for any ``workers`` value.
    """
    if not config.sprite_paths or not config.background_paths:
        raise AssetError("config needs at least one sprite and one background")
    sprites = [load_sprite(p) for p in config.sprite_paths]
    backgrounds = [load_background(p) for p in config.background_paths]

    out = Path(out_dir)
    (out / "synth").mkdir(parents=True, exist_ok=True)

    def make(i):
        return generate_sample(config, sprites, backgrounds, i)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            samples = list(pool.map(make, range(config.num_samples)))
    else:
        samples = [make(i) for i in range(config.num_samples)]

    images, annotations, provenance = [], [], []
    for i, sample in enumerate(samples):
        file_name = f"synth/{i:06d}.png"
        Image.fromarray(sample.image).save(out / file_name, compress_level=PNG_COMPRESS_LEVEL)
        h, w = sample.image.shape[:2]
        images.append({"id": i + 1, "file_name": file_name, "width": w, "height": h})
        box = sample.annotation
        annotations.append(
            {
                "id": i + 1,
                "image_id": i + 1,
                "category_id": 1,
                "bbox": box.to_xywh(),
                "area": box.area(),
                "iscrowd": 0,
            }
        )
        provenance.append(sample.provenance)

    coco = {"images": images, "annotations": annotations, "categories": [{"id": 1, "name": CLASS_NAME}]}
    (out / "annotations.json").write_text(json.dumps(coco, indent=1))
    manifest = {
        "config": config.to_dict(),
        "seed": config.rng_seed,
        "size_clamp_px": [MIN_SIZE_PX, f"{MAX_SIZE_FRAC} * min(width, height)"],
        "effect_order": ["background_blur", "composite", "global_blur", "grain", "brightness"],
        "samples": provenance,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return out
