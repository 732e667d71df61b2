import math

import numpy as np
from PIL import Image


def square_sprite(side, color=(200, 30, 30)):
    rgba = np.zeros((side, side, 4), np.uint8)
    rgba[..., :3] = color
    rgba[..., 3] = 255
    return rgba


def drone_sprite(size=64, margin=6):
    """Quadcopter-ish mask: thin cross arms, disc rotors, soft body, clear margin."""
    n = size + 2 * margin
    yy, xx = np.mgrid[0:n, 0:n] + 0.5
    c = n / 2
    alpha = np.zeros((n, n))
    arm = 1.5
    alpha[(np.abs(xx - yy) < arm) & (np.abs(xx - c) < size * 0.4)] = 1.0
    alpha[(np.abs(xx + yy - n) < arm) & (np.abs(xx - c) < size * 0.4)] = 1.0
    for dx in (-1, 1):
        for dy in (-1, 1):
            r = np.hypot(xx - (c + dx * size * 0.4), yy - (c + dy * size * 0.4))
            alpha[r < size * 0.1] = 0.6
    alpha[np.hypot(xx - c, yy - c) < size * 0.12] = 1.0
    rgba = np.zeros((n, n, 4), np.uint8)
    rgba[..., 0] = 40
    rgba[..., 1] = (xx * 255 / n).astype(np.uint8)
    rgba[..., 2] = 60
    rgba[..., 3] = (alpha * 255).astype(np.uint8)
    return rgba


def gradient_background(w, h, seed=0):
    rng = np.random.default_rng(seed)
    base = np.linspace(60, 200, w)[None, :, None] * np.ones((h, 1, 3))
    return np.clip(base + rng.normal(0, 10, (h, w, 3)), 0, 255).astype(np.uint8)


def analytic_alpha_bounds(alpha, transform):
    """Forward-map the corners of every nonzero-alpha source pixel; take the extremes.

    Written from the placement definition (rotation about the sprite center,
    then the rotated box's top-left at (tx, ty)), not from the package's warp.
    """
    h, w = alpha.shape
    ys, xs = np.nonzero(alpha > 0)
    u = np.concatenate([xs, xs + 1, xs, xs + 1]).astype(float)
    v = np.concatenate([ys, ys, ys + 1, ys + 1]).astype(float)
    th = math.radians(transform.rotation_deg)
    s = transform.scale
    bw = s * (w * abs(math.cos(th)) + h * abs(math.sin(th)))
    bh = s * (w * abs(math.sin(th)) + h * abs(math.cos(th)))
    du, dv = (u - w / 2) * s, (v - h / 2) * s
    x = du * math.cos(th) - dv * math.sin(th) + transform.tx + bw / 2
    y = du * math.sin(th) + dv * math.cos(th) + transform.ty + bh / 2
    return x.min(), y.min(), x.max(), y.max()


def write_assets(tmp_path):
    sprites = []
    for i, rgba in enumerate([drone_sprite(64), drone_sprite(200, 10), square_sprite(12)]):
        p = tmp_path / f"sprite{i}.png"
        Image.fromarray(rgba, "RGBA").save(p)
        sprites.append(str(p))
    backgrounds = []
    for i, (w, h) in enumerate([(320, 240), (400, 300)]):
        p = tmp_path / f"bg{i}.png"
        Image.fromarray(gradient_background(w, h, seed=i)).save(p)
        backgrounds.append(str(p))
    return sprites, backgrounds
