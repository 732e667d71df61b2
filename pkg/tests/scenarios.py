"""Synthetic detector-output scenes written as COCO documents."""

import json
import random

from trackboost.core import BoundingBox


def drone_scene(seed, videos=2, frames=60, w=1920, h=1080, clutter=0.6, miss=0.1):
    """One moving drone per video plus single-frame clutter.

    Returns (annotations_doc, results_list).
    """
    rng = random.Random(seed)
    images, anns, results = [], [], []
    image_id = 0
    for v in range(videos):
        x, y = rng.uniform(200, w - 600), rng.uniform(200, h - 400)
        vx, vy = rng.uniform(-3, 3), rng.uniform(-2, 2)
        side = rng.choice([14.0, 40.0, 120.0])
        for f in range(frames):
            image_id += 1
            images.append({"id": image_id, "file_name": f"vid{v}/{f:05d}.jpg", "width": w, "height": h})
            gx, gy = x + vx * f, y + vy * f
            anns.append({"id": len(anns) + 1, "image_id": image_id, "category_id": 1, "iscrowd": 0,
                         "bbox": [gx, gy, side, side], "area": side * side})
            if rng.random() > miss:
                jitter = [rng.gauss(0, 1.0) for _ in range(4)]
                results.append({"image_id": image_id, "category_id": 1, "score": round(rng.uniform(0.3, 0.95), 4),
                                "bbox": [gx + jitter[0], gy + jitter[1], side + jitter[2] / 2, side + jitter[3] / 2]})
            if rng.random() < clutter:
                cw = rng.uniform(8, 60)
                results.append({"image_id": image_id, "category_id": 1, "score": round(rng.uniform(0.05, 0.7), 4),
                                "bbox": [rng.uniform(0, w - cw), rng.uniform(0, h - cw), cw, cw]})
    doc = {"images": images, "annotations": anns, "categories": [{"id": 1, "name": "drone"}]}
    return doc, results


def write_scene(tmp_path, seed, **kwargs):
    doc, results = drone_scene(seed, **kwargs)
    gt = tmp_path / f"gt_{seed}.json"
    dets = tmp_path / f"dets_{seed}.json"
    gt.write_text(json.dumps(doc))
    dets.write_text(json.dumps(results))
    return gt, dets


def random_instance(rng, frames=20, max_boxes=10):
    """Ground truths across all size bins plus jittered hits and clutter."""
    dets, gts = {}, {}
    for f in range(rng.randint(1, frames)):
        key = ("v", f)
        gts[key], dets[key] = [], []
        for _ in range(rng.randint(0, max_boxes // 2)):
            side = rng.choice([rng.uniform(5, 30), rng.uniform(34, 90), rng.uniform(100, 200)])
            x, y = rng.uniform(0, 800), rng.uniform(0, 800)
            g = BoundingBox(x, y, x + side * rng.uniform(0.7, 1.3), y + side)
            gts[key].append(g)
            if rng.random() < 0.8 and len(dets[key]) < max_boxes:
                j = side * 0.15
                dets[key].append((BoundingBox(g.x_min + rng.uniform(-j, j), g.y_min + rng.uniform(-j, j),
                                      g.x_max + rng.uniform(-j, j), g.y_max + rng.uniform(-j, j)), rng.random()))
        for _ in range(rng.randint(0, 3)):
            if len(dets[key]) >= max_boxes:
                break
            side = rng.uniform(5, 150)
            x, y = rng.uniform(0, 900), rng.uniform(0, 900)
            dets[key].append((BoundingBox(x, y, x + side, y + side), rng.random()))
    return dets, gts


def as_tuples(dets, gts):
    return ({k: [(b.as_tuple(), s) for b, s in v] for k, v in dets.items()},
            {k: [b.as_tuple() for b in v] for k, v in gts.items()})
