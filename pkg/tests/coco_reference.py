"""pycocotools as the reference COCO-style evaluator.

Inputs are plain tuples so nothing from trackboost is involved:
``dets[key] = [((x0, y0, x1, y1), score), ...]`` and
``gts[key] = [(x0, y0, x1, y1), ...]``.
"""

import contextlib
import io

import numpy as np
from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval

AREA_NAMES = ("all", "small", "medium", "large")


def _xywh(b):
    return [b[0], b[1], b[2] - b[0], b[3] - b[1]]


def coco_reference(dets, gts, iou_threshold=0.5):
    """Returns {'all': ap, 'small': ap, ...}; None where COCO reports -1."""
    keys = sorted(gts)
    ids = {k: i + 1 for i, k in enumerate(keys)}
    images = [{"id": ids[k], "width": 100000, "height": 100000} for k in keys]
    anns, n = [], 0
    for k in keys:
        for b in gts[k]:
            n += 1
            x, y, w, h = _xywh(b)
            anns.append({"id": n, "image_id": ids[k], "bbox": [x, y, w, h], "area": w * h,
                         "iscrowd": 0, "category_id": 1})
    results, n = [], 0
    for k in keys:
        for b, s in dets.get(k, []):
            n += 1
            x, y, w, h = _xywh(b)
            results.append({"id": n, "image_id": ids[k], "bbox": [x, y, w, h], "area": w * h,
                            "iscrowd": 0, "category_id": 1, "score": s})

    with contextlib.redirect_stdout(io.StringIO()):
        gt = COCO()
        gt.dataset = {"images": images, "annotations": anns, "categories": [{"id": 1, "name": "drone"}]}
        gt.createIndex()
        dt = COCO()
        dt.dataset = {"images": images, "annotations": results, "categories": [{"id": 1, "name": "drone"}]}
        dt.createIndex()
        ev = COCOeval(gt, dt, "bbox")
        ev.params.iouThrs = np.array([iou_threshold])
        ev.params.maxDets = [100]
        ev.evaluate()
        ev.accumulate()
    out = {}
    for a, name in enumerate(AREA_NAMES):
        prec = ev.eval["precision"][0, :, 0, a, 0]
        out[name] = None if (prec < 0).all() else float(prec.mean())
    return out
