"""Regenerates the reference fixture: a synthetic 10-image COCO-format
dataset, detections, and the 12 summary numbers from pycocotools.

    python3 make_fixture.py
"""
import json
import random

import numpy as np
from pycocotools import mask as mask_utils
from pycocotools.coco import COCO
from pycocotools.cocoeval import COCOeval

rng = random.Random(20240601)
W, H = 480, 360
categories = [{"id": i, "name": n} for i, n in [(1, "person"), (2, "car"), (3, "dog"), (5, "chair")]]
cat_ids = [c["id"] for c in categories]

images, annotations = [], []
ann_id = 1
for img_id in range(1, 11):
    images.append({"id": img_id, "file_name": f"{img_id:06d}.jpg", "width": W, "height": H})
    for _ in range(rng.randint(2, 7)):
        size = rng.choice([(6, 28), (35, 90), (100, 250)])
        w = float(rng.randint(*size))
        h = float(rng.randint(*size))
        x = float(rng.randint(0, int(W - w)))
        y = float(rng.randint(0, int(H - h)))
        crowd = 1 if rng.random() < 0.08 else 0
        area = round(w * h * rng.uniform(0.55, 0.95), 2)
        annotations.append({
            "id": ann_id, "image_id": img_id, "category_id": rng.choice(cat_ids),
            "bbox": [x, y, w, h], "area": area, "iscrowd": crowd,
        })
        ann_id += 1

dets = []
scores = rng.sample(range(1, 10000), 400)
for a in annotations:
    for _ in range(rng.choice([0, 1, 1, 2, 3])):
        x, y, w, h = a["bbox"]
        j = lambda v: v * rng.uniform(-0.12, 0.12)
        cat = a["category_id"] if rng.random() < 0.85 else rng.choice(cat_ids)
        dets.append({"image_id": a["image_id"], "category_id": cat,
                     "bbox": [round(x + j(w), 2), round(y + j(h), 2),
                              round(max(2.0, w + j(w)), 2), round(max(2.0, h + j(h)), 2)]})
for img in images:
    # background clutter, enough to exceed the 10-detection cap in places
    for _ in range(rng.randint(3, 14)):
        w = round(rng.uniform(5, 160), 2)
        h = round(rng.uniform(5, 160), 2)
        dets.append({"image_id": img["id"], "category_id": rng.choice(cat_ids[:2]),
                     "bbox": [round(rng.uniform(0, W - w), 2), round(rng.uniform(0, H - h), 2), w, h]})
for d, s in zip(dets, scores):
    d["score"] = s / 10000.0

gt = {"images": images, "annotations": annotations, "categories": categories}
with open("gt.json", "w") as f:
    json.dump(gt, f, indent=1)
with open("dets.json", "w") as f:
    json.dump(dets, f, indent=1)

coco = COCO("gt.json")
res = coco.loadRes("dets.json")
ev = COCOeval(coco, res, "bbox")
ev.evaluate()
ev.accumulate()
ev.summarize()
names = ["ap", "ap50", "ap75", "ap_small", "ap_medium", "ap_large",
         "ar1", "ar10", "ar100", "ar_small", "ar_medium", "ar_large"]
with open("expected.json", "w") as f:
    json.dump({"iou_type": "bbox", "stats": dict(zip(names, [float(v) for v in ev.stats]))}, f, indent=1)

# compressed RLE strings from the official mask API
masks = []
mrng = np.random.default_rng(7)
for k, (h, w) in enumerate([(4, 5), (17, 23), (64, 48), (120, 97), (1, 1), (33, 1)]):
    m = np.zeros((h, w), dtype=np.uint8)
    if k % 2 == 0:
        m = (mrng.random((h, w)) < 0.35).astype(np.uint8)
    else:
        m[h // 4: 3 * h // 4 + 1, w // 5: 4 * w // 5 + 1] = 1
    enc = mask_utils.encode(np.asfortranarray(m))
    bits = "".join(str(v) for v in m.flatten(order="C"))
    masks.append({
        "size": enc["size"], "counts": enc["counts"].decode("ascii"),
        "bits_row_major": bits, "area": int(mask_utils.area(enc)),
        "bbox": [float(v) for v in mask_utils.toBbox(enc)],
    })
pairs = []
for i in range(len(masks)):
    for j in range(len(masks)):
        if masks[i]["size"] == masks[j]["size"]:
            a = {"size": masks[i]["size"], "counts": masks[i]["counts"].encode()}
            b = {"size": masks[j]["size"], "counts": masks[j]["counts"].encode()}
            pairs.append({"a": i, "b": j, "iou": float(mask_utils.iou([a], [b], [0])[0][0])})
with open("rle_strings.json", "w") as f:
    json.dump({"masks": masks, "iou": pairs}, f, indent=1)
