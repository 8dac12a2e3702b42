"""OCR interchange format: one JSON document per image.

    {"image": "<name>", "boxes": [{"x0": int, "y0": int, "x1": int,
                                   "y1": int, "text": str, "conf": float}]}

OCR itself is an external producer; this module only reads and writes the
interchange files.
"""

from __future__ import annotations

import json
from pathlib import Path

from .match import OcrBox


def boxes_from_obj(obj: dict) -> list[OcrBox]:
    boxes = []
    for b in obj.get("boxes", []):
        boxes.append(OcrBox(rect=(int(b["x0"]), int(b["y0"]), int(b["x1"]), int(b["y1"])),
                            text=str(b["text"]), confidence=float(b.get("conf", 1.0))))
    return boxes


def load_ocr_file(path) -> list[OcrBox]:
    return boxes_from_obj(json.loads(Path(path).read_text()))


def save_ocr_file(path, image_name: str, boxes: list[OcrBox]) -> None:
    obj = {"image": image_name,
           "boxes": [{"x0": b.rect[0], "y0": b.rect[1], "x1": b.rect[2],
                      "y1": b.rect[3], "text": b.text, "conf": b.confidence}
                     for b in boxes]}
    Path(path).write_text(json.dumps(obj, indent=1))
