#!/usr/bin/env python3
"""Regenerate the Dilbert-style end-to-end fixture under tests/fixtures/dilbert/.

The strip image is a drawn stand-in (the real strip is copyrighted); the
detection boxes, classifier scores, OCR lines, and generated descriptions
are canned so the mock backends replay a fully deterministic pipeline run.
Run from the repo root after changing anything that affects request
fingerprints (crop encoding, wire bodies, the default registry).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

from comicpipe.backends import ImagePayload, request_fingerprint
from comicpipe.config import load_config
from comicpipe.geometry import BoundingBox
from comicpipe.identity import CharacterLabelRegistry, candidate_labels
from comicpipe.images import crop, encode_png
from comicpipe.panelizer import RasterImage, extract_panels
from comicpipe.prompting import BASE_PROMPT, PromptBundle, PromptMode, render_prompt

OUT = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "dilbert"

PANELS = [(10, 10, 290, 290), (310, 10, 590, 290), (610, 10, 890, 290)]

# Annotated elements: (box, label, confidence); characters ordered so panel 1
# reads wally then the boss, panel 3 reads the boss then wally.
ELEMENTS = [
    ((30, 30, 270, 120), "text", 0.80),
    ((40, 140, 120, 280), "character", 0.72),    # wally
    ((170, 140, 250, 280), "character", 0.68),   # the boss
    ((330, 30, 570, 120), "text", 0.78),
    ((390, 140, 470, 280), "character", 0.71),   # wally
    ((620, 30, 700, 90), "text", 0.76),          # "I DO"
    ((720, 35, 880, 130), "text", 0.77),
    ((640, 150, 720, 280), "character", 0.69),   # the boss
    ((760, 150, 840, 280), "character", 0.70),   # wally
]

WHO = {1: "wally", 2: "the boss", 4: "wally", 7: "the boss", 8: "wally"}

OCR_LINES = {
    0: ["PERFORMANCE REVIEWS ARE UNFAIR TO", "UNDERPERFORMING EMPLOYEES SUCH AS MYSELF."],
    3: [
        "I MEAN, WHO GETS TO DECIDE",
        "WHICH TYPES OF ABLENESS THE COMPANY WILL",
        "ACCOMMODATE AND WHICH ONES THEY WILL PUNISH?",
    ],
    5: ["I DO"],
    6: ["IT ALL SEEMS", "SO ARBI-", "TRARY."],
}

GOLDEN_CONTEXT = (
    '{"panel 1": {"characters": ["wally", "the boss"], "texts": ["PERFORMANCE '
    'REVIEWS ARE UNFAIR TO UNDERPERFORMING EMPLOYEES SUCH AS MYSELF."]}, '
    '"panel 2": {"characters": ["wally"], "texts": ["I MEAN, WHO GETS TO '
    'DECIDE WHICH TYPES OF ABLENESS THE COMPANY WILL ACCOMMODATE AND WHICH '
    'ONES THEY WILL PUNISH?"]}, "panel 3": {"characters": ["the boss", '
    '"wally"], "texts": ["I DO", "IT ALL SEEMS SO ARBI- TRARY."]}}'
)

CASE1 = """The comic strip consists of three panels.
Panel 1:
In the first panel, there are two men sitting at a table. One man is holding a cup of coffee, while the other man is holding a cup of tea. The man with the cup of coffee is saying, "I mean, I'm not saying I'm perfect, but I'm not a complete failure either." The man with the cup of tea responds, "I'm not sure which is worse, being a failure or being a success."
Panel 2:
In the second panel, the man with the cup of coffee is saying, "I'm not sure which is worse, being a failure or being a success." The man with the cup of tea responds, "I'm not sure which is worse, being a failure or being a success." The two men are sitting at a table, and there is a clock on the wall.
Panel 3:
In the third panel, the man with the cup of coffee is saying, "I mean, I'm not saying I'm perfect, but I'm not a complete failure either." The man with the cup of tea responds, "I'm not sure which is worse, being a failure or being a success." The two men are sitting at a table, and there is a clock on the wall.
In summary, the comic strip consists of three panels, each featuring two men sitting at a table and discussing their thoughts on success and failure. The men are holding cups of coffee and tea, and there is a clock on the wall in each panel. The dialogues in the panels are humorous and satirical, as the men express their confusion and uncertainty about the concept of success and failure."""

CASE2 = """The comic strip consists of three panels, each featuring a different scene and dialogue.
In the first panel, we see two characters, Wally and the Boss, standing in an office setting. Wally is holding a cup of coffee and expressing his frustration with the performance review system. He says, "PERFORMANCE REVIEWS ARE UNFAIR TO UNDERPERFORMING EMPLOYEES SUCH AS MYSELF."
In the second panel, Wally is shown alone, still holding his cup of coffee, and expressing his confusion about the company's decision-making process. He asks, "I MEAN, WHO GETS TO DECIDE WHICH TYPES OF ABLENESS THE COMPANY WILL ACCOMMODATE AND WHICH ONES THEY WILL PUNISH?"
In the third panel, Wally and the Boss are shown together, with the Boss responding to Wally's question. The Boss says, "I DO," and Wally adds, "IT ALL SEEMS SO ARBITRARY."
In summary, the comic strip features Wally, a frustrated employee, and the Boss, who is trying to explain the company's decision-making process. The dialogues highlight the challenges and complexities of performance reviews and the subjective nature of the company's decisions."""


def draw_strip() -> RasterImage:
    canvas = np.full((300, 900), 255, dtype=np.uint8)
    for x0, y0, x1, y1 in PANELS:
        canvas[y0:y1, x0:x1] = 205
        canvas[y0:y1, x0:x0 + 3] = 0
        canvas[y0:y1, x1 - 3:x1] = 0
        canvas[y0:y0 + 3, x0:x1] = 0
        canvas[y1 - 3:y1, x0:x1] = 0
    for idx, ((x0, y0, x1, y1), label, _conf) in enumerate(ELEMENTS):
        if label == "text":
            canvas[y0:y1, x0:x1] = 245              # balloon
            canvas[y0 + 8:y1 - 8:12, x0 + 8:x1 - 8] = 60  # lettering stripes
        else:
            canvas[y0:y1, x0:x1] = 150              # figure silhouette
            cy, cx = y0 + 18, (x0 + x1) // 2
            yy, xx = np.ogrid[:300, :900]
            canvas[(xx - cx) ** 2 + (yy - cy) ** 2 <= 14 ** 2] = 90  # head
        # Unique corner tag per element so every crop is byte-distinct.
        canvas[y0 + 2:y0 + 6, x0 + 2:x0 + 6 + 3 * idx] = 10 + 5 * idx
    return RasterImage(canvas)


def classify_scores(name: str, names: list[str]) -> list[dict]:
    rest = [n for n in names if n != name]
    scores = {name: 0.82 if name == "wally" else 0.78}
    for i, other in enumerate(rest):
        scores[other] = round(0.08 - 0.01 * i, 6)
    return [{"name": n, "score": scores[n]} for n in names]


def ocr_lines(texts: list[str], crop_w: int) -> list[dict]:
    lines = []
    y = 5.0
    for text in texts:
        lines.append({"text": text, "box": [5.0, y, float(crop_w - 5), y + 25.0]})
        y += 30.0
    return lines


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    raster = draw_strip()
    Image.fromarray(raster.pixels).save(OUT / "dilbert_standin.png")
    image_bytes = (OUT / "dilbert_standin.png").read_bytes()

    found = sorted(extract_panels(raster), key=lambda b: b.x_min)
    assert [b.as_list() for b in found] == [[float(v) for v in p] for p in PANELS], (
        "panelizer no longer reproduces the drawn panels: "
        + json.dumps([b.as_list() for b in found])
    )

    payload = ImagePayload(data=image_bytes, width=900, height=300)
    registry = CharacterLabelRegistry.default()
    candidates = candidate_labels(registry, "dilbert")
    names = [n for n, _ in candidates]

    fixture: dict[str, dict] = {}

    detect_body = {
        "image_b64": payload.b64,
        "labels": ["text", "character"],
        "text_threshold": 0.2,
        "box_threshold": 0.2,
    }
    fixture[request_fingerprint("/v1/detect", detect_body)] = {
        "detections": [
            {"box": [float(v) for v in box], "label": label, "confidence": conf}
            for box, label, conf in ELEMENTS
        ]
    }

    for idx, (box, label, _conf) in enumerate(ELEMENTS):
        region = crop(raster, BoundingBox.from_list(list(map(float, box))))
        crop_payload = ImagePayload(
            data=encode_png(region), width=region.width, height=region.height
        )
        if label == "character":
            body = {
                "image_b64": crop_payload.b64,
                "candidates": [{"name": n, "prompt": p} for n, p in candidates],
            }
            fixture[request_fingerprint("/v1/classify", body)] = {
                "scores": classify_scores(WHO[idx], names)
            }
        else:
            body = {"image_b64": crop_payload.b64}
            fixture[request_fingerprint("/v1/ocr", body)] = {
                "lines": ocr_lines(OCR_LINES[idx], region.width)
            }

    p1 = render_prompt(PromptBundle(mode=PromptMode.BASE))
    assert p1 == BASE_PROMPT
    p2 = render_prompt(
        PromptBundle(mode=PromptMode.ENHANCED, context_json=GOLDEN_CONTEXT)
    )
    for prompt, text in ((p1, CASE1), (p2, CASE2)):
        body = {"image_b64": payload.b64, "prompt": prompt}
        fixture[request_fingerprint("/v1/generate", body)] = {
            "text": text,
            "reported_token_limit": None,
        }

    (OUT / "backends.fixture.json").write_text(
        json.dumps(fixture, indent=1, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    (OUT / "golden.context.json").write_text(GOLDEN_CONTEXT, encoding="utf-8")
    (OUT / "golden.case1.txt").write_text(CASE1 + "\n", encoding="utf-8")
    (OUT / "golden.case2.txt").write_text(CASE2 + "\n", encoding="utf-8")
    (OUT / "golden.prompt_p2.txt").write_text(p2, encoding="utf-8")
    (OUT / "config.json").write_text(
        json.dumps(
            {
                "endpoints": {
                    role: {"url": "mock:backends.fixture.json"}
                    for role in ("detector", "classifier", "ocr", "mllm")
                },
                "series": "dilbert",
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )

    # Sanity: the full pipeline against the freshly written fixture must
    # reproduce the hand-transcribed context byte for byte.
    config = load_config(OUT / "config.json")
    from comicpipe.pipeline import PipelineBackends, extract_cues

    cues = extract_cues(
        image_bytes, raster, "dilbert_standin", config,
        PipelineBackends.from_config(config), registry, "dilbert",
    )
    if cues.context_json != GOLDEN_CONTEXT:
        print("pipeline context:", cues.context_json, file=sys.stderr)
        raise SystemExit("pipeline does not reproduce the golden context")
    print(f"wrote {len(fixture)} fixture entries to {OUT}")


if __name__ == "__main__":
    main()
