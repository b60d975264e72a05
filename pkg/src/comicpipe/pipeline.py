"""End-to-end orchestration of the visual-cue and description stages.

One image flows through: panel segmentation -> open-set detection ->
filtering -> panel assignment -> character identification and OCR per
panel -> context assembly -> prompt construction -> generation. Stages for
a single image run sequentially; callers parallelize across images.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends import (
    ClassifierClient,
    DetectorClient,
    ImagePayload,
    MllmClient,
    OcrClient,
    open_backend,
)
from .config import PipelineConfig
from .context import ComicContext, build_context, serialize_context
from .geometry import BoundingBox, Detection
from .identity import CharacterLabelRegistry, identify_characters
from .images import crop, encode_png
from .panelizer import Panel, RasterImage, extract_panels, reading_order
from .postprocess import assign_to_panels, filter_detections
from .prompting import (
    OverflowPolicy,
    PromptBundle,
    PromptMode,
    RunLog,
    TokenBudget,
    describe,
)
from .textflow import OcrResult, normalize_balloon

__all__ = ["PipelineBackends", "CueExtraction", "extract_cues", "describe_image"]

DETECT_LABELS = ["text", "character"]


@dataclass
class PipelineBackends:
    detector: DetectorClient
    classifier: ClassifierClient
    ocr: OcrClient
    mllm: MllmClient

    @classmethod
    def from_config(cls, config: PipelineConfig) -> "PipelineBackends":
        return cls(
            detector=open_backend(config.endpoints["detector"]),
            classifier=open_backend(config.endpoints["classifier"]),
            ocr=open_backend(config.endpoints["ocr"]),
            mllm=open_backend(config.endpoints["mllm"]),
        )


@dataclass
class CueExtraction:
    panel_boxes: list[BoundingBox]
    detections: list[Detection]
    panels: list[Panel]
    context: ComicContext
    context_json: str


def _crop_payload(raster: RasterImage, box: BoundingBox, image_id: str, tag: str) -> ImagePayload:
    region = crop(raster, box)
    return ImagePayload(
        data=encode_png(region),
        width=region.width,
        height=region.height,
        image_id=f"{image_id}#{tag}",
    )


def extract_cues(
    image_bytes: bytes,
    raster: RasterImage,
    image_id: str,
    config: PipelineConfig,
    backends: PipelineBackends,
    registry: CharacterLabelRegistry,
    series: str,
    dehyphenate: bool = False,
) -> CueExtraction:
    """Run the full visual-cue pipeline for one image."""
    payload = ImagePayload(
        data=image_bytes, width=raster.width, height=raster.height, image_id=image_id
    )

    boxes = reading_order(
        extract_panels(raster, config.panelizer), config.panelizer.row_tolerance
    )
    panels = [Panel(index=i, box=box) for i, box in enumerate(boxes)]

    raw = backends.detector.detect(
        payload,
        DETECT_LABELS,
        config.detector.text_threshold,
        config.detector.box_threshold,
    )
    detections = filter_detections(raw, raster.width, raster.height, config.detector)
    groups = assign_to_panels(panels, detections)

    enriched: list[Panel] = []
    for panel, group in zip(panels, groups):
        names: list[str] = []
        texts: list[str] = []
        char_crops = [
            (d.box, _crop_payload(raster, d.box, image_id, f"char{i}"))
            for i, d in enumerate(group)
            if d.label == "character"
        ]
        if char_crops:
            identified = identify_characters(
                char_crops, series, backends.classifier, registry
            )
            names = [ident.name for ident in identified]
        for i, det in enumerate(group):
            if det.label != "text":
                continue
            result = backends.ocr.ocr(
                _crop_payload(raster, det.box, image_id, f"text{i}")
            )
            balloon = normalize_balloon(
                OcrResult(box=det.box, lines=result.lines), dehyphenate=dehyphenate
            )
            if balloon:
                texts.append(balloon)
        enriched.append(
            Panel(index=panel.index, box=panel.box, characters=names, texts=texts)
        )

    context = build_context(enriched)
    return CueExtraction(
        panel_boxes=boxes,
        detections=detections,
        panels=enriched,
        context=context,
        context_json=serialize_context(context),
    )


def describe_image(
    image_bytes: bytes,
    raster: RasterImage,
    image_id: str,
    config: PipelineConfig,
    backends: PipelineBackends,
    mode: PromptMode,
    registry: CharacterLabelRegistry | None = None,
    series: str | None = None,
    on_overflow: OverflowPolicy = OverflowPolicy.FAIL,
    run_log: RunLog | None = None,
    dehyphenate: bool = False,
    want_context: bool = False,
) -> tuple[str, CueExtraction | None]:
    """Produce a description; optionally return the extracted cues.

    Base mode skips cue extraction entirely unless ``want_context`` asks for
    it. The token budget uses the backend-reported limit when one is known
    from an earlier call, otherwise the configured maximum.
    """
    cues = None
    if mode is PromptMode.ENHANCED or want_context:
        if registry is None or series is None:
            raise ValueError("enhanced mode requires a registry and series")
        cues = extract_cues(
            image_bytes, raster, image_id, config, backends, registry, series,
            dehyphenate=dehyphenate,
        )

    bundle = PromptBundle(
        mode=mode,
        context_json=cues.context_json if cues is not None else "{}",
    )
    budget = config.budget
    if backends.mllm.reported_token_limit is not None:
        budget = TokenBudget(
            max_tokens=backends.mllm.reported_token_limit,
            chars_per_token=config.budget.chars_per_token,
        )
    payload = ImagePayload(
        data=image_bytes, width=raster.width, height=raster.height, image_id=image_id
    )
    text = describe(
        payload,
        bundle,
        backends.mllm,
        budget=budget,
        on_overflow=on_overflow,
        image_id=image_id,
        run_log=run_log,
    )
    return text, cues
