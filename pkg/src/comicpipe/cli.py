"""Command-line interface.

Data goes to stdout, diagnostics to stderr. Exit codes: 0 success,
1 internal error, 2 image decode failure, 3 backend unavailable or broken,
4 prompt over token budget under the fail policy.
"""

from __future__ import annotations

import concurrent.futures
import json
import os
import sys
import tempfile
import traceback
from pathlib import Path

import click

from . import __version__
from .config import PipelineConfig, load_config
from .errors import (
    BackendError,
    ComicPipeError,
    ImageDecodeError,
    TokenBudgetExceededError,
)
from .evaluation import (
    load_annotations,
    load_predictions,
    mean_average_precision,
    weighted_prf,
    EvalReport,
)
from .geometry import BoundingBox
from .panelizer import PanelizerConfig, extract_panels, reading_order
from .pipeline import DETECT_LABELS, PipelineBackends, extract_cues, describe_image
from .postprocess import filter_detections
from .prompting import OverflowPolicy, PromptMode, RunLog
from .synthetic import make_corpus
from .images import encode_png, load_image

EXIT_INTERNAL = 1
EXIT_DECODE = 2
EXIT_BACKEND = 3
EXIT_OVERFLOW = 4


def _fail(exc: BaseException) -> None:
    if isinstance(exc, ImageDecodeError):
        code = EXIT_DECODE
    elif isinstance(exc, BackendError):
        code = EXIT_BACKEND
    elif isinstance(exc, TokenBudgetExceededError):
        code = EXIT_OVERFLOW
    elif isinstance(exc, (ComicPipeError, click.ClickException)):
        code = EXIT_INTERNAL
    else:
        traceback.print_exc()
        code = EXIT_INTERNAL
    click.echo(f"error: {exc}", err=True)
    sys.exit(code)


def _atomic_write(path: Path, data: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        _atomic_write(Path(out), text)
    else:
        click.echo(text)


def _load_pipeline(config_path: str | None) -> PipelineConfig:
    return load_config(config_path)


def _panelizer_from_flags(config: PipelineConfig, binarize_delta, min_area_frac, merge_iou, row_tolerance) -> PanelizerConfig:
    base = config.panelizer
    return PanelizerConfig(
        binarize_delta=binarize_delta if binarize_delta is not None else base.binarize_delta,
        min_panel_area_frac=min_area_frac if min_area_frac is not None else base.min_panel_area_frac,
        merge_iou=merge_iou if merge_iou is not None else base.merge_iou,
        row_tolerance=row_tolerance if row_tolerance is not None else base.row_tolerance,
    )


config_option = click.option(
    "--config", "config_path", type=click.Path(), default=None,
    help="Pipeline config JSON (default: $COMICPIPE_CONFIG or ./comicpipe.json).",
)


@click.group()
@click.version_option(version=__version__, prog_name="comicpipe")
def main() -> None:
    """Comic-strip description pipeline."""


@main.command()
@click.argument("image_path", type=click.Path())
@config_option
@click.option("--binarize-delta", type=float, default=None)
@click.option("--min-area-frac", type=float, default=None)
@click.option("--merge-iou", type=float, default=None)
@click.option("--row-tolerance", type=float, default=None)
def panels(image_path, config_path, binarize_delta, min_area_frac, merge_iou, row_tolerance):
    """Segment an image into panel boxes, printed in reading order."""
    try:
        config = _load_pipeline(config_path)
        pconfig = _panelizer_from_flags(config, binarize_delta, min_area_frac, merge_iou, row_tolerance)
        _, raster = load_image(image_path)
        boxes = reading_order(extract_panels(raster, pconfig), pconfig.row_tolerance)
        click.echo(json.dumps({"panels": [b.as_list() for b in boxes]}))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("image_path", type=click.Path())
@config_option
def detect(image_path, config_path):
    """Detect text and character boxes (filtered), as a predictions record."""
    try:
        config = _load_pipeline(config_path)
        backends = PipelineBackends.from_config(config)
        data, raster = load_image(image_path)
        from .backends import ImagePayload

        payload = ImagePayload(
            data=data, width=raster.width, height=raster.height,
            image_id=Path(image_path).stem,
        )
        raw = backends.detector.detect(
            payload, DETECT_LABELS,
            config.detector.text_threshold, config.detector.box_threshold,
        )
        kept = filter_detections(raw, raster.width, raster.height, config.detector)
        click.echo(json.dumps({
            "image_id": payload.image_id,
            "detections": [
                {"box": d.box.as_list(), "label": d.label, "confidence": d.confidence}
                for d in kept
            ],
        }))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("image_path", type=click.Path())
@click.option("--series", required=True, help="Comic series key in the registry.")
@click.option("--min-score", type=float, default=0.0, show_default=True)
@config_option
def identify(image_path, series, min_score, config_path):
    """Detect characters and identify them against the series registry."""
    try:
        config = _load_pipeline(config_path)
        backends = PipelineBackends.from_config(config)
        registry = config.load_registry()
        data, raster = load_image(image_path)
        from .backends import ImagePayload
        from .identity import identify_characters
        from .images import crop

        image_id = Path(image_path).stem
        payload = ImagePayload(data=data, width=raster.width, height=raster.height, image_id=image_id)
        raw = backends.detector.detect(
            payload, DETECT_LABELS,
            config.detector.text_threshold, config.detector.box_threshold,
        )
        kept = filter_detections(raw, raster.width, raster.height, config.detector)
        crops = []
        for i, det in enumerate(d for d in kept if d.label == "character"):
            region = crop(raster, det.box)
            crops.append((det.box, ImagePayload(
                data=encode_png(region), width=region.width, height=region.height,
                image_id=f"{image_id}#char{i}",
            )))
        identified = identify_characters(crops, series, backends.classifier, registry, min_score)
        click.echo(json.dumps({
            "image_id": image_id,
            "characters": [
                {"name": c.name, "score": c.score, "box": c.box.as_list()}
                for c in identified
            ],
        }, ensure_ascii=False))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("image_path", type=click.Path())
@click.option("--dehyphenate", is_flag=True, help="Fuse hyphenated OCR line breaks.")
@config_option
def ocr(image_path, dehyphenate, config_path):
    """OCR the detected text boxes into normalized dialogue strings."""
    try:
        config = _load_pipeline(config_path)
        backends = PipelineBackends.from_config(config)
        data, raster = load_image(image_path)
        from .backends import ImagePayload
        from .images import crop
        from .textflow import OcrResult, normalize_balloon

        image_id = Path(image_path).stem
        payload = ImagePayload(data=data, width=raster.width, height=raster.height, image_id=image_id)
        raw = backends.detector.detect(
            payload, DETECT_LABELS,
            config.detector.text_threshold, config.detector.box_threshold,
        )
        kept = filter_detections(raw, raster.width, raster.height, config.detector)
        texts = []
        for i, det in enumerate(d for d in kept if d.label == "text"):
            region = crop(raster, det.box)
            result = backends.ocr.ocr(ImagePayload(
                data=encode_png(region), width=region.width, height=region.height,
                image_id=f"{image_id}#text{i}",
            ))
            balloon = normalize_balloon(
                OcrResult(box=det.box, lines=result.lines), dehyphenate=dehyphenate
            )
            texts.append({"box": det.box.as_list(), "text": balloon})
        click.echo(json.dumps({"image_id": image_id, "texts": texts}, ensure_ascii=False))
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("image_path", type=click.Path())
@click.option("--series", default=None, help="Comic series key (overrides config).")
@click.option("--out", "out_path", type=click.Path(), default=None, help="Write context JSON here instead of stdout.")
@click.option("--dehyphenate", is_flag=True)
@config_option
def context(image_path, series, out_path, dehyphenate, config_path):
    """Run the full visual-cue pipeline and emit the per-panel context JSON."""
    try:
        config = _load_pipeline(config_path)
        series = series or config.series
        if not series:
            raise click.ClickException("--series is required (or set 'series' in the config)")
        backends = PipelineBackends.from_config(config)
        registry = config.load_registry()
        data, raster = load_image(image_path)
        cues = extract_cues(
            data, raster, Path(image_path).stem, config, backends, registry, series,
            dehyphenate=dehyphenate,
        )
        _emit(cues.context_json, out_path)
    except Exception as exc:
        _fail(exc)


@main.command()
@click.argument("image_path", type=click.Path(), required=False)
@click.option("--series", default=None, help="Comic series key (overrides config).")
@click.option("--mode", type=click.Choice(["base", "enhanced"]), default="enhanced", show_default=True)
@click.option("--context-out", type=click.Path(), default=None, help="Also write the context JSON here.")
@click.option("--on-overflow", type=click.Choice(["fail", "send", "degrade"]), default="fail", show_default=True)
@click.option("--run-log", "run_log_path", type=click.Path(), default="comicpipe-run.jsonl", show_default=True)
@click.option("--no-run-log", is_flag=True, help="Disable the run log.")
@click.option("--dehyphenate", is_flag=True)
@click.option("--input-dir", type=click.Path(), default=None, help="Batch mode: process every image in this directory.")
@click.option("--out-dir", type=click.Path(), default=None, help="Batch mode: output directory.")
@click.option("--jobs", type=int, default=1, show_default=True, help="Batch mode: parallel images.")
@config_option
def describe(image_path, series, mode, context_out, on_overflow, run_log_path,
             no_run_log, dehyphenate, input_dir, out_dir, jobs, config_path):
    """Describe a comic strip via the configured multimodal model.

    Single-image mode prints the description to stdout. Batch mode
    (--input-dir/--out-dir) writes <stem>.description.txt and
    <stem>.context.json per image, in lexicographic filename order.
    """
    try:
        config = _load_pipeline(config_path)
        series = series or config.series
        prompt_mode = PromptMode(mode)
        policy = OverflowPolicy(on_overflow)
        run_log = None if no_run_log else RunLog(run_log_path)
        registry = config.load_registry()
        if prompt_mode is PromptMode.ENHANCED and not series:
            raise click.ClickException("--series is required in enhanced mode")

        if input_dir:
            if not out_dir:
                raise click.ClickException("--out-dir is required with --input-dir")
            _describe_batch(
                config, registry, series, prompt_mode, policy, run_log,
                dehyphenate, Path(input_dir), Path(out_dir), jobs,
            )
            return

        if not image_path:
            raise click.ClickException("IMAGE_PATH or --input-dir is required")
        backends = PipelineBackends.from_config(config)
        data, raster = load_image(image_path)
        text, cues = describe_image(
            data, raster, Path(image_path).stem, config, backends, prompt_mode,
            registry=registry, series=series, on_overflow=policy, run_log=run_log,
            dehyphenate=dehyphenate, want_context=context_out is not None,
        )
        if context_out and cues is not None:
            _atomic_write(Path(context_out), cues.context_json)
        click.echo(text)
    except Exception as exc:
        _fail(exc)


def _describe_batch(config, registry, series, prompt_mode, policy, run_log,
                    dehyphenate, input_dir: Path, out_dir: Path, jobs: int) -> None:
    suffixes = {".png", ".jpg", ".jpeg"}
    images = sorted(p for p in input_dir.iterdir() if p.suffix.lower() in suffixes)
    if not images:
        raise click.ClickException(f"no images found in {input_dir}")
    out_dir.mkdir(parents=True, exist_ok=True)

    def process(path: Path) -> str:
        backends = PipelineBackends.from_config(config)
        data, raster = load_image(path)
        text, cues = describe_image(
            data, raster, path.stem, config, backends, prompt_mode,
            registry=registry, series=series, on_overflow=policy, run_log=run_log,
            dehyphenate=dehyphenate, want_context=True,
        )
        _atomic_write(out_dir / f"{path.stem}.description.txt", text)
        if cues is not None:
            _atomic_write(out_dir / f"{path.stem}.context.json", cues.context_json)
        return path.stem

    if jobs <= 1:
        for path in images:
            process(path)
            click.echo(f"done {path.name}", err=True)
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(process, path): path for path in images}
            for future in concurrent.futures.as_completed(futures):
                future.result()
                click.echo(f"done {futures[future].name}", err=True)


@main.group(name="eval")
def eval_group() -> None:
    """Evaluate detection or identification output against ground truth."""


def _print_report(report: EvalReport, as_table: bool) -> None:
    if as_table:
        click.echo(report.to_table())
    else:
        click.echo(json.dumps(report.to_dict(), ensure_ascii=False))


@eval_group.command(name="detections")
@click.option("--gt", "gt_path", type=click.Path(), required=True, help="annotations.json")
@click.option("--pred", "pred_path", type=click.Path(), required=True, help="predictions.json")
@click.option("--iou", "iou_threshold", type=float, default=0.5, show_default=True)
@click.option("--table", is_flag=True, help="Plain-text table instead of JSON.")
def eval_detections(gt_path, pred_path, iou_threshold, table):
    """Per-class average precision and mAP at the given IoU threshold."""
    try:
        annotations = load_annotations(gt_path)
        predictions = load_predictions(pred_path)
        report = mean_average_precision(annotations, predictions, iou_threshold)
        _print_report(report, table)
    except Exception as exc:
        _fail(exc)


@eval_group.command(name="identity")
@click.option("--gt", "gt_path", type=click.Path(), required=True, help='JSON {"labels": [...]}')
@click.option("--pred", "pred_path", type=click.Path(), required=True, help='JSON {"labels": [...]}')
@click.option("--table", is_flag=True)
def eval_identity(gt_path, pred_path, table):
    """Support-weighted precision/recall/F1 over aligned label lists."""
    try:
        gt_labels = _load_labels(gt_path)
        pred_labels = _load_labels(pred_path)
        precision, recall, f1 = weighted_prf(gt_labels, pred_labels)
        support: dict[str, int] = {}
        for label in gt_labels:
            support[label] = support.get(label, 0) + 1
        report = EvalReport(
            precision=precision, recall=recall, f1=f1, per_class_support=support
        )
        _print_report(report, table)
    except Exception as exc:
        _fail(exc)


def _load_labels(path: str) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if isinstance(data, dict) and "labels" in data:
        return [str(x) for x in data["labels"]]
    if isinstance(data, list):
        return [str(x) for x in data]
    raise ComicPipeError(f'{path}: expected {{"labels": [...]}} or a JSON array')


@main.command(name="gen-synthetic")
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--count", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
def gen_synthetic(out_dir, count, seed):
    """Emit the synthetic panel corpus with its ground truth.

    Writes images/<id>.png plus panels_gt.json mapping each image to its
    drawn panel rectangles in reading order.
    """
    try:
        out = Path(out_dir)
        (out / "images").mkdir(parents=True, exist_ok=True)
        records = []
        for strip in make_corpus(count=count, seed=seed):
            png = encode_png(strip.image)
            (out / "images" / f"{strip.image_id}.png").write_bytes(png)
            records.append({
                "image_id": strip.image_id,
                "gutter": strip.gutter,
                "panels": [b.as_list() for b in strip.panels],
            })
        _atomic_write(out / "panels_gt.json", json.dumps(records, indent=2))
        click.echo(json.dumps({"images": len(records), "out": str(out)}))
    except Exception as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
