import json
from pathlib import Path

import pytest
from PIL import Image

from comicpipe.cli import main
from comicpipe.geometry import BoundingBox, iou
from comicpipe.synthetic import make_strip


@pytest.fixture()
def strip_png(tmp_path):
    strip = make_strip(1)
    path = tmp_path / "strip.png"
    Image.fromarray(strip.image.pixels).save(path)
    return path, strip


def fixture_config(dilbert_dir, tmp_path, budget=None, mllm_record=None):
    """Config pointing at the checked-in mock fixture, with optional tweaks."""
    fixture = str(dilbert_dir / "backends.fixture.json")
    endpoints = {role: {"url": f"mock:{fixture}"} for role in ("detector", "classifier", "ocr", "mllm")}
    if mllm_record:
        endpoints["mllm"]["record"] = str(mllm_record)
    config = {"endpoints": endpoints, "series": "dilbert"}
    if budget:
        config["budget"] = budget
    path = tmp_path / "config.json"
    path.write_text(json.dumps(config), encoding="utf-8")
    return path


class TestPanels:
    def test_three_panel_synthetic(self, runner, tmp_path):
        strip = make_strip(4)
        path = tmp_path / "s.png"
        Image.fromarray(strip.image.pixels).save(path)
        result = runner.invoke(main, ["panels", str(path)])
        assert result.exit_code == 0, result.output
        boxes = [BoundingBox(*b) for b in json.loads(result.output)["panels"]]
        assert len(boxes) == len(strip.panels)
        for got, want in zip(boxes, strip.panels):
            assert iou(got, want) >= 0.9

    def test_unreadable_file_exits_2(self, runner, tmp_path):
        bogus = tmp_path / "not_an_image.png"
        bogus.write_bytes(b"definitely not a png")
        result = runner.invoke(main, ["panels", str(bogus)])
        assert result.exit_code == 2
        assert "error" in result.stderr

    def test_missing_file_exits_2(self, runner, tmp_path):
        result = runner.invoke(main, ["panels", str(tmp_path / "absent.png")])
        assert result.exit_code == 2

    def test_min_area_fallback(self, runner, strip_png):
        path, strip = strip_png
        result = runner.invoke(main, ["panels", str(path), "--min-area-frac", "0.5"])
        assert result.exit_code == 0
        boxes = json.loads(result.output)["panels"]
        assert boxes == [[0.0, 0.0, float(strip.image.width), float(strip.image.height)]]


class TestDetect:
    def test_fixture_detections(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(main, ["detect", str(image), "--config", str(config)])
        assert result.exit_code == 0, result.stderr
        out = json.loads(result.output)
        assert out["image_id"] == "dilbert_standin"
        labels = [d["label"] for d in out["detections"]]
        assert labels.count("character") == 5
        assert labels.count("text") == 4
        confs = [d["confidence"] for d in out["detections"]]
        assert confs == sorted(confs, reverse=True)


class TestIdentify:
    def test_fixture_names(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main, ["identify", str(image), "--series", "dilbert", "--config", str(config)]
        )
        assert result.exit_code == 0, result.stderr
        names = [c["name"] for c in json.loads(result.output)["characters"]]
        assert sorted(names) == ["the boss", "the boss", "wally", "wally", "wally"]

    def test_unknown_series_exits_1(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main, ["identify", str(image), "--series", "calvin_and_hobbes", "--config", str(config)]
        )
        assert result.exit_code == 1
        assert "not in registry" in result.stderr


class TestOcr:
    def test_fixture_texts(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(main, ["ocr", str(image), "--config", str(config)])
        assert result.exit_code == 0, result.stderr
        texts = [t["text"] for t in json.loads(result.output)["texts"]]
        assert "IT ALL SEEMS SO ARBI- TRARY." in texts
        assert "I DO" in texts

    def test_dehyphenate_flag(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main, ["ocr", str(image), "--dehyphenate", "--config", str(config)]
        )
        texts = [t["text"] for t in json.loads(result.output)["texts"]]
        assert "IT ALL SEEMS SO ARBITRARY." in texts


class TestContext:
    def test_stdout_matches_golden(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main, ["context", str(image), "--series", "dilbert", "--config", str(config)]
        )
        assert result.exit_code == 0, result.stderr
        golden = (dilbert_dir / "golden.context.json").read_text(encoding="utf-8")
        assert result.output == golden + "\n"

    def test_out_file(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        out = tmp_path / "ctx.json"
        result = runner.invoke(
            main,
            ["context", str(image), "--series", "dilbert", "--config", str(config),
             "--out", str(out)],
        )
        assert result.exit_code == 0
        golden = (dilbert_dir / "golden.context.json").read_text(encoding="utf-8")
        assert out.read_text(encoding="utf-8") == golden


class TestDescribe:
    def test_enhanced_matches_case2(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        ctx_out = tmp_path / "ctx.json"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "enhanced", "--config", str(config),
             "--context-out", str(ctx_out), "--no-run-log"],
        )
        assert result.exit_code == 0, result.stderr
        golden = (dilbert_dir / "golden.case2.txt").read_text(encoding="utf-8")
        assert result.output == golden
        assert ctx_out.read_bytes() == (dilbert_dir / "golden.context.json").read_bytes()

    def test_base_matches_case1_and_sends_exactly_p1(self, runner, dilbert_dir, tmp_path):
        from comicpipe.prompting import BASE_PROMPT

        record = tmp_path / "mllm.jsonl"
        config = fixture_config(dilbert_dir, tmp_path, mllm_record=record)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "base", "--config", str(config), "--no-run-log"],
        )
        assert result.exit_code == 0, result.stderr
        golden = (dilbert_dir / "golden.case1.txt").read_text(encoding="utf-8")
        assert result.output == golden
        recorded = [json.loads(line) for line in record.read_text().splitlines()]
        assert len(recorded) == 1
        assert recorded[0]["body"]["prompt"] == BASE_PROMPT

    def test_unknown_series_exits_1(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "enhanced", "--series", "nope",
             "--config", str(config), "--no-run-log"],
        )
        assert result.exit_code == 1
        assert "not in registry" in result.stderr

    def test_overflow_fail_exits_4(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path, budget={"max_tokens": 200})
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "enhanced", "--config", str(config),
             "--on-overflow", "fail", "--no-run-log"],
        )
        assert result.exit_code == 4
        assert "exceeds budget" in result.stderr

    def test_overflow_degrade_sends_base_prompt(self, runner, dilbert_dir, tmp_path):
        from comicpipe.prompting import BASE_PROMPT

        record = tmp_path / "mllm.jsonl"
        config = fixture_config(
            dilbert_dir, tmp_path, budget={"max_tokens": 200}, mllm_record=record
        )
        image = dilbert_dir / "dilbert_standin.png"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "enhanced", "--config", str(config),
             "--on-overflow", "degrade", "--no-run-log"],
        )
        assert result.exit_code == 0, result.stderr
        recorded = [json.loads(line) for line in record.read_text().splitlines()]
        assert recorded[-1]["body"]["prompt"] == BASE_PROMPT
        golden = (dilbert_dir / "golden.case1.txt").read_text(encoding="utf-8")
        assert result.output == golden

    def test_run_log_written(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        image = dilbert_dir / "dilbert_standin.png"
        log = tmp_path / "run.jsonl"
        result = runner.invoke(
            main,
            ["describe", str(image), "--mode", "base", "--config", str(config),
             "--run-log", str(log)],
        )
        assert result.exit_code == 0
        record = json.loads(log.read_text().splitlines()[0])
        assert record["image_id"] == "dilbert_standin"
        assert record["mode"] == "base"

    def test_batch_mode(self, runner, dilbert_dir, tmp_path):
        config = fixture_config(dilbert_dir, tmp_path)
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        out_dir = tmp_path / "out"
        (in_dir / "dilbert_standin.png").write_bytes(
            (dilbert_dir / "dilbert_standin.png").read_bytes()
        )
        result = runner.invoke(
            main,
            ["describe", "--input-dir", str(in_dir), "--out-dir", str(out_dir),
             "--mode", "enhanced", "--config", str(config), "--no-run-log"],
        )
        assert result.exit_code == 0, result.stderr
        desc = out_dir / "dilbert_standin.description.txt"
        ctx = out_dir / "dilbert_standin.context.json"
        golden = (dilbert_dir / "golden.case2.txt").read_text(encoding="utf-8")
        assert desc.read_text(encoding="utf-8") == golden
        assert ctx.read_bytes() == (dilbert_dir / "golden.context.json").read_bytes()


class TestEval:
    def test_detections_perfect(self, runner, tmp_path):
        gt = [{"image_id": "a", "boxes": [
            {"box": [0, 0, 10, 10], "label": "text"},
            {"box": [20, 0, 30, 10], "label": "character"},
        ]}]
        pred = [{"image_id": "a", "detections": [
            {"box": [0, 0, 10, 10], "label": "text", "confidence": 0.9},
            {"box": [20, 0, 30, 10], "label": "character", "confidence": 0.8},
        ]}]
        gt_path = tmp_path / "gt.json"
        pred_path = tmp_path / "pred.json"
        gt_path.write_text(json.dumps(gt))
        pred_path.write_text(json.dumps(pred))
        result = runner.invoke(
            main, ["eval", "detections", "--gt", str(gt_path), "--pred", str(pred_path)]
        )
        assert result.exit_code == 0, result.stderr
        report = json.loads(result.output)
        assert report["map"] == 1.0
        assert report["per_class_ap"] == {"character": 1.0, "text": 1.0}

    def test_detections_tp_fp_tp(self, runner, tmp_path):
        gt = [{"image_id": "a", "boxes": [
            {"box": [0, 0, 10, 10], "label": "text"},
            {"box": [100, 0, 110, 10], "label": "text"},
        ]}]
        pred = [{"image_id": "a", "detections": [
            {"box": [0, 0, 10, 10], "label": "text", "confidence": 0.9},
            {"box": [50, 50, 60, 60], "label": "text", "confidence": 0.8},
            {"box": [100, 0, 110, 10], "label": "text", "confidence": 0.7},
        ]}]
        gt_path, pred_path = tmp_path / "gt.json", tmp_path / "pred.json"
        gt_path.write_text(json.dumps(gt))
        pred_path.write_text(json.dumps(pred))
        result = runner.invoke(
            main, ["eval", "detections", "--gt", str(gt_path), "--pred", str(pred_path)]
        )
        report = json.loads(result.output)
        assert report["per_class_ap"]["text"] == pytest.approx(0.833333, abs=1e-6)

    def test_identity_hand_case(self, runner, tmp_path):
        gt_path, pred_path = tmp_path / "gt.json", tmp_path / "pred.json"
        gt_path.write_text(json.dumps({"labels": ["A", "A", "A", "B"]}))
        pred_path.write_text(json.dumps({"labels": ["A", "A", "A", "A"]}))
        result = runner.invoke(
            main, ["eval", "identity", "--gt", str(gt_path), "--pred", str(pred_path)]
        )
        assert result.exit_code == 0, result.stderr
        report = json.loads(result.output)
        assert report["f1"] == pytest.approx(0.642857, abs=1e-6)
        assert report["precision"] == pytest.approx(0.5625)
        assert report["recall"] == pytest.approx(0.75)
        assert report["per_class_support"] == {"A": 3, "B": 1}

    def test_table_output(self, runner, tmp_path):
        gt_path, pred_path = tmp_path / "gt.json", tmp_path / "pred.json"
        gt_path.write_text(json.dumps({"labels": ["A", "B"]}))
        pred_path.write_text(json.dumps({"labels": ["A", "B"]}))
        result = runner.invoke(
            main, ["eval", "identity", "--gt", str(gt_path), "--pred", str(pred_path), "--table"]
        )
        assert "weighted f1" in result.output


class TestGenSynthetic:
    def test_emits_corpus_with_ground_truth(self, runner, tmp_path):
        out = tmp_path / "corpus"
        result = runner.invoke(
            main, ["gen-synthetic", "--out", str(out), "--count", "5", "--seed", "3"]
        )
        assert result.exit_code == 0, result.stderr
        summary = json.loads(result.output)
        assert summary["images"] == 5
        images = sorted((out / "images").glob("*.png"))
        assert len(images) == 5
        records = json.loads((out / "panels_gt.json").read_text())
        assert len(records) == 5
        assert {r["image_id"] for r in records} == {p.stem for p in images}
        assert all(len(r["panels"]) >= 1 for r in records)


def test_version(runner):
    result = runner.invoke(main, ["--version"])
    assert result.exit_code == 0
    assert "comicpipe" in result.output
