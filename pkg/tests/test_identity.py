import json

import pytest

from comicpipe.errors import BackendUnavailableError, InvalidInputError, SeriesNotFoundError
from comicpipe.geometry import BoundingBox
from comicpipe.identity import (
    UNKNOWN_CHARACTER,
    CharacterLabelRegistry,
    candidate_labels,
    identify_characters,
)


class StubClassifier:
    """Returns canned score lists and records every request."""

    def __init__(self, responses):
        self.responses = list(responses)
        self.requests = []

    def classify(self, crop, candidates):
        self.requests.append((crop, list(candidates)))
        scores = self.responses.pop(0)
        if isinstance(scores, Exception):
            raise scores
        return sorted(scores, key=lambda kv: (-kv[1], kv[0]))


@pytest.fixture()
def registry():
    return CharacterLabelRegistry(
        {
            "dilbert": {"wally": "a short bald man", "the boss": "a pointy-haired man"},
            "garfield": {"garfield": "a fat orange cat"},
            "peanuts": {"charlie brown": "a boy with a round head"},
        }
    )


class TestRegistry:
    def test_default_ships_three_series(self):
        registry = CharacterLabelRegistry.default()
        assert set(registry.series) == {"dilbert", "garfield", "peanuts"}
        assert "a fat orange cat" in dict(candidate_labels(registry, "garfield")).values()

    def test_rejects_empty_prompt(self):
        with pytest.raises(InvalidInputError):
            CharacterLabelRegistry({"x": {"someone": ""}})

    def test_from_file(self, tmp_path):
        path = tmp_path / "registry.json"
        path.write_text(json.dumps({"foo": {"a": "prompt a"}}), encoding="utf-8")
        registry = CharacterLabelRegistry.from_file(path)
        assert registry.names("foo") == ["a"]


class TestCandidateLabels:
    def test_only_requested_series(self, registry):
        labels = candidate_labels(registry, "garfield")
        assert labels == [("garfield", "a fat orange cat")]

    def test_single_pair(self, registry):
        assert len(candidate_labels(registry, "peanuts")) == 1

    def test_unknown_series(self, registry):
        with pytest.raises(SeriesNotFoundError):
            candidate_labels(registry, "calvin_and_hobbes")

    def test_insertion_order_preserved(self, registry):
        assert [n for n, _ in candidate_labels(registry, "dilbert")] == ["wally", "the boss"]


class TestIdentifyCharacters:
    def test_top_label_passthrough(self, registry):
        classifier = StubClassifier([[("wally", 0.8), ("the boss", 0.1)]])
        box = BoundingBox(0, 0, 10, 10)
        out = identify_characters([(box, b"crop")], "dilbert", classifier, registry, 0.3)
        assert out[0].name == "wally"
        assert out[0].score == 0.8
        assert out[0].box == box

    def test_below_min_score_becomes_unknown(self, registry):
        classifier = StubClassifier([[("wally", 0.1), ("the boss", 0.05)]])
        out = identify_characters(
            [(BoundingBox(0, 0, 1, 1), b"c")], "dilbert", classifier, registry, 0.3
        )
        assert out[0].name == UNKNOWN_CHARACTER

    def test_requests_carry_only_series_prompts(self, registry):
        classifier = StubClassifier([[("wally", 0.9), ("the boss", 0.2)]] * 2)
        crops = [(BoundingBox(0, 0, 1, 1), b"a"), (BoundingBox(1, 0, 2, 1), b"b")]
        identify_characters(crops, "dilbert", classifier, registry)
        for _crop, candidates in classifier.requests:
            assert [n for n, _ in candidates] == ["wally", "the boss"]

    def test_order_and_length_preserved(self, registry):
        classifier = StubClassifier(
            [
                [("the boss", 0.7), ("wally", 0.2)],
                [("wally", 0.6), ("the boss", 0.3)],
            ]
        )
        crops = [(BoundingBox(0, 0, 1, 1), b"a"), (BoundingBox(5, 0, 6, 1), b"b")]
        out = identify_characters(crops, "dilbert", classifier, registry)
        assert [c.name for c in out] == ["the boss", "wally"]

    def test_names_always_in_registry_or_unknown(self, registry):
        classifier = StubClassifier(
            [[("wally", 0.5), ("the boss", 0.5)], [("the boss", 0.0), ("wally", 0.0)]]
        )
        out = identify_characters(
            [(BoundingBox(0, 0, 1, 1), b"a"), (BoundingBox(2, 0, 3, 1), b"b")],
            "dilbert",
            classifier,
            registry,
            min_score=0.4,
        )
        valid = set(registry.names("dilbert")) | {UNKNOWN_CHARACTER}
        assert all(c.name in valid for c in out)

    def test_backend_error_carries_crop_index(self, registry):
        classifier = StubClassifier(
            [[("wally", 0.9), ("the boss", 0.1)], BackendUnavailableError("boom")]
        )
        with pytest.raises(BackendUnavailableError, match="crop 1"):
            identify_characters(
                [(BoundingBox(0, 0, 1, 1), b"a"), (BoundingBox(2, 0, 3, 1), b"b")],
                "dilbert",
                classifier,
                registry,
            )
