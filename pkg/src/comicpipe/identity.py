"""Per-series character label registry and zero-shot identification.

Each comic series keeps its own set of character labels so that lookalike
characters from different strips (two white dogs, say) are never offered to
the classifier at the same time. Labels map a character name to a short
natural-language description of their appearance, which is what the
zero-shot classifier scores crops against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Protocol

from .errors import BackendError, InvalidInputError, SeriesNotFoundError
from .geometry import BoundingBox

__all__ = [
    "UNKNOWN_CHARACTER",
    "CharacterLabelRegistry",
    "IdentifiedCharacter",
    "candidate_labels",
    "identify_characters",
]

UNKNOWN_CHARACTER = "unknown"


class ClassifierBackend(Protocol):
    def classify(self, crop, candidates: list[tuple[str, str]]) -> list[tuple[str, float]]:
        """Score a crop against (name, prompt) candidates; sorted by score descending."""
        ...


@dataclass(frozen=True)
class IdentifiedCharacter:
    name: str
    score: float
    box: BoundingBox


class CharacterLabelRegistry:
    """Series-namespaced map of character name -> descriptive prompt.

    The on-disk form is a JSON object ``{"<series>": {"<name>": "<prompt>"}}``
    with lowercase series keys. Insertion order of names within a series is
    preserved and defines the candidate order sent to the classifier.
    """

    def __init__(self, series_labels: dict[str, dict[str, str]]):
        for series, labels in series_labels.items():
            if not series:
                raise InvalidInputError("series key must be non-empty")
            for name, prompt in labels.items():
                if not name:
                    raise InvalidInputError(f"empty character name in series {series!r}")
                if not prompt:
                    raise InvalidInputError(
                        f"empty prompt for {name!r} in series {series!r}"
                    )
        self._series = {s: dict(labels) for s, labels in series_labels.items()}

    @classmethod
    def from_file(cls, path: str | Path) -> "CharacterLabelRegistry":
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise InvalidInputError(f"registry file {path} must hold a JSON object")
        return cls(data)

    @classmethod
    def default(cls) -> "CharacterLabelRegistry":
        """The registry shipped with the package (Dilbert, Garfield, Peanuts)."""
        text = resources.files("comicpipe").joinpath("data/registry.json").read_text("utf-8")
        return cls(json.loads(text))

    @property
    def series(self) -> list[str]:
        return list(self._series)

    def __contains__(self, series: str) -> bool:
        return series in self._series

    def names(self, series: str) -> list[str]:
        return [name for name, _ in candidate_labels(self, series)]


def candidate_labels(
    registry: CharacterLabelRegistry, series: str
) -> list[tuple[str, str]]:
    """Labels of one series only, in registry insertion order.

    Never mixes series: keeping each strip's candidate set separate is what
    prevents lookalike characters from other strips being offered at all.
    """
    try:
        labels = registry._series[series]
    except KeyError:
        known = ", ".join(sorted(registry._series)) or "<empty registry>"
        raise SeriesNotFoundError(
            f"series {series!r} not in registry (known: {known})"
        ) from None
    return list(labels.items())


def identify_characters(
    crops: list[tuple[BoundingBox, object]],
    series: str,
    classifier: ClassifierBackend,
    registry: CharacterLabelRegistry,
    min_score: float = 0.0,
) -> list[IdentifiedCharacter]:
    """Classify character crops against the series' candidate labels.

    Each crop yields the top-scoring candidate name, or ``"unknown"`` when the
    top score falls below ``min_score``. Output order matches input order.
    """
    candidates = candidate_labels(registry, series)
    results: list[IdentifiedCharacter] = []
    for index, (box, crop) in enumerate(crops):
        try:
            scores = classifier.classify(crop, candidates)
        except BackendError as exc:
            raise type(exc)(f"classifying crop {index}: {exc}") from exc
        name, score = scores[0]
        if score < min_score:
            name = UNKNOWN_CHARACTER
        results.append(IdentifiedCharacter(name=name, score=score, box=box))
    return results
