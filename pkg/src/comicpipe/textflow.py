"""Normalization of OCR output into per-balloon dialogue strings."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import BoundingBox

__all__ = ["OcrLine", "OcrResult", "normalize_balloon"]


@dataclass(frozen=True)
class OcrLine:
    text: str
    box: BoundingBox


@dataclass(frozen=True)
class OcrResult:
    """OCR output for one text box; lines ordered top-to-bottom."""

    box: BoundingBox
    lines: list[OcrLine] = field(default_factory=list)


def normalize_balloon(result: OcrResult, dehyphenate: bool = False) -> str:
    """Join a balloon's OCR lines into one dialogue string.

    Lines are joined with a single space, whitespace runs collapse to one
    space, and the ends are trimmed. Case is preserved exactly as the OCR
    produced it (comic lettering is typically upper-case). Hyphenation at
    line breaks is kept verbatim unless ``dehyphenate`` is set, in which case
    a line ending in ``-`` is fused with the following line.
    """
    texts = [line.text for line in result.lines]
    if dehyphenate:
        fused: list[str] = []
        for text in texts:
            if fused and fused[-1].rstrip().endswith("-"):
                fused[-1] = fused[-1].rstrip()[:-1] + text.lstrip()
            else:
                fused.append(text)
        texts = fused
    return " ".join(" ".join(texts).split())
