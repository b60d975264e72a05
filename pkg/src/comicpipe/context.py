"""Per-panel context assembly and its canonical JSON serialization.

The context is an ordered mapping from ``"panel 1"``, ``"panel 2"``, ... to
the character names and dialogue strings found in that panel. Serialization
is canonical and byte-stable so that prompts and golden files can be
compared exactly: insertion-ordered keys (so panel 10 never sorts before
panel 2), single-line output, one space after ``:`` and ``,``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .panelizer import Panel

__all__ = ["PanelContext", "ComicContext", "build_context", "serialize_context", "parse_context"]


@dataclass(frozen=True)
class PanelContext:
    panel_key: str
    characters: list[str] = field(default_factory=list)
    texts: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class ComicContext:
    panels: list[PanelContext] = field(default_factory=list)


def build_context(panels: list[Panel]) -> ComicContext:
    """Assemble the per-panel context from panels in reading order.

    Panel ``i`` (0-based) becomes key ``"panel i+1"``. Character names are
    deduplicated per panel, keeping first occurrence; dialogue strings are
    kept as-is. Panels without elements keep their key with empty lists so
    the true panel count survives into the prompt.
    """
    entries: list[PanelContext] = []
    for i, panel in enumerate(panels):
        entries.append(
            PanelContext(
                panel_key=f"panel {i + 1}",
                characters=list(dict.fromkeys(panel.characters)),
                texts=list(panel.texts),
            )
        )
    return ComicContext(entries)


def serialize_context(context: ComicContext) -> str:
    """Canonical single-line UTF-8 JSON; byte-stable across runs and platforms."""
    obj = {
        p.panel_key: {"characters": list(p.characters), "texts": list(p.texts)}
        for p in context.panels
    }
    return json.dumps(obj, ensure_ascii=False)


def parse_context(text: str) -> ComicContext:
    """Inverse of :func:`serialize_context` (object key order is preserved)."""
    obj = json.loads(text)
    panels = [
        PanelContext(panel_key=key, characters=list(val["characters"]), texts=list(val["texts"]))
        for key, val in obj.items()
    ]
    return ComicContext(panels)
