"""Prompt construction for the description model, plus token-budget guarding.

Two prompt modes exist: ``base`` sends only the instruction text; ``enhanced``
appends a connector sentence and the serialized per-panel context. Because an
over-long prompt can silently push the appended context outside the model's
window, every send goes through an explicit budget check whose overflow
behaviour (fail, send anyway, or degrade to base) is chosen by the caller.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional, Protocol

from .errors import InvalidInputError, TokenBudgetExceededError

__all__ = [
    "BASE_PROMPT",
    "CONTEXT_CONNECTOR",
    "PromptMode",
    "PromptBundle",
    "TokenBudget",
    "OverflowPolicy",
    "RunLog",
    "render_prompt",
    "check_budget",
    "describe",
]

BASE_PROMPT = (
    "Your task is to write a text description for each panel of a comic strip. "
    "A comic strip is a sequence of drawings that tell a story using humor, "
    "satire, or irony. Each panel shows a scene with the characters, objects, "
    "actions, and dialogues. Your description should include the following "
    "elements:The number of panels in the comic strip.\n"
    "The names and appearances of the characters in each panel.\n"
    "The objects and background details in each panel.\n"
    "The actions and expressions of the characters in each panel.\n"
    "The dialogues or captions of the characters in each panel, using "
    "quotation marks or parentheses."
)

CONTEXT_CONNECTOR = (
    "Use the information given below to describe the characters and their "
    "dialogues and use your own knowledge to describe the other elements"
)


class PromptMode(str, Enum):
    BASE = "base"
    ENHANCED = "enhanced"


class OverflowPolicy(str, Enum):
    FAIL = "fail"
    SEND = "send"
    DEGRADE = "degrade"


@dataclass(frozen=True)
class PromptBundle:
    mode: PromptMode
    context_json: str = "{}"
    base: str = BASE_PROMPT
    connector: str = CONTEXT_CONNECTOR


@dataclass(frozen=True)
class TokenBudget:
    """Character-heuristic token budget; the backend's tokenizer is unknown here."""

    max_tokens: int = 4096
    chars_per_token: float = 4.0

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise InvalidInputError(f"max_tokens must be positive, got {self.max_tokens}")
        if self.chars_per_token <= 0:
            raise InvalidInputError(
                f"chars_per_token must be positive, got {self.chars_per_token}"
            )


class MllmBackend(Protocol):
    def generate(self, image, prompt: str) -> tuple[str, Optional[int]]:
        """Return (generated text, optional token limit reported by the backend)."""
        ...


def render_prompt(bundle: PromptBundle) -> str:
    """Base mode returns the instruction text alone; enhanced appends
    connector and context, each on a new line."""
    if bundle.mode is PromptMode.BASE:
        return bundle.base
    return f"{bundle.base}\n{bundle.connector}\n{bundle.context_json}"


def check_budget(prompt: str, budget: TokenBudget) -> tuple[bool, int]:
    """Estimate the prompt's token count and whether it fits the budget."""
    estimated = math.ceil(len(prompt) / budget.chars_per_token)
    return estimated <= budget.max_tokens, estimated


class RunLog:
    """Append-only JSON-lines log of describe calls.

    Records are appended atomically per call (single write under a lock), so
    concurrent describe calls from one process never interleave lines.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def record(
        self,
        image_id: str,
        mode: PromptMode,
        prompt: str,
        estimated_tokens: int,
        response: str,
    ) -> None:
        entry = {
            "image_id": image_id,
            "mode": mode.value,
            "prompt_sha256": hashlib.sha256(prompt.encode("utf-8")).hexdigest(),
            "estimated_tokens": estimated_tokens,
            "response": response,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        line = json.dumps(entry, ensure_ascii=False) + "\n"
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
                os.fsync(fh.fileno())


def describe(
    image,
    bundle: PromptBundle,
    mllm: MllmBackend,
    budget: TokenBudget | None = None,
    on_overflow: OverflowPolicy = OverflowPolicy.FAIL,
    image_id: str = "",
    run_log: RunLog | None = None,
) -> str:
    """Render the prompt, apply the overflow policy, and call the backend.

    Overflow handling: ``fail`` raises; ``send`` transmits the over-budget
    prompt unchanged; ``degrade`` falls back to the base prompt (which is
    assumed to fit). The backend's text is returned verbatim.
    """
    budget = budget or TokenBudget()
    prompt = render_prompt(bundle)
    fits, estimated = check_budget(prompt, budget)
    mode = bundle.mode
    if not fits:
        if on_overflow is OverflowPolicy.FAIL:
            raise TokenBudgetExceededError(
                f"prompt estimated at {estimated} tokens exceeds budget of "
                f"{budget.max_tokens} (policy: fail)"
            )
        if on_overflow is OverflowPolicy.DEGRADE and bundle.mode is PromptMode.ENHANCED:
            mode = PromptMode.BASE
            prompt = render_prompt(PromptBundle(mode=mode, base=bundle.base))
            _, estimated = check_budget(prompt, budget)
    text, _reported_limit = mllm.generate(image, prompt)
    if run_log is not None:
        run_log.record(image_id, mode, prompt, estimated, text)
    return text
