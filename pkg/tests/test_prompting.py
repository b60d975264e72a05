import json
import math

import pytest
from hypothesis import given, strategies as st

from comicpipe.errors import InvalidInputError, TokenBudgetExceededError
from comicpipe.prompting import (
    BASE_PROMPT,
    CONTEXT_CONNECTOR,
    OverflowPolicy,
    PromptBundle,
    PromptMode,
    RunLog,
    TokenBudget,
    check_budget,
    describe,
    render_prompt,
)


class EchoMllm:
    """Deterministic test double: echoes a prefix of the prompt."""

    def __init__(self):
        self.prompts = []

    def generate(self, image, prompt):
        self.prompts.append(prompt)
        return "DESC:" + prompt[:20], None


class TestRenderPrompt:
    def test_base_is_the_embedded_constant(self):
        assert render_prompt(PromptBundle(mode=PromptMode.BASE)) == BASE_PROMPT

    def test_base_ignores_context(self):
        a = PromptBundle(mode=PromptMode.BASE, context_json="{}")
        b = PromptBundle(mode=PromptMode.BASE, context_json='{"panel 1": {}}')
        assert render_prompt(a) == render_prompt(b)

    def test_enhanced_concatenation(self):
        out = render_prompt(PromptBundle(mode=PromptMode.ENHANCED, context_json="{}"))
        assert out == f"{BASE_PROMPT}\n{CONTEXT_CONNECTOR}\n{{}}"

    def test_enhanced_contains_all_three_parts(self):
        ctx = '{"panel 1": {"characters": ["wally"], "texts": []}}'
        out = render_prompt(PromptBundle(mode=PromptMode.ENHANCED, context_json=ctx))
        assert BASE_PROMPT in out
        assert CONTEXT_CONNECTOR in out
        assert ctx in out

    def test_base_prompt_wording_pinned(self):
        assert BASE_PROMPT.startswith(
            "Your task is to write a text description for each panel of a comic strip."
        )
        assert "elements:The number of panels in the comic strip." in BASE_PROMPT
        assert BASE_PROMPT.endswith("using quotation marks or parentheses.")
        assert CONTEXT_CONNECTOR == (
            "Use the information given below to describe the characters and their "
            "dialogues and use your own knowledge to describe the other elements"
        )


class TestCheckBudget:
    def test_fits(self):
        fits, estimate = check_budget("x" * 400, TokenBudget(max_tokens=200, chars_per_token=4.0))
        assert fits and estimate == 100

    def test_empty_prompt(self):
        fits, estimate = check_budget("", TokenBudget(max_tokens=10))
        assert fits and estimate == 0

    def test_does_not_fit(self):
        fits, estimate = check_budget("x" * 4000, TokenBudget(max_tokens=500, chars_per_token=4.0))
        assert not fits and estimate == 1000

    def test_rejects_bad_budget(self):
        with pytest.raises(InvalidInputError):
            TokenBudget(max_tokens=0)

    @given(st.text(max_size=300), st.text(max_size=300), st.integers(min_value=1, max_value=100))
    def test_monotone_in_prompt_length(self, a, b, max_tokens):
        budget = TokenBudget(max_tokens=max_tokens)
        short, long = sorted([a, b], key=len)
        if check_budget(long, budget)[0]:
            assert check_budget(short, budget)[0]

    @given(st.text(max_size=500))
    def test_estimate_is_ceiling(self, prompt):
        budget = TokenBudget(max_tokens=10, chars_per_token=4.0)
        assert check_budget(prompt, budget)[1] == math.ceil(len(prompt) / 4.0)


class TestDescribe:
    def test_echo_passthrough(self):
        mllm = EchoMllm()
        out = describe(b"img", PromptBundle(mode=PromptMode.BASE), mllm)
        assert out == "DESC:" + BASE_PROMPT[:20]

    def test_overflow_fail_raises(self):
        mllm = EchoMllm()
        budget = TokenBudget(max_tokens=5)
        with pytest.raises(TokenBudgetExceededError):
            describe(b"img", PromptBundle(mode=PromptMode.ENHANCED), mllm, budget=budget)
        assert mllm.prompts == []

    def test_overflow_send_transmits_unchanged(self):
        mllm = EchoMllm()
        bundle = PromptBundle(mode=PromptMode.ENHANCED, context_json='{"panel 1": {}}')
        describe(b"img", bundle, mllm, budget=TokenBudget(max_tokens=5),
                 on_overflow=OverflowPolicy.SEND)
        assert mllm.prompts == [render_prompt(bundle)]

    def test_overflow_degrade_sends_base_only(self):
        mllm = EchoMllm()
        bundle = PromptBundle(mode=PromptMode.ENHANCED, context_json='{"panel 1": {}}')
        describe(b"img", bundle, mllm, budget=TokenBudget(max_tokens=5),
                 on_overflow=OverflowPolicy.DEGRADE)
        assert mllm.prompts == [BASE_PROMPT]

    def test_run_log_record_shape(self, tmp_path):
        log_path = tmp_path / "run.jsonl"
        mllm = EchoMllm()
        describe(
            b"img",
            PromptBundle(mode=PromptMode.BASE),
            mllm,
            image_id="strip7",
            run_log=RunLog(log_path),
        )
        record = json.loads(log_path.read_text(encoding="utf-8").splitlines()[0])
        assert record["image_id"] == "strip7"
        assert record["mode"] == "base"
        assert len(record["prompt_sha256"]) == 64
        assert record["estimated_tokens"] == math.ceil(len(BASE_PROMPT) / 4.0)
        assert record["response"].startswith("DESC:")
        assert "timestamp" in record
