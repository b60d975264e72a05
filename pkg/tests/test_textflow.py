from hypothesis import given, strategies as st

from comicpipe.geometry import BoundingBox
from comicpipe.textflow import OcrLine, OcrResult, normalize_balloon


def result_from(texts):
    lines = [
        OcrLine(text=t, box=BoundingBox(0, 30.0 * i, 100, 30.0 * i + 25)) for i, t in enumerate(texts)
    ]
    return OcrResult(box=BoundingBox(0, 0, 100, 30.0 * max(len(texts), 1)), lines=lines)


def test_hyphenation_preserved_verbatim():
    assert normalize_balloon(result_from(["IT ALL SEEMS", "SO ARBI-", "TRARY."])) == (
        "IT ALL SEEMS SO ARBI- TRARY."
    )


def test_empty_lines():
    assert normalize_balloon(result_from([])) == ""


def test_trim_and_collapse():
    assert normalize_balloon(result_from(["  HELLO  "])) == "HELLO"
    assert normalize_balloon(result_from(["A  B", " C"])) == "A B C"


def test_dehyphenate_option_fuses_lines():
    assert normalize_balloon(
        result_from(["IT ALL SEEMS", "SO ARBI-", "TRARY."]), dehyphenate=True
    ) == "IT ALL SEEMS SO ARBITRARY."


printable = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Cc")), max_size=30
)


@given(st.lists(printable, max_size=6))
def test_no_edge_whitespace_no_double_spaces(texts):
    out = normalize_balloon(result_from(texts))
    assert out == out.strip()
    assert "  " not in out


@given(st.lists(printable, max_size=6))
def test_idempotent_when_rewrapped(texts):
    once = normalize_balloon(result_from(texts))
    assert normalize_balloon(result_from([once])) == once


@given(st.lists(printable, max_size=6))
def test_only_whitespace_changes(texts):
    out = normalize_balloon(result_from(texts))
    assert "".join(out.split()) == "".join(" ".join(texts).split())
