"""OCR provider seam, word-to-region grouping, and text cleanup."""

from __future__ import annotations

import string

import numpy as np
import pytest
import requests
from hypothesis import given
from hypothesis import strategies as st

from promocat import (
    Annotation,
    BBox,
    DistractorAnnotation,
    MockOcrProvider,
    OcrError,
    OcrWord,
    PostprocessConfig,
    RasterImage,
    RegionAnnotation,
    RemoteOcrProvider,
    apply_mask,
    group_words,
    levenshtein,
    postprocess,
    recognize,
    save_annotations,
)
from .reference import levenshtein_ref


def word(text, x0, y0, x1, y1):
    return OcrWord(text, BBox(x0, y0, x1, y1))


class TestOcrWord:
    def test_rejects_empty_text(self):
        with pytest.raises(ValueError):
            OcrWord("", BBox(0, 0, 1, 1))

    def test_rejects_bad_confidence(self):
        with pytest.raises(ValueError):
            OcrWord("x", BBox(0, 0, 1, 1), confidence=1.5)


def two_region_annotation() -> Annotation:
    regions = [
        RegionAnnotation(
            BBox(10, 10, 110, 40),
            "fresh milk",
            {0},
            [BBox(12, 14, 55, 30), BBox(60, 14, 105, 30)],
        ),
        RegionAnnotation(
            BBox(10, 60, 110, 90),
            "dark roast",
            {1},
            [BBox(12, 64, 55, 80), BBox(60, 64, 105, 80)],
        ),
    ]
    distractors = [DistractorAnnotation(BBox(160, 15, 195, 35), "9.99")]
    return Annotation("page_x", 200, 100, regions, distractors)


def ink_page(annotation: Annotation) -> RasterImage:
    """White page with dark ink at every annotated word box."""
    img = RasterImage.blank(annotation.page_width, annotation.page_height, image_id=annotation.image_id)
    boxes = [wb for r in annotation.regions for wb in r.word_boxes]
    boxes += [d.box for d in annotation.distractors]
    for b in boxes:
        img.pixels[int(b.y_min) : int(b.y_max), int(b.x_min) : int(b.x_max)] = (25, 25, 25)
    return img


class TestMockOcrProvider:
    def test_reads_all_words_from_unmasked_page(self):
        ann = two_region_annotation()
        provider = MockOcrProvider([ann])
        words = recognize(ink_page(ann), provider)
        assert [w.text for w in words] == ["fresh", "milk", "dark", "roast", "9.99"]

    def test_masked_words_disappear(self):
        """Only words whose box center keeps ink survive the mask."""
        ann = two_region_annotation()
        provider = MockOcrProvider([ann])
        masked = apply_mask(ink_page(ann), [ann.regions[0].box])
        words = recognize(masked, provider)
        assert [w.text for w in words] == ["fresh", "milk"]

    def test_unknown_image_id_raises(self):
        provider = MockOcrProvider([two_region_annotation()])
        with pytest.raises(OcrError, match="page_y"):
            provider.analyze(RasterImage.blank(10, 10, image_id="page_y"))

    def test_missing_ground_truth_file_raises(self, tmp_path):
        with pytest.raises(OcrError):
            MockOcrProvider(tmp_path / "absent.json")

    def test_loads_ground_truth_from_file(self, tmp_path):
        ann = two_region_annotation()
        path = tmp_path / "annotations.json"
        save_annotations([ann], path)
        words = recognize(ink_page(ann), MockOcrProvider(path))
        assert [w.text for w in words] == ["fresh", "milk", "dark", "roast", "9.99"]

    def test_paragraphs_rebuilt_from_surviving_words(self):
        """Words merge when their gaps sit within 1.8 x the median word
        height (28.8 px here): each region's row becomes one paragraph and
        the distractor stays its own, sorted top-to-bottom."""
        ann = two_region_annotation()
        result = MockOcrProvider([ann]).analyze(ink_page(ann))
        boxes = [(p.x_min, p.y_min, p.x_max, p.y_max) for p in result.paragraphs]
        assert boxes == [
            (12, 14, 105, 30),
            (160, 15, 195, 35),
            (12, 64, 105, 80),
        ]


class FakeResponse:
    def __init__(self, status_code=200, payload=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.text = text

    def json(self):
        if self._payload is None:
            raise ValueError("no JSON")
        return self._payload


class FakeSession:
    def __init__(self, response=None, error=None):
        self.response = response
        self.error = error
        self.calls = []

    def post(self, url, data=None, headers=None, timeout=None):
        self.calls.append({"url": url, "data": data, "headers": headers, "timeout": timeout})
        if self.error is not None:
            raise self.error
        return self.response


class TestRemoteOcrProvider:
    def make(self, session, api_key="secret"):
        provider = RemoteOcrProvider("https://ocr.example/analyze", api_key=api_key)
        provider._session = session
        return provider

    def test_parses_words_and_paragraphs(self):
        payload = {
            "words": [
                {"text": "milk", "box": [1, 2, 3, 4], "confidence": 0.75},
                {"text": "tea", "box": [5, 2, 7, 4]},
            ],
            "paragraphs": [[1, 2, 7, 4]],
        }
        session = FakeSession(FakeResponse(payload=payload))
        result = self.make(session).analyze(RasterImage.blank(8, 8))
        assert [w.text for w in result.words] == ["milk", "tea"]
        assert result.words[0].confidence == 0.75
        assert result.words[1].confidence == 1.0
        assert result.paragraphs == (BBox(1, 2, 7, 4),)

    def test_sends_png_with_bearer_auth(self):
        session = FakeSession(FakeResponse(payload={"words": []}))
        self.make(session).analyze(RasterImage.blank(8, 8))
        (call,) = session.calls
        assert call["url"] == "https://ocr.example/analyze"
        assert call["headers"]["Authorization"] == "Bearer secret"
        assert call["headers"]["Content-Type"] == "image/png"
        assert call["data"].startswith(b"\x89PNG")

    def test_no_auth_header_without_key(self):
        session = FakeSession(FakeResponse(payload={"words": []}))
        self.make(session, api_key=None).analyze(RasterImage.blank(8, 8))
        assert "Authorization" not in session.calls[0]["headers"]

    def test_transport_error_wrapped_with_endpoint(self):
        session = FakeSession(error=requests.ConnectionError("refused"))
        with pytest.raises(OcrError, match="ocr.example"):
            self.make(session).analyze(RasterImage.blank(8, 8))

    def test_http_error_status_reported(self):
        session = FakeSession(FakeResponse(status_code=503, text="overloaded"))
        with pytest.raises(OcrError, match="503"):
            self.make(session).analyze(RasterImage.blank(8, 8))

    def test_malformed_payload_raises(self):
        for payload in [{"nope": []}, {"words": [{"text": "x"}]}]:
            session = FakeSession(FakeResponse(payload=payload))
            with pytest.raises(OcrError, match="malformed"):
                self.make(session).analyze(RasterImage.blank(8, 8))

    def test_rejects_nonpositive_concurrency(self):
        with pytest.raises(ValueError):
            RemoteOcrProvider("https://x", max_in_flight=0)


class TestGroupWords:
    def test_words_assigned_by_center_and_read_in_order(self):
        regions = [BBox(0, 0, 100, 50), BBox(0, 60, 100, 110)]
        words = [
            word("two", 40, 5, 70, 15),
            word("one", 5, 6, 35, 16),
            word("below", 5, 30, 45, 40),
            word("lower", 10, 70, 50, 80),
            word("stray", 300, 300, 340, 310),
        ]
        grouped = group_words(words, regions)
        assert grouped == {0: "one two below", 1: "lower"}

    def test_every_region_present_even_when_empty(self):
        grouped = group_words([], [BBox(0, 0, 10, 10), BBox(20, 20, 30, 30)])
        assert grouped == {0: "", 1: ""}

    def test_first_containing_region_wins_on_overlap(self):
        regions = [BBox(0, 0, 50, 50), BBox(25, 0, 100, 50)]
        grouped = group_words([word("shared", 30, 10, 40, 20)], regions)
        assert grouped == {0: "shared", 1: ""}

    def test_slight_baseline_wobble_stays_one_line(self):
        """Words 10 px tall with 3 px of center wobble share a line
        (tolerance is half the median height)."""
        regions = [BBox(0, 0, 200, 40)]
        words = [
            word("a", 0, 10, 20, 20),
            word("b", 30, 13, 50, 23),
            word("c", 60, 9, 80, 19),
        ]
        assert group_words(words, regions) == {0: "a b c"}

    def test_clear_vertical_gap_starts_new_line(self):
        regions = [BBox(0, 0, 200, 60)]
        words = [
            word("top", 50, 5, 90, 15),
            word("bottom", 0, 30, 60, 40),
        ]
        assert group_words(words, regions) == {0: "top bottom"}


class TestLevenshtein:
    def test_classic_pairs(self):
        assert levenshtein("kitten", "sitting") == 3
        assert levenshtein("flaw", "lawn") == 2
        assert levenshtein("", "abc") == 3
        assert levenshtein("same", "same") == 0

    def test_matches_recursive_reference(self):
        rng = np.random.default_rng(13)
        alphabet = "abcde"
        for _ in range(200):
            a = "".join(rng.choice(list(alphabet), size=rng.integers(0, 8)))
            b = "".join(rng.choice(list(alphabet), size=rng.integers(0, 8)))
            assert levenshtein(a, b) == levenshtein_ref(a, b)

    @given(st.text(string.ascii_lowercase, max_size=8), st.text(string.ascii_lowercase, max_size=8))
    def test_metric_properties(self, a, b):
        d = levenshtein(a, b)
        assert d == levenshtein(b, a)
        assert (d == 0) == (a == b)
        assert d <= max(len(a), len(b))


class TestPostprocess:
    def test_garbled_promotion_line(self):
        cfg = PostprocessConfig(dictionary=frozenset({"chocolate", "hazelnut"}))
        assert postprocess("CH0COLATE @@ 2x100g", cfg) == "chocolate 2x100g"

    def test_lowercases_and_collapses_whitespace(self):
        assert postprocess("  Fresh\t MILK \n") == "fresh milk"

    def test_keeps_listed_punctuation_only(self):
        assert postprocess("price: 9,99€ (was 12.50!)") == "price 9,99€ was 12.50"

    def test_tokens_of_only_junk_disappear(self):
        assert postprocess("milk *** tea") == "milk tea"

    def test_correction_requires_minimum_length(self):
        cfg = PostprocessConfig(dictionary=frozenset({"tea"}))
        assert postprocess("tba", cfg) == "tba"

    def test_correction_skips_mostly_digit_tokens(self):
        cfg = PostprocessConfig(dictionary=frozenset({"100g"}))
        assert postprocess("100x", cfg) == "100x"

    def test_ambiguous_correction_left_alone(self):
        cfg = PostprocessConfig(dictionary=frozenset({"beans", "jeans"}))
        assert postprocess("aeans", cfg) == "aeans"

    def test_distance_two_not_corrected(self):
        cfg = PostprocessConfig(dictionary=frozenset({"chocolate"}))
        assert postprocess("ch0colaze", cfg) == "ch0colaze"

    def test_dictionary_word_untouched(self):
        cfg = PostprocessConfig(dictionary=frozenset({"milk", "silk"}))
        assert postprocess("milk", cfg) == "milk"

    @given(st.text(max_size=60))
    def test_idempotent(self, text):
        once = postprocess(text)
        assert postprocess(once) == once

    @given(st.text(max_size=60))
    def test_never_increases_token_count(self, text):
        assert len(postprocess(text).split()) <= len(text.split())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            PostprocessConfig(max_edit_distance=-1)
        with pytest.raises(ValueError):
            PostprocessConfig(min_token_len_for_correction=0)
