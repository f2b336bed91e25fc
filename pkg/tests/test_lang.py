from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qcm import lang, model
from qcm.lang import Severity, parse, serialize
from qcm.model import BasisColour, check_score
from qcm.sim import SplitMix64

CORPUS = Path(__file__).parent / "corpus"
GOOD_FILES = sorted(CORPUS.glob("*.qcm"))
BAD_FILES = sorted((CORPUS / "bad").glob("*.qcm"))


def error_codes(result):
    return [d.code for d in result.diagnostics if d.severity is Severity.ERROR]


class TestCorpus:
    def test_corpus_is_large_enough(self):
        assert len(GOOD_FILES) >= 10

    @pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.stem)
    def test_parses_clean(self, path):
        result = parse(path.read_text())
        assert result.ok, [str(d) for d in result.diagnostics]

    @pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.stem)
    def test_round_trip(self, path):
        first = parse(path.read_text()).score
        text = serialize(first)
        second = parse(text)
        assert second.ok, [str(d) for d in second.diagnostics]
        assert second.score == first

    @pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.stem)
    def test_serialize_is_idempotent_fixpoint(self, path):
        text0 = path.read_text()
        text1 = serialize(parse(text0).score)
        text2 = serialize(parse(text1).score)
        assert text1 == text2

    @pytest.mark.parametrize("path", GOOD_FILES, ids=lambda p: p.stem)
    def test_validates(self, path):
        score = parse(path.read_text()).score
        assert check_score(score) == []

    def test_bell_file_matches_fixture_serialization(self):
        assert (CORPUS / "bell.qcm").read_text() == serialize(model.bell_score_fixture())

    def test_bell_file_parses_to_fixture_field_for_field(self):
        result = parse((CORPUS / "bell.qcm").read_text())
        assert result.score == model.bell_score_fixture()


class TestBadCorpus:
    EXPECTED = {
        "dangling-kind": "UnresolvedGlossaryName",  # via check_score
        "measure-self": "MeasuredEqualsInfluenced",
        "no-policy": "MissingPolicy",
        "sharp-zero": "SharpZero",
        "hadamard-after-measure": "ClassicalIntoHadamard",  # via check_score
        "bad-syntax": None,  # any parse error will do
    }

    @pytest.mark.parametrize("path", BAD_FILES, ids=lambda p: p.stem)
    def test_expected_diagnostic(self, path):
        expected = self.EXPECTED[path.stem]
        result = parse(path.read_text())
        if result.ok:
            # semantic rejects surface in validation, not parsing
            codes = [d.code for d in check_score(result.score)]
            assert expected in codes
        else:
            if expected is not None and expected in {
                "MeasuredEqualsInfluenced",
                "MissingPolicy",
                "SharpZero",
            }:
                assert expected in error_codes(result)
            assert error_codes(result)


class TestParseErrors:
    def test_empty_input(self):
        result = parse("")
        assert not result.ok
        assert result.diagnostics[0].message == "expected score header"
        assert result.diagnostics[0].code == "ExpectedScoreHeader"

    def test_measured_equals_influenced(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit q1 "Q" { z-axis "a" "b" x-axis "c" "d" }\n'
            "movement m { measure q1 basis green -> q1 } }"
        )
        assert not result.ok
        [diag] = [d for d in result.diagnostics if d.code == "MeasuredEqualsInfluenced"]
        assert diag.message == "measured and influenced qubit must differ"

    def test_bad_colour(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            "movement m { measure a basis purple -> b } }"
        )
        assert "BadColour" in error_codes(result)

    def test_errors_imply_no_score(self):
        result = parse('score "S" {')
        assert result.diagnostics and result.score is None

    def test_unterminated_string(self):
        result = parse('score "never closed')
        assert "UnterminatedString" in error_codes(result)

    def test_trailing_input(self):
        text = serialize(model.bell_score_fixture()) + "\nleftover"
        assert "TrailingInput" in error_codes(parse(text))

    def test_ambiguous_entanglement(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n'
            'qubit b "B" { z-axis "t" "u" x-axis "v" "w" }\n'
            "entangle e1 a b\nentangle e2 a b\n"
            "movement m { measure a basis green -> b } }"
        )
        assert "AmbiguousEntanglement" in error_codes(result)

    def test_label_clash(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "same" "same" x-axis "r" "s" }\n'
            "movement m { measure a basis green -> b } }"
        )
        assert "LabelClash" in error_codes(result)

    def test_bad_duration(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n'
            "movement m { blob x a notes { 0:0 } } }"
        )
        assert "BadDuration" in error_codes(result)

    def test_non_unitary_entangler_matrix(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n'
            'qubit b "B" { z-axis "t" "u" x-axis "v" "w" }\n'
            "entangle pair a b gate [1.0 1.0; 0.0 1.0]\n"
            "movement m { measure a basis green -> b } }"
        )
        assert "NonUnitaryMatrix" in error_codes(result)

    def test_spans_lie_within_input(self):
        bad_inputs = [
            "",
            "score",
            'score "x" {',
            "score } {",
            '\n\n   score "a" { qubit }',
            (CORPUS / "bad" / "bad-syntax.qcm").read_text(),
        ]
        for text in bad_inputs:
            for d in parse(text).diagnostics:
                assert 0 <= d.span.offset <= len(text)
                assert d.span.length >= 1
                assert d.span.offset + d.span.length <= len(text) + 1
                assert d.span.line >= 1 and d.span.column >= 1


class TestAutoIds:
    def test_anonymous_measure_gets_scoped_id_and_cue(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n'
            'qubit b "B" { z-axis "t" "u" x-axis "v" "w" }\n'
            "entangle duo a b\n"
            "movement intro { measure a basis green -> b\n"
            "measure b basis red -> a } }"
        )
        assert result.ok
        events = result.score.movements[0].events
        assert [e.id for e in events] == ["intro.e1", "intro.e2"]
        assert [e.cue for e in events] == [1, 2]
        assert events[0].entanglement_id == "duo"

    def test_explicit_id_kept(self):
        result = parse(
            'score "S" { glossary { policy performer }\n'
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n'
            'qubit b "B" { z-axis "t" "u" x-axis "v" "w" }\n'
            "entangle duo a b\n"
            "movement m { measure opening a basis green -> b cue 3 } }"
        )
        event = result.score.movements[0].events[0]
        assert event.id == "opening"
        assert event.cue == 3


class TestSerializer:
    def test_deterministic_bytes(self):
        score = model.bell_score_fixture()
        assert serialize(score) == serialize(score)

    def test_variable_blob_keeps_binding_name(self):
        text = (CORPUS / "variables.qcm").read_text()
        out = serialize(parse(text).score)
        assert "var motifA" in out
        assert "var bridging" in out

    def test_string_escapes_round_trip(self):
        tricky = 'score "Quote \\" and \\\\ and \\n newline" { glossary { policy performer }\n' \
            'qubit a "A" { z-axis "p" "q" x-axis "r" "s" }\n' \
            'qubit b "B" { z-axis "t" "u" x-axis "v" "w" }\n' \
            "entangle duo a b\n" \
            "movement m { measure a basis green -> b } }"
        first = parse(tricky)
        assert first.ok
        assert 'Quote " and \\ and \n newline' == first.score.title
        assert parse(serialize(first.score)).score == first.score


def _random_bytes(seed: int, max_len: int = 48) -> bytes:
    rng = SplitMix64(seed)
    length = rng.next_u64() % (max_len + 1)
    return bytes(rng.next_u64() & 0xFF for _ in range(length))


class TestFuzz:
    def test_random_bytes_never_raise(self):
        # a quick slice; the acceptance suite runs the full 10^5
        for seed in range(5_000):
            text = _random_bytes(seed).decode("utf-8", errors="replace")
            result = parse(text)
            assert result.score is None or result.ok
            for d in result.diagnostics:
                assert 0 <= d.span.offset <= len(text)

    @given(st.text(max_size=80))
    @settings(max_examples=300, deadline=None)
    def test_arbitrary_text_never_raises(self, text):
        parse(text)

    @given(st.integers(0, 2**32))
    @settings(max_examples=200, deadline=None)
    def test_mutated_bell_text_never_raises(self, seed):
        rng = SplitMix64(seed)
        text = list(serialize(model.bell_score_fixture()))
        for _ in range(1 + rng.next_u64() % 8):
            pos = rng.next_u64() % len(text)
            text[pos] = chr(rng.next_u64() % 0x250)
        parse("".join(text))
