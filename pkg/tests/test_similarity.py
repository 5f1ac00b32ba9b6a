from __future__ import annotations

import pytest

from surrogate_learning.similarity import (
    edit_similarity,
    exact_similarity,
    levenshtein_distance,
)


class TestLevenshtein:
    @pytest.mark.parametrize(
        ("a", "b", "distance"),
        [
            ("", "", 0),
            ("abc", "", 3),
            ("", "abc", 3),
            ("kitten", "sitting", 3),
            ("flaw", "lawn", 2),
            ("Smith", "Smyth", 1),
            ("same", "same", 0),
        ],
    )
    def test_distance(self, a, b, distance):
        assert levenshtein_distance(a, b) == distance

    def test_symmetric(self):
        assert levenshtein_distance("Gonzales", "Gonzalez") == levenshtein_distance(
            "Gonzalez", "Gonzales"
        )

    def test_transposition_costs_two_edits(self):
        assert levenshtein_distance("Jnae", "Jane") == 2

    def test_accented_letters_are_single_characters(self):
        assert levenshtein_distance("José", "Jose") == 1


class TestEditSimilarity:
    def test_one_substitution_in_five(self):
        assert edit_similarity("Smith", "Smyth") == pytest.approx(0.8)

    def test_identical(self):
        assert edit_similarity("Jane", "Jane") == 1.0

    def test_two_empty_strings_are_identical(self):
        assert edit_similarity("", "") == 1.0

    def test_nothing_in_common(self):
        assert edit_similarity("abc", "xyz") == 0.0

    @pytest.mark.parametrize(("a", "b"), [(None, "x"), ("x", None), (None, None)])
    def test_missing(self, a, b):
        assert edit_similarity(a, b) is None


class TestExactSimilarity:
    def test_equal_and_unequal(self):
        assert exact_similarity("Q", "Q") == 1.0
        assert exact_similarity("Q", "R") == 0.0

    def test_missing(self):
        assert exact_similarity(None, "Q") is None
