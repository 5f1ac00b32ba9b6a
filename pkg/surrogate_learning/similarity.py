"""Field similarity measures used when comparing linkage records."""

from typing import Optional

import jellyfish


def levenshtein_distance(str1: str, str2: str) -> int:
    """Unit-cost edit distance between two strings."""
    return int(jellyfish.levenshtein_distance(str1, str2))


def edit_similarity(str1: Optional[str], str2: Optional[str]) -> Optional[float]:
    """1 - levenshtein / max(len), or None when either value is missing.

    Two empty strings are identical and score 1.0.
    """
    if str1 is None or str2 is None:
        return None
    longest = max(len(str1), len(str2))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein_distance(str1, str2) / longest


def exact_similarity(value1: Optional[str], value2: Optional[str]) -> Optional[float]:
    """1.0 for equal values, 0.0 otherwise, None when either value is missing."""
    if value1 is None or value2 is None:
        return None
    return 1.0 if value1 == value2 else 0.0
