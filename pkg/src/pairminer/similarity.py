"""
Input similarity metrics.

Inputs are compared as whitespace token lists: the match ratio counts common
elements as a multiset intersection over the shorter list, the Jaccard index
works on token sets.
"""

from collections import Counter
from typing import List

from pydantic import BaseModel, ConfigDict, model_validator

from ..pipeline.errors import BothEmpty


class SimilarityScore(BaseModel):
    """Combined similarity of two inputs."""

    model_config = ConfigDict(frozen=True)

    match_ratio: float
    jaccard: float
    total: float = 0.0

    @model_validator(mode="before")
    @classmethod
    def fill_total(cls, data):
        """total is always match_ratio + jaccard."""
        if isinstance(data, dict):
            data = {**data, "total": data["match_ratio"] + data["jaccard"]}
        return data


def tokenize(input_bytes: bytes) -> List[str]:
    """
    Split an input into whitespace tokens.

    Args:
        input_bytes: Raw input

    Returns:
        Non-empty tokens in order
    """
    # bytes.split() splits on ASCII whitespace only; UTF-8 never encodes
    # those bytes inside a multi-byte character
    return [token.decode("utf-8", errors="replace") for token in input_bytes.split()]


def match_ratio(a: List[str], b: List[str]) -> float:
    """
    Common elements divided by the length of the shorter list.

    Raises:
        BothEmpty: Both lists are empty
    """
    if not a and not b:
        raise BothEmpty("match_ratio needs at least one non-empty token list")
    shorter = min(len(a), len(b))
    if shorter == 0:
        return 0.0
    common = sum((Counter(a) & Counter(b)).values())
    return common / shorter


def jaccard(a: List[str], b: List[str]) -> float:
    """
    Jaccard index of the two token sets.

    Raises:
        BothEmpty: Both lists are empty
    """
    set_a, set_b = set(a), set(b)
    union = set_a | set_b
    if not union:
        raise BothEmpty("jaccard needs at least one non-empty token list")
    return len(set_a & set_b) / len(union)


def similarity(a: List[str], b: List[str]) -> SimilarityScore:
    """Score two token lists."""
    return SimilarityScore(match_ratio=match_ratio(a, b), jaccard=jaccard(a, b))
