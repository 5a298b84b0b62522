"""
Response parsing.

Providers answer inside a small envelope: invariants as a numbered list under
``PERFORMANCE INVARIANTS:``, checker code in fences tagged
``checker:<invariant ids>``, the instrumented program in a fence tagged
``instrumented``. Everything here is a pure function of the response text.
"""

import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from ..harness.sentinels import LEGACY_CHECKER_ID, LEGACY_WARNING

INVARIANTS_HEADING_RE = re.compile(r"^\W*performance invariants\W*:?\W*$", re.IGNORECASE)
ITEM_RE = re.compile(r"^\s{0,3}(?:\d+[.)]|[-*•])\s+(.+?)\s*$")
FENCE_RE = re.compile(r"^```[ \t]*([^\n`]*)\n(.*?)^```[ \t]*$", re.MULTILINE | re.DOTALL)
CHECK_HIT_RE = re.compile(r"WEDGE_CHECK_HIT:([A-Za-z0-9_]+)")

# Literal copies are only detectable for inputs with a few tokens
MIN_COPY_TOKENS = 3


class InvariantCategory(str, Enum):
    """Rough kind of performance condition."""
    SIZE_BOUND = "size_bound"
    VALUE_RELATION = "value_relation"
    STRUCTURAL_PATTERN = "structural_pattern"
    OTHER = "other"


class NLInvariant(BaseModel):
    """A performance-characterizing condition in natural language."""

    model_config = ConfigDict(frozen=True)

    id: str
    text: str
    category: InvariantCategory = InvariantCategory.OTHER

    @field_validator("text")
    @classmethod
    def validate_text(cls, v: str) -> str:
        if not v.strip():
            raise ValueError("invariant text must not be empty")
        return v


class FencedBlock(BaseModel):
    """A fenced code block with its info string."""

    model_config = ConfigDict(frozen=True)

    info: str
    body: str


_CATEGORY_KEYWORDS: List[Tuple[InvariantCategory, Tuple[str, ...]]] = [
    (InvariantCategory.SIZE_BOUND, (
        "upper bound", "upper limit", "maximum", "size", "length", "number of",
        "large n", "n is large", "n is close", "close to its", "many ",
    )),
    (InvariantCategory.STRUCTURAL_PATTERN, (
        "sorted", "repeated", "duplicate", "pattern", "cycle", "structure",
        "distinct", "identical", "same value", "palindrom", "alternat",
    )),
    (InvariantCategory.VALUE_RELATION, (
        "divid", "divisib", "gcd", "multiple of", "equal", "differ", "close",
        "sum", "greater", "less", "ratio", "prime", "modulo",
    )),
]


def categorize(text: str) -> InvariantCategory:
    """Keyword heuristic for an invariant's category."""
    lowered = text.lower()
    for category, keywords in _CATEGORY_KEYWORDS:
        if any(k in lowered for k in keywords):
            return category
    return InvariantCategory.OTHER


def _clean(text: str) -> str:
    text = re.sub(r"\*\*(.+?)\*\*", r"\1", text)
    return re.sub(r"\s+", " ", text).strip()


def _strip_fences(text: str) -> List[str]:
    """Lines of text outside fenced blocks."""
    lines, inside = [], False
    for line in text.splitlines():
        if line.lstrip().startswith("```"):
            inside = not inside
            continue
        if not inside:
            lines.append(line)
    return lines


def _collect_items(lines: List[str], stop_at_prose: bool) -> List[str]:
    items: List[str] = []
    for line in lines:
        match = ITEM_RE.match(line)
        if match:
            items.append(match.group(1))
        elif items and line.startswith((" ", "\t")) and line.strip():
            # indented continuation of the previous item
            items[-1] += " " + line.strip()
        elif items and line.strip() and stop_at_prose:
            break
    return items


def parse_invariants(response: str) -> List[NLInvariant]:
    """
    Extract invariant statements.

    Items under a ``PERFORMANCE INVARIANTS:`` heading are preferred; without
    the heading every numbered or bulleted line outside code fences counts.
    Ids are ``inv_1..inv_n`` in document order.

    Args:
        response: Provider response text

    Returns:
        Parsed invariants (possibly empty)
    """
    lines = _strip_fences(response)
    heading = next((i for i, line in enumerate(lines) if INVARIANTS_HEADING_RE.match(line)), None)
    if heading is not None:
        items = _collect_items(lines[heading + 1:], stop_at_prose=True)
    else:
        items = _collect_items(lines, stop_at_prose=False)

    texts = [t for t in (_clean(item) for item in items) if t]
    return [
        NLInvariant(id=f"inv_{i}", text=text, category=categorize(text))
        for i, text in enumerate(texts, start=1)
    ]


def extract_fenced_blocks(text: str) -> List[FencedBlock]:
    """All fenced blocks in document order."""
    return [FencedBlock(info=m.group(1).strip(), body=m.group(2)) for m in FENCE_RE.finditer(text)]


def checker_blocks(text: str) -> List[Tuple[List[str], str]]:
    """
    Blocks tagged ``checker:<ids>``.

    Returns:
        List of (invariant ids, code) in document order
    """
    result = []
    for block in extract_fenced_blocks(text):
        if block.info.lower().startswith("checker:"):
            ids = [i.strip() for i in block.info.split(":", 1)[1].split(",") if i.strip()]
            result.append((ids, block.body))
    return result


def instrumented_block(text: str) -> Optional[str]:
    """Body of the single ``instrumented`` block, or None."""
    blocks = [b for b in extract_fenced_blocks(text) if b.info.lower() == "instrumented"]
    return blocks[-1].body if blocks else None


def code_block(text: str, tags: Tuple[str, ...] = ("python", "py", "python3")) -> Optional[str]:
    """First block tagged with one of `tags`, else the first untagged block."""
    blocks = extract_fenced_blocks(text)
    for block in blocks:
        if block.info.lower() in tags:
            return block.body
    for block in blocks:
        if not block.info:
            return block.body
    return None


def checker_ids_in(code: str) -> List[str]:
    """Checker ids reported by sentinel literals in code, in order of appearance."""
    ids: Dict[str, None] = dict.fromkeys(CHECK_HIT_RE.findall(code))
    if not ids and LEGACY_WARNING in code:
        ids[LEGACY_CHECKER_ID] = None
    return list(ids)


def copies_slow_input(text: str, slow_input: bytes) -> bool:
    """
    True when an invariant quotes the slow input's whole token sequence.

    Inputs shorter than three tokens are too generic to judge.
    """
    tokens = slow_input.decode("utf-8", errors="replace").split()
    if len(tokens) < MIN_COPY_TOKENS:
        return False
    return " ".join(tokens) in " ".join(text.split())
