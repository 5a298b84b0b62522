"""
Seed queue and scheduling.

Entries that reached a checker are favoured four to one, and recently
discovered entries get a further factor of two, so the campaign keeps
pushing on the inputs that are closest to a performance-stressing region.
"""

import random
from typing import List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field

from ..corpus.models import TestInput
from ..pipeline.errors import EmptyQueue
from .signature import FeedbackSignature

DEFAULT_ENERGY = 32
CHECKER_HIT_WEIGHT = 4
RECENT_WEIGHT = 2
RECENT_WINDOW = 10


class QueueEntry(BaseModel):
    """A signature-novel input kept for further mutation."""

    model_config = ConfigDict(frozen=True)

    id: str
    input: TestInput
    signature: FeedbackSignature
    energy: int = Field(default=DEFAULT_ENERGY, ge=1)
    discovered_at: int = Field(default=0, ge=0)
    parent: Optional[str] = None


def entry_weight(entry: QueueEntry, recent: bool) -> int:
    weight = 1
    if entry.signature.checker_hits:
        weight *= CHECKER_HIT_WEIGHT
    if recent:
        weight *= RECENT_WEIGHT
    return weight


def schedule(
    queue: Sequence[QueueEntry],
    rng: random.Random,
    energy: int = DEFAULT_ENERGY,
) -> Tuple[QueueEntry, int]:
    """
    Pick the next entry to mutate.

    Args:
        queue: Current queue (non-empty)
        rng: Campaign random source
        energy: Mutations granted to the pick

    Returns:
        Tuple of (entry, energy)

    Raises:
        EmptyQueue: Queue has no entries
    """
    if not queue:
        raise EmptyQueue("cannot schedule from an empty queue")

    recent = {
        e.id for e in sorted(queue, key=lambda e: e.discovered_at, reverse=True)[:RECENT_WINDOW]
    }
    weights: List[int] = [entry_weight(e, e.id in recent) for e in queue]
    entry = rng.choices(list(queue), weights=weights, k=1)[0]
    return entry, energy
