"""Partitions of the band-limited coefficient space into disjoint index blocks."""
from __future__ import annotations

import enum
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .harmonics import flat_index


class PartitionChoice(str, enum.Enum):
    DEGREE = "degree"
    DEGREE_PAIRED = "degree_paired"
    ORDER = "order"
    ORDER_PAIRED = "order_paired"
    CUSTOM = "custom"


class PartitionError(ValueError):
    """Base class for partition validation failures."""

    def __init__(self, message: str, indices: list[int]):
        super().__init__(message)
        self.indices = indices


class DuplicateIndexError(PartitionError):
    pass


class MissingIndexError(PartitionError):
    pass


class EmptyBlockError(PartitionError):
    pass


@dataclass(frozen=True)
class Partition:
    band_limit: int
    blocks: tuple[tuple[int, ...], ...]
    choice: PartitionChoice = PartitionChoice.CUSTOM

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(tuple(int(i) for i in b) for b in self.blocks))
        object.__setattr__(self, "choice", PartitionChoice(self.choice))

    @property
    def sizes(self) -> list[int]:
        return [len(b) for b in self.blocks]

    def __len__(self) -> int:
        return len(self.blocks)

    def to_json(self) -> str:
        return json.dumps(
            {"band_limit": self.band_limit, "choice": self.choice.value, "blocks": [list(b) for b in self.blocks]}
        )

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        return cls(int(data["band_limit"]), data["blocks"], data.get("choice", "custom"))

    @classmethod
    def load(cls, path: str | Path) -> "Partition":
        partition = cls.from_json(Path(path).read_text())
        validate_partition(partition)
        return partition


def _degree_block(degree: int) -> list[int]:
    return [flat_index(degree, m) for m in range(-degree, degree + 1)]


def _order_block(band_limit: int, order: int) -> list[int]:
    return [flat_index(ell, order) for ell in range(abs(order), band_limit)]


def _check_band_limit(band_limit: int) -> None:
    if band_limit < 1:
        raise ValueError("band limit must be >= 1")


def partition_choice1(band_limit: int) -> Partition:
    """One block per degree; block k has 2k-1 members."""
    _check_band_limit(band_limit)
    blocks = [_degree_block(ell) for ell in range(band_limit)]
    return Partition(band_limit, blocks, PartitionChoice.DEGREE)


def partition_choice2(band_limit: int) -> Partition:
    """Degree l paired with degree L-1-l; odd L leaves the middle degree alone."""
    _check_band_limit(band_limit)
    blocks = []
    for ell in range(math.ceil(band_limit / 2)):
        partner = band_limit - 1 - ell
        block = _degree_block(ell)
        if partner != ell:
            block += _degree_block(partner)
        blocks.append(block)
    return Partition(band_limit, blocks, PartitionChoice.DEGREE_PAIRED)


def partition_choice3(band_limit: int) -> Partition:
    """One block per order, visited m = 0, +1, -1, +2, -2, ..."""
    _check_band_limit(band_limit)
    orders = [0]
    for m in range(1, band_limit):
        orders += [m, -m]
    blocks = [_order_block(band_limit, m) for m in orders]
    return Partition(band_limit, blocks, PartitionChoice.ORDER)


def partition_choice4(band_limit: int) -> Partition:
    """Order m joined with order -(L-m); every block has exactly L members."""
    _check_band_limit(band_limit)
    blocks = [_order_block(band_limit, 0)]
    for m in range(1, band_limit):
        blocks.append(_order_block(band_limit, m) + _order_block(band_limit, -(band_limit - m)))
    return Partition(band_limit, blocks, PartitionChoice.ORDER_PAIRED)


def single_block(band_limit: int) -> Partition:
    """The whole space as one block (plain least squares)."""
    _check_band_limit(band_limit)
    return Partition(band_limit, [list(range(band_limit**2))], PartitionChoice.CUSTOM)


PARTITION_BUILDERS = {
    1: partition_choice1,
    2: partition_choice2,
    3: partition_choice3,
    4: partition_choice4,
}


def make_partition(choice: int | str, band_limit: int) -> Partition:
    """Build one of the named partitions by number (1-4) or name."""
    if isinstance(choice, str) and not choice.isdigit():
        by_name = {
            PartitionChoice.DEGREE: 1, PartitionChoice.DEGREE_PAIRED: 2,
            PartitionChoice.ORDER: 3, PartitionChoice.ORDER_PAIRED: 4,
        }
        choice = by_name[PartitionChoice(choice)]
    number = int(choice)
    if number not in PARTITION_BUILDERS:
        raise ValueError(f"unknown partition choice {choice!r}")
    return PARTITION_BUILDERS[number](band_limit)


def validate_partition(partition: Partition) -> None:
    """Check the blocks are non-empty, disjoint and cover ``0..L**2-1``.

    Raises the first violation found: :class:`EmptyBlockError`,
    :class:`DuplicateIndexError` (also used for out-of-range members) or
    :class:`MissingIndexError`.
    """
    n = partition.band_limit**2
    if not partition.blocks:
        raise EmptyBlockError("partition has no blocks", [])
    seen: set[int] = set()
    for k, block in enumerate(partition.blocks):
        if not block:
            raise EmptyBlockError(f"block {k} is empty", [k])
        outside = [i for i in block if not 0 <= i < n]
        if outside:
            raise DuplicateIndexError(f"block {k} has indices outside [0, {n})", outside)
        counts = Counter(block)
        dupes = sorted(i for i, c in counts.items() if c > 1 or i in seen)
        if dupes:
            raise DuplicateIndexError(f"index {dupes[0]} appears more than once", dupes)
        seen.update(block)
    missing = sorted(set(range(n)) - seen)
    if missing:
        raise MissingIndexError(f"{len(missing)} indices not covered, first {missing[0]}", missing)
