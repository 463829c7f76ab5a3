"""Set partitions of ``{0, ..., n}`` and the refinement order.

Partitions are enumerated as restricted growth strings (RGS): ``a[0] = 0``
and ``a[i] <= 1 + max(a[:i])``, element ``i`` going to block ``a[i]``.
Canonical form sorts each block and orders blocks by their smallest
element, which is exactly the block numbering an RGS induces.
"""

from __future__ import annotations

import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import GroundSetMismatch, GroundSetTooLarge, NotADivisor

#: largest ``n`` for which all partitions of ``{0..n}`` are enumerated (Bell(9) = 21147)
MAX_ENUMERATION_N = 8


@dataclass(frozen=True)
class Partition:
    """A canonical set partition of ``{0, ..., ground_size - 1}``."""

    blocks: tuple[tuple[int, ...], ...]
    ground_size: int

    def __post_init__(self):
        blocks = tuple(sorted((tuple(sorted(int(i) for i in b)) for b in self.blocks), key=lambda b: b[:1]))
        if any(not b for b in blocks):
            raise ValueError("partition blocks must be nonempty")
        seen = [i for b in blocks for i in b]
        if sorted(seen) != list(range(self.ground_size)):
            raise ValueError(f"blocks {blocks} are not a disjoint cover of 0..{self.ground_size - 1}")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_rgs(cls, rgs: Sequence[int]) -> Partition:
        groups: dict[int, list[int]] = {}
        for i, a in enumerate(rgs):
            groups.setdefault(a, []).append(i)
        return cls(tuple(tuple(g) for g in groups.values()), len(rgs))

    @classmethod
    def parse(cls, text: str, ground_size: int | None = None) -> Partition:
        """Parse ``"0,1|2,3"``-style text; blocks and elements may come in any order."""
        try:
            blocks = [tuple(int(x) for x in part.split(",")) for part in text.strip().split("|")]
        except ValueError as exc:
            raise ValueError(f"cannot parse partition {text!r}") from exc
        size = ground_size if ground_size is not None else sum(len(b) for b in blocks)
        return cls(tuple(blocks), size)

    @property
    def n(self) -> int:
        return self.ground_size - 1

    @property
    def rgs(self) -> tuple[int, ...]:
        out = [0] * self.ground_size
        for j, b in enumerate(self.blocks):
            for i in b:
                out[i] = j
        return tuple(out)

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self) -> Iterator[tuple[int, ...]]:
        return iter(self.blocks)

    def __str__(self) -> str:
        return "|".join(",".join(str(i) for i in b) for b in self.blocks)


def enumerate_partitions(n: int) -> Iterator[Partition]:
    """All partitions of ``{0..n}`` in lexicographic RGS order (``Bell(n + 1)`` of them).

    Raises:
        GroundSetTooLarge: for ``n > 8``; use :func:`sample_partitions` instead.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > MAX_ENUMERATION_N:
        raise GroundSetTooLarge(f"n = {n} exceeds the enumeration cap {MAX_ENUMERATION_N}")
    size = n + 1
    rgs = [0] * size

    def rec(i: int, top: int) -> Iterator[Partition]:
        if i == size:
            yield Partition.from_rgs(rgs)
            return
        for a in range(top + 2):
            rgs[i] = a
            yield from rec(i + 1, max(top, a))

    yield from rec(1, 0)


def refines(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of ``fine`` lies inside some block of ``coarse``."""
    if fine.ground_size != coarse.ground_size:
        raise GroundSetMismatch(f"ground sizes differ: {fine.ground_size} vs {coarse.ground_size}")
    label = coarse.rgs
    return all(len({label[i] for i in b}) == 1 for b in fine.blocks)


def singleton_partition(n: int) -> Partition:
    return Partition(tuple((i,) for i in range(n + 1)), n + 1)


def trivial_partition(n: int) -> Partition:
    return Partition((tuple(range(n + 1)),), n + 1)


def _sized_partitions(elements: tuple[int, ...], sizes: tuple[int, ...]) -> Iterator[list[tuple[int, ...]]]:
    # the smallest remaining element opens the next block; `sizes` is the multiset of block sizes left
    if not elements:
        yield []
        return
    first, rest = elements[0], elements[1:]
    for size in sorted(set(sizes)):
        remaining = list(sizes)
        remaining.remove(size)
        for mates in combinations(rest, size - 1):
            block = (first,) + mates
            left = tuple(e for e in rest if e not in mates)
            for tail in _sized_partitions(left, tuple(remaining)):
                yield [block] + tail


def partitions_with_block_sizes(n: int, sizes: Iterable[int]) -> list[Partition]:
    """All partitions of ``{0..n}`` whose block sizes form the given multiset."""
    sizes = tuple(sorted(sizes))
    if sum(sizes) != n + 1 or any(s < 1 for s in sizes):
        raise ValueError(f"block sizes {sizes} do not partition {n + 1} elements")
    out = [Partition(tuple(p), n + 1) for p in _sized_partitions(tuple(range(n + 1)), sizes)]
    return sorted(out, key=lambda p: p.rgs)


def equal_block_partitions(n: int, d: int) -> list[Partition]:
    """All partitions of ``{0..n}`` into blocks of exactly ``d`` elements.

    Raises:
        NotADivisor: unless ``d`` divides ``n + 1``.
    """
    if d < 1 or (n + 1) % d:
        raise NotADivisor(f"{d} does not divide {n + 1}")
    return partitions_with_block_sizes(n, [d] * ((n + 1) // d))


def group_splits(n: int, k: int) -> list[Partition]:
    """Partitions into ``(n+1) // k`` blocks of size ``k`` plus one block of the remainder (if any)."""
    if not 1 <= k <= n + 1:
        raise ValueError(f"group size must be in 1..{n + 1}, got {k}")
    q, r = divmod(n + 1, k)
    return partitions_with_block_sizes(n, [k] * q + ([r] if r else []))


def equal_block_count(n: int, d: int) -> int:
    """Closed-form count ``(n+1)! / ((d!)^m m!)`` with ``m = (n+1)/d``."""
    m = (n + 1) // d
    return math.factorial(n + 1) // (math.factorial(d) ** m * math.factorial(m))


@lru_cache(maxsize=None)
def _completions(remaining: int, blocks: int) -> int:
    # number of ways to finish an RGS with `remaining` positions after `blocks` blocks are open
    if remaining == 0:
        return 1
    return blocks * _completions(remaining - 1, blocks) + _completions(remaining - 1, blocks + 1)


def bell(m: int) -> int:
    """Number of partitions of an ``m``-element set."""
    return 1 if m == 0 else _completions(m - 1, 1)


def sample_partitions(n: int, count: int, seed: int = 0) -> list[Partition]:
    """``count`` partitions of ``{0..n}`` drawn uniformly at random (with replacement).

    Each RGS entry is chosen with probability proportional to the number of
    completions it leaves, which makes every partition equally likely.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.Generator(np.random.Philox(seed))
    size = n + 1
    out = []
    for _ in range(count):
        rgs, top = [0], 1
        for i in range(1, size):
            left = size - i - 1
            stay = top * _completions(left, top)
            total = stay + _completions(left, top + 1)
            # exact integer draw: uniform in [0, total)
            u = int(rng.integers(0, 2**62)) * total >> 62
            if u < stay:
                rgs.append(u // _completions(left, top))
            else:
                rgs.append(top)
                top += 1
        out.append(Partition.from_rgs(rgs))
    return out
