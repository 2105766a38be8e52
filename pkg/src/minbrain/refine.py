"""Minimal sufficient refinement by iterative block splitting."""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from itertools import combinations
from typing import Iterator

from .errors import NondeterministicInput
from .ts import (
    Partition,
    StateRelabeledTS,
    is_deterministic,
    is_sufficient,
    refines,
    sort_key,
    sorted_ids,
)


@dataclass(frozen=True)
class RefinementResult:
    partition: Partition
    labeling: dict
    iterations: int

    def as_srts(self, srts: StateRelabeledTS) -> StateRelabeledTS:
        return srts.relabel(self.labeling)


def _split(block, index, succ, labels):
    groups = defaultdict(list)
    for s in block:
        sig = tuple(
            index[succ[s, lam]] if (s, lam) in succ else None for lam in labels
        )
        groups[sig].append(s)
    return list(groups.values())


def minimal_sufficient_refinement(
    srts: StateRelabeledTS, order: str | int = "sorted"
) -> RefinementResult:
    """Coarsest sufficient partition refining the labeling of ``srts``.

    Blocks are split whenever two members disagree on the block reached
    under some edge label, or on whether that edge exists at all. ``order``
    selects the block-processing order: ``"sorted"``, ``"reversed"`` or an
    integer seed for a shuffled order; the fixpoint does not depend on it.
    """
    ts = srts.system
    if not is_deterministic(ts):
        bad = next(k for k, v in ts.successors.items() if len(v) > 1)
        raise NondeterministicInput(f"{bad!r} has {len(ts.successors[bad])} successors")
    succ = {k: next(iter(v)) for k, v in ts.successors.items()}
    labels = sorted_ids(ts.labels)
    rng = random.Random(order) if isinstance(order, int) else None

    blocks = [sorted_ids(b) for b in srts.partition.blocks]
    index = {}
    for i, b in enumerate(blocks):
        for s in b:
            index[s] = i

    rounds = 0
    changed = True
    while changed:
        changed = False
        ids = sorted(range(len(blocks)), key=lambda i: sort_key(blocks[i][0]))
        if order == "reversed":
            ids.reverse()
        elif rng is not None:
            rng.shuffle(ids)
        for i in ids:
            parts = _split(blocks[i], index, succ, labels)
            if len(parts) == 1:
                continue
            changed = True
            blocks[i] = parts[0]
            for part in parts[1:]:
                blocks.append(part)
                for s in part:
                    index[s] = len(blocks) - 1
        if changed:
            rounds += 1

    partition = Partition(blocks)
    return RefinementResult(partition, partition.canonical_labeling(), rounds)


def merge_blocks(p: Partition, a, b) -> Partition:
    rest = [blk for blk in p.blocks if blk not in (a, b)]
    return Partition(rest + [a | b])


def verify_minimality(srts: StateRelabeledTS, result: RefinementResult) -> bool:
    """Sufficient, refines the labeling, and no pairwise block merge keeps both."""
    base = srts.partition
    if not refines(result.partition, base):
        return False
    if not is_sufficient(srts.relabel(result.partition.canonical_labeling())):
        return False
    blocks = [frozenset(b) for b in result.partition.sorted_blocks()]
    for a, b in combinations(blocks, 2):
        merged = merge_blocks(result.partition, a, b)
        if refines(merged, base) and is_sufficient(srts.relabel(merged.canonical_labeling())):
            return False
    return True


# --------------------------------------------------------- exhaustive oracle


def set_partitions(items: list) -> Iterator[list[list]]:
    """All set partitions of ``items`` (restricted growth strings)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        yield [[first]] + sub
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]


def refinements_of(p: Partition) -> Iterator[Partition]:
    """Every partition refining ``p`` (product of per-block set partitions)."""
    blocks = p.sorted_blocks()

    def rec(i):
        if i == len(blocks):
            yield []
            return
        for head in set_partitions(blocks[i]):
            for tail in rec(i + 1):
                yield head + tail

    for parts in rec(0):
        yield Partition(parts)


def brute_force_msr(srts: StateRelabeledTS) -> Partition:
    """Coarsest sufficient refinement by enumerating the refinement lattice.

    Exponential; meant for systems of at most eight or so states. Raises
    if the coarsest sufficient element is not unique.
    """
    sufficient = [
        p
        for p in refinements_of(srts.partition)
        if is_sufficient(srts.relabel(p.canonical_labeling()))
    ]
    fewest = min(len(p) for p in sufficient)
    coarsest = [p for p in sufficient if len(p) == fewest]
    if len(coarsest) != 1 or not all(refines(q, coarsest[0]) for q in sufficient):
        raise ValueError("sufficient refinements have no unique coarsest element")
    return coarsest[0]
