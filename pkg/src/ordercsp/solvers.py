"""Randomized local search by single-vertex reinsertion.

Randomness comes from numpy's PCG64 generator. A run seeded with ``seed``
draws its starting permutation first and then the ``iterations`` vertex
choices, so a run is fully determined by its seed. Restart ``i`` of a
seeded batch uses ``derive_seed(seed, i)``, a SeedSequence hash of the pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .evaluation import TIE_TOL, _segment_profile, value
from .model import Instance, Ordering

SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed & SEED_MASK))


def derive_seed(seed: int, index: int) -> int:
    """64-bit sub-seed for the ``index``-th run of a batch seeded with ``seed``."""
    ss = np.random.SeedSequence(seed & SEED_MASK, spawn_key=(index,))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def random_ordering(n: int, seed: int) -> Ordering:
    if n < 1:
        raise ValueError("random_ordering needs n >= 1")
    return Ordering.from_sequence(make_rng(seed).permutation(n).tolist())


class Move(NamedTuple):
    step: int
    vertex: int
    fresh: bool
    gain: float


@dataclass
class SolveTrace:
    seed: int
    initial_value: float
    final_value: float = 0.0
    moves: list[Move] = field(default_factory=list)

    @property
    def fresh_vertices(self) -> set[int]:
        return {m.vertex for m in self.moves if m.fresh}

    @property
    def moves_with_gain(self) -> int:
        return sum(1 for m in self.moves if m.gain > 0)

    def to_records(self) -> list[dict]:
        return [m._asdict() for m in self.moves]


def local_search(instance: Instance, seed: int, iterations: int | None = None) -> tuple[Ordering, SolveTrace]:
    """Random start, then ``iterations`` (default n) best reinsertions of a random vertex.

    Vertices are drawn uniformly with replacement. If the current spot of the
    drawn vertex is already among the best, it stays; otherwise it moves to
    the smallest best position.
    """
    n = instance.n
    if n < 1:
        raise ValueError("local_search needs n >= 1")
    if iterations is None:
        iterations = n
    if iterations < 0:
        raise ValueError("iterations must be non-negative")

    rng = make_rng(seed)
    seq = rng.permutation(n).tolist()
    draws = rng.integers(0, n, size=iterations).tolist()
    pos = [0] * n
    for i, v in enumerate(seq):
        pos[v] = i

    current = value(instance, Ordering.from_sequence(seq))
    trace = SolveTrace(seed=seed, initial_value=current)
    neighbors = instance.neighbors
    chosen = [False] * n

    for step, u in enumerate(draws):
        fresh = not chosen[u] and not any(chosen[v] for v in neighbors[u])
        chosen[u] = True

        p = pos[u]
        starts, seg_values = _segment_profile(
            instance, u, lambda v: pos[v] - (pos[v] > p))
        best = max(seg_values)
        here = next(val for s, val in zip(reversed(starts), reversed(seg_values)) if s <= p)
        gain = 0.0
        if here < best - TIE_TOL:
            target = next(s for s, val in zip(starts, seg_values) if val >= best - TIE_TOL)
            gain = best - here
            del seq[p]
            seq.insert(target, u)
            lo, hi = min(p, target), max(p, target)
            for i in range(lo, hi + 1):
                pos[seq[i]] = i
            current += gain
        trace.moves.append(Move(step, u, fresh, gain))

    trace.final_value = current
    return Ordering.from_sequence(seq), trace


@dataclass
class RestartSummary:
    seed: int
    sub_seeds: list[int]
    values: list[float]
    best_index: int

    @property
    def best_value(self) -> float:
        return self.values[self.best_index]


def local_search_with_restarts(instance: Instance, seed: int, restarts: int,
                               iterations: int | None = None) -> tuple[Ordering, RestartSummary]:
    """Best of ``restarts`` independent runs; the first best wins ties."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best_order = None
    sub_seeds, values = [], []
    best_index = 0
    for i in range(restarts):
        sub = derive_seed(seed, i)
        order, trace = local_search(instance, sub, iterations)
        sub_seeds.append(sub)
        values.append(trace.final_value)
        if best_order is None or trace.final_value > values[best_index]:
            best_order, best_index = order, i
    return best_order, RestartSummary(seed, sub_seeds, values, best_index)
