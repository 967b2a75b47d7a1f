"""Bucket assignments and the orderings they induce.

A bucket assignment ``x`` puts each vertex in one of ``D = 2**L`` ordered
buckets (numbered from 1). A random ordering from U_x lists bucket 1 first,
then bucket 2 and so on, with a uniformly random order inside each bucket.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import Constraint, Instance, Ordering, patterns, relative_order
from .solvers import make_rng


def bucket_count(members: int) -> int:
    """Smallest power of two that is at least ``members + 1``."""
    return 1 << math.ceil(math.log2(members + 1))


@dataclass(frozen=True)
class BucketAssignment:
    D: int
    assignment: Mapping[int, int]

    def __post_init__(self) -> None:
        if self.D < 1 or self.D & (self.D - 1):
            raise ValueError(f"D must be a power of two, got {self.D}")
        for v, b in self.assignment.items():
            if not 1 <= b <= self.D:
                raise ValueError(f"bucket {b} of vertex {v} outside 1..{self.D}")

    def __getitem__(self, v: int) -> int:
        return self.assignment[v]


@dataclass(frozen=True)
class Neighborhood:
    center: int
    members: tuple[int, ...]  # ascending
    local_constraints: tuple[Constraint, ...]
    arity: int  # arity k of the whole instance

    @property
    def T(self) -> int:
        return len(self.local_constraints)

    @property
    def D(self) -> int:
        return bucket_count(len(self.members))


def neighborhood(instance: Instance, u: int) -> Neighborhood:
    if not 0 <= u < instance.n:
        raise ValueError(f"vertex {u} out of range")
    return Neighborhood(
        center=u,
        members=tuple(sorted(instance.neighbors[u])),
        local_constraints=tuple(instance.constraints[i] for i in instance.incident[u]),
        arity=instance.k,
    )


def sample_from_Ux(x: BucketAssignment, seed: int) -> tuple[int, ...]:
    """One ordering of ``x``'s vertices drawn from U_x, first to last."""
    rng = make_rng(seed)
    by_bucket: dict[int, list[int]] = {}
    for v in sorted(x.assignment):
        by_bucket.setdefault(x.assignment[v], []).append(v)
    out: list[int] = []
    for b in sorted(by_bucket):
        group = by_bucket[b]
        out.extend(group[i] for i in rng.permutation(len(group)))
    return tuple(out)


def constraint_expectation(constraint: Constraint, buckets: Sequence[int]) -> float:
    """E[C(pi)] for pi ~ U_x, given the buckets of C's scope vertices.

    A pattern is possible iff it visits the buckets in non-decreasing order;
    each possible pattern has probability prod_b 1/m_b!, where m_b counts
    scope vertices in bucket b.
    """
    weight = 1.0
    for b in set(buckets):
        weight /= math.factorial(sum(1 for y in buckets if y == b))
    total = 0.0
    for pattern, payoff in zip(patterns(constraint.arity), constraint.payoffs):
        if payoff and all(buckets[pattern[i]] <= buckets[pattern[i + 1]]
                          for i in range(len(pattern) - 1)):
            total += payoff
    return total * weight


def expected_payoff_f(nbhd: Neighborhood, x: BucketAssignment) -> float:
    """f(x): expected total payoff of the constraints containing the center."""
    missing = [v for v in nbhd.members if v not in x.assignment]
    if missing:
        raise ValueError(f"bucket assignment misses neighborhood members {missing}")
    return math.fsum(constraint_expectation(c, [x[v] for v in c.scope])
                     for c in nbhd.local_constraints)


def separating_assignments(nbhd: Neighborhood, pi_plus: Ordering,
                           pi_minus: Ordering) -> tuple[BucketAssignment, BucketAssignment]:
    """Bucket assignments x+ and x- that pin N(u) to the orders of pi+ and pi-.

    Every member gets its own bucket and the two assignments differ only at
    the center. Buckets are handed out left to right; the center's slot
    under pi- comes before its slot under pi+ when both fall between the
    same pair of neighbors.
    """
    u = nbhd.center
    seq_plus = [v for v in pi_plus.sequence if v != u]
    seq_minus = [v for v in pi_minus.sequence if v != u]
    if seq_plus != seq_minus:
        raise ValueError("pi_plus and pi_minus differ in more than the center's position")
    others = [v for v in seq_plus if v in set(nbhd.members)]
    slot_plus = sum(1 for v in others if pi_plus.rank[v] < pi_plus.rank[u])
    slot_minus = sum(1 for v in others if pi_minus.rank[v] < pi_minus.rank[u])

    D = nbhd.D
    x_plus: dict[int, int] = {}
    x_minus: dict[int, int] = {}
    bucket = 0
    for slot in range(len(others) + 1):
        if slot == slot_minus or slot == slot_plus:
            bucket += 1
            if slot == slot_minus:
                x_minus[u] = bucket
            if slot == slot_plus:
                x_plus[u] = bucket
        if slot < len(others):
            bucket += 1
            x_plus[others[slot]] = x_minus[others[slot]] = bucket
    return BucketAssignment(D, x_plus), BucketAssignment(D, x_minus)


def local_value(nbhd: Neighborhood, ordering: Ordering) -> float:
    """val(pi, C_u)."""
    return math.fsum(c.payoff(relative_order(ordering, c.scope)) for c in nbhd.local_constraints)
