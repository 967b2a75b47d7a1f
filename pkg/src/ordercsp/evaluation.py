"""Exact values, the random-assignment baseline and brute-force oracles."""
from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from itertools import islice, permutations
from typing import NamedTuple, Sequence

import numpy as np

from .model import GuardError, Instance, Ordering, pattern_index, pattern_indices

BRUTE_FORCE_MAX_N = 10
_CHUNK = 50_000
TIE_TOL = 1e-12


@dataclass(frozen=True)
class EvalReport:
    opt: float
    wst: float
    avg: float
    argmax: Ordering
    argmin: Ordering

    def to_dict(self) -> dict:
        return {
            "opt": self.opt,
            "wst": self.wst,
            "avg": self.avg,
            "argmax": list(self.argmax.sequence),
            "argmin": list(self.argmin.sequence),
        }


def value(instance: Instance, ordering: Ordering) -> float:
    rank = ordering.rank
    total = 0.0
    for c in instance.constraints:
        scope = c.scope
        pattern = tuple(sorted(range(len(scope)), key=lambda i: rank[scope[i]]))
        total += c.payoffs[pattern_index(len(scope))[pattern]]
    return total


def average_value(instance: Instance) -> float:
    """Expected value of a uniformly random ordering.

    A uniform ordering induces a uniform relative order on every scope, so
    this is the sum of the payoff-table means.
    """
    return math.fsum(c.mean_payoff() for c in instance.constraints)


def _values_of_ranks(instance: Instance, ranks: np.ndarray, constraint_ids=None) -> np.ndarray:
    """Values of many orderings at once; ``ranks[r, v]`` is v's 0-based position."""
    out = np.zeros(ranks.shape[0])
    ids = range(len(instance.constraints)) if constraint_ids is None else constraint_ids
    for i in ids:
        c = instance.constraints[i]
        out += c.payoff_array[pattern_indices(ranks[:, list(c.scope)])]
    return out


def brute_force(instance: Instance) -> EvalReport:
    """Enumerate all n! orderings."""
    n = instance.n
    if n > BRUTE_FORCE_MAX_N:
        raise GuardError(f"brute force limited to n <= {BRUTE_FORCE_MAX_N}, got n={n}")
    best = worst = None
    best_seq = worst_seq = None
    total = 0.0
    count = 0
    it = permutations(range(n))
    while True:
        chunk = list(islice(it, _CHUNK))
        if not chunk:
            break
        seqs = np.array(chunk, dtype=np.int64).reshape(len(chunk), n)
        ranks = np.argsort(seqs, axis=1)
        vals = _values_of_ranks(instance, ranks)
        i_max = int(np.argmax(vals))
        i_min = int(np.argmin(vals))
        if best is None or vals[i_max] > best:
            best, best_seq = float(vals[i_max]), chunk[i_max]
        if worst is None or vals[i_min] < worst:
            worst, worst_seq = float(vals[i_min]), chunk[i_min]
        total += math.fsum(vals)
        count += len(chunk)
    return EvalReport(
        opt=best,
        wst=worst,
        avg=total / count,
        argmax=Ordering.from_sequence(best_seq),
        argmin=Ordering.from_sequence(worst_seq),
    )


class DeltaWitness(NamedTuple):
    delta: float
    pi_plus: Ordering
    pi_minus: Ordering


def delta_u_witness(instance: Instance, u: int) -> DeltaWitness:
    """Largest value change obtainable by moving only ``u``, with a witnessing pair.

    Moving ``u`` changes only the constraints containing ``u``, and those
    depend only on the relative order of N(u). Enumerating every order of
    N(u) - {u} with every insertion slot of ``u`` is therefore exhaustive.
    The witness orderings list N(u) first and the other vertices after them
    in ascending id.
    """
    members = instance.neighbors[u]
    others = sorted(members - {u})
    m = len(others)
    if m + 1 > BRUTE_FORCE_MAX_N:
        raise GuardError(f"|N({u})| = {m + 1} exceeds the exhaustive limit {BRUTE_FORCE_MAX_N}")
    rest = [v for v in range(instance.n) if v not in members]
    incident = instance.incident[u]

    perm_list = list(permutations(range(m)))
    perms = np.array(perm_list, dtype=np.int64).reshape(len(perm_list), m)
    # slot_values[r, s]: value of C_u when u sits in slot s of the r-th order of others
    slot_values = np.empty((perms.shape[0], m + 1))
    ranks = np.zeros((perms.shape[0], instance.n), dtype=np.int64)
    other_pos = np.argsort(perms, axis=1)  # position of others[j] within the r-th order
    for s in range(m + 1):
        for j, v in enumerate(others):
            ranks[:, v] = other_pos[:, j] + (other_pos[:, j] >= s)
        ranks[:, u] = s
        slot_values[:, s] = _values_of_ranks(instance, ranks, incident)

    spread = slot_values.max(axis=1) - slot_values.min(axis=1)
    r = int(np.argmax(spread))
    s_plus = int(np.argmax(slot_values[r]))
    s_minus = int(np.argmin(slot_values[r]))
    base = [others[j] for j in perms[r]]

    def full(slot):
        return Ordering.from_sequence(base[:slot] + [u] + base[slot:] + rest)

    return DeltaWitness(float(spread[r]), full(s_plus), full(s_minus))


def delta_u(instance: Instance, u: int) -> float:
    return delta_u_witness(instance, u).delta


def _segment_profile(instance: Instance, u: int, position_of) -> tuple[list[int], list[float]]:
    """Value of C_u for every insertion index of ``u``, grouped into segments.

    ``position_of(v)`` gives v's 0-based position in the order with u removed.
    Inserting u at index i places it before the element currently at i. The
    C_u value is piecewise constant in i and only changes just after a
    scope-mate of u; returns the segment start indices (ascending, first 0)
    and the C_u value on each segment.
    """
    per_constraint = []
    cuts = {0}
    for ci in instance.incident[u]:
        c = instance.constraints[ci]
        j_u = c.scope.index(u)
        mates = sorted(((position_of(v), j) for j, v in enumerate(c.scope) if v != u))
        qs = [q for q, _ in mates]
        order = [j for _, j in mates]
        index = pattern_index(c.arity)
        slot_payoffs = [c.payoffs[index[tuple(order[:s] + [j_u] + order[s:])]]
                        for s in range(len(order) + 1)]
        per_constraint.append((qs, slot_payoffs))
        cuts.update(q + 1 for q in qs)
    starts = sorted(cuts)
    seg_values = []
    for i in starts:
        total = 0.0
        for qs, slot_payoffs in per_constraint:
            total += slot_payoffs[bisect_left(qs, i)]
        seg_values.append(total)
    return starts, seg_values


class InsertionResult(NamedTuple):
    position: int  # 1-based position of u in the new ordering
    gain: float  # best minus worst insertion
    value: float  # value of the resulting full ordering


def best_insertion(instance: Instance, partial: Sequence[int], u: int) -> InsertionResult:
    """Best place to put ``u`` back into ``partial`` (an ordering of V - {u}).

    Ties go to the smallest position.
    """
    partial = list(partial)
    if len(partial) != instance.n - 1 or u in partial or sorted(partial + [u]) != list(range(instance.n)):
        raise ValueError("partial must order every vertex except u exactly once")
    where = {v: i for i, v in enumerate(partial)}
    starts, seg_values = _segment_profile(instance, u, where.__getitem__)
    best = max(seg_values)
    pick = next(i for i, val in zip(starts, seg_values) if val >= best - TIE_TOL)
    gain = best - min(seg_values)
    new_order = Ordering.from_sequence(partial[:pick] + [u] + partial[pick:])
    return InsertionResult(pick + 1, gain, value(instance, new_order))


def insertion_values(instance: Instance, partial: Sequence[int], u: int) -> list[float]:
    """Full re-evaluation of every insertion of ``u``; the slow reference path."""
    partial = list(partial)
    return [value(instance, Ordering.from_sequence(partial[:i] + [u] + partial[i:]))
            for i in range(len(partial) + 1)]
