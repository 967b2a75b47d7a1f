"""Instances, constraints and orderings of ordering k-CSPs.

A constraint depends only on the relative order of the vertices in its
scope. The relative order is written as a *pattern*: the scope-local
indices listed by ascending rank. For scope ``(a, b, c)`` and ranks
``b < c < a`` the pattern is ``(1, 2, 0)``. Payoff tables are stored in
lexicographic pattern order, the same order ``itertools.permutations``
produces.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from itertools import permutations
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_ARITY = 8


class InstanceError(ValueError):
    """Malformed constraint, instance or instance file."""


class GuardError(ValueError):
    """An exhaustive computation was asked for beyond its size guard."""


@lru_cache(maxsize=None)
def patterns(arity: int) -> tuple[tuple[int, ...], ...]:
    """All relative orders of ``arity`` scope positions, lexicographically."""
    return tuple(permutations(range(arity)))


@lru_cache(maxsize=None)
def pattern_index(arity: int) -> dict[tuple[int, ...], int]:
    return {p: i for i, p in enumerate(patterns(arity))}


def pattern_indices(sub_ranks: np.ndarray) -> np.ndarray:
    """Vectorised pattern lookup.

    ``sub_ranks`` has shape ``(N, k)`` and holds distinct ranks of the scope
    vertices for N orderings. Returns the lexicographic index of each row's
    pattern (a Lehmer code of the argsort).
    """
    n_rows, k = sub_ranks.shape
    perm = np.argsort(sub_ranks, axis=1, kind="stable")
    index = np.zeros(n_rows, dtype=np.int64)
    for i in range(k):
        smaller_later = (perm[:, i + 1:] < perm[:, i:i + 1]).sum(axis=1)
        index += smaller_later * math.factorial(k - 1 - i)
    return index


@dataclass(frozen=True)
class Ordering:
    """A bijection from vertices ``0..n-1`` to ranks ``1..n``."""

    rank: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.rank) != list(range(1, len(self.rank) + 1)):
            raise ValueError(f"rank {self.rank} is not a bijection onto 1..{len(self.rank)}")

    @classmethod
    def from_sequence(cls, seq: Iterable[int]) -> "Ordering":
        """Build from the vertices listed first to last."""
        seq = list(seq)
        rank = [0] * len(seq)
        for position, v in enumerate(seq, start=1):
            if not 0 <= v < len(seq):
                raise ValueError(f"vertex {v} out of range for n={len(seq)}")
            rank[v] = position
        return cls(tuple(rank))

    @property
    def n(self) -> int:
        return len(self.rank)

    @property
    def sequence(self) -> tuple[int, ...]:
        seq = [0] * len(self.rank)
        for v, r in enumerate(self.rank):
            seq[r - 1] = v
        return tuple(seq)


def relative_order(ordering: Ordering, scope: Sequence[int]) -> tuple[int, ...]:
    """Scope-local indices sorted by ascending rank under ``ordering``."""
    rank = ordering.rank
    return tuple(sorted(range(len(scope)), key=lambda i: rank[scope[i]]))


@dataclass(frozen=True)
class Constraint:
    scope: tuple[int, ...]
    payoffs: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "scope", tuple(int(v) for v in self.scope))
        object.__setattr__(self, "payoffs", tuple(float(p) for p in self.payoffs))
        k = len(self.scope)
        if not 1 <= k <= MAX_ARITY:
            raise InstanceError(f"scope size {k} outside 1..{MAX_ARITY}")
        if len(set(self.scope)) != k:
            raise InstanceError(f"duplicate vertex in scope {list(self.scope)}")
        if any(v < 0 for v in self.scope):
            raise InstanceError(f"negative vertex id in scope {list(self.scope)}")
        if len(self.payoffs) != math.factorial(k):
            raise InstanceError(
                f"payoff table has {len(self.payoffs)} entries, expected {math.factorial(k)}")
        for p in self.payoffs:
            if not math.isfinite(p):
                raise InstanceError(f"non-finite payoff {p}")
            if p < 0:
                raise InstanceError(f"negative payoff {p}")

    @classmethod
    def from_mapping(cls, scope: Sequence[int], payoffs: Mapping[tuple[int, ...], float]) -> "Constraint":
        """Build from a pattern -> payoff mapping; missing patterns pay 0."""
        k = len(scope)
        index = pattern_index(k) if 1 <= k <= MAX_ARITY else {}
        table = [0.0] * len(index)
        for pattern, value in payoffs.items():
            pattern = tuple(pattern)
            if pattern not in index:
                raise InstanceError(f"invalid pattern {list(pattern)} for scope of size {k}")
            table[index[pattern]] = value
        return cls(tuple(scope), tuple(table))

    @property
    def arity(self) -> int:
        return len(self.scope)

    @cached_property
    def payoff_array(self) -> np.ndarray:
        return np.asarray(self.payoffs, dtype=np.float64)

    def payoff(self, pattern: Sequence[int]) -> float:
        return self.payoffs[pattern_index(self.arity)[tuple(pattern)]]

    def evaluate(self, ordering: Ordering) -> float:
        return self.payoff(relative_order(ordering, self.scope))

    def mean_payoff(self) -> float:
        return math.fsum(self.payoffs) / len(self.payoffs)


def mas_constraint(u: int, v: int) -> Constraint:
    """Edge ``u -> v``: pays 1 when ``u`` precedes ``v``."""
    if u == v:
        raise InstanceError("edge endpoints must differ")
    return Constraint.from_mapping((u, v), {(0, 1): 1.0})


def betweenness_constraint(u: int, v: int, w: int) -> Constraint:
    """Pays 1 when ``v`` lies between ``u`` and ``w``."""
    if len({u, v, w}) != 3:
        raise InstanceError("betweenness vertices must be pairwise distinct")
    return Constraint.from_mapping((u, v, w), {(0, 1, 2): 1.0, (2, 1, 0): 1.0})


@dataclass(frozen=True)
class Instance:
    n: int
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.n < 0:
            raise InstanceError(f"vertex count must be non-negative, got {self.n}")
        for i, c in enumerate(self.constraints):
            for v in c.scope:
                if v >= self.n:
                    raise InstanceError(f"constraint {i}: vertex id {v} out of range for n={self.n}")

    @cached_property
    def incident(self) -> tuple[tuple[int, ...], ...]:
        """Indices of the constraints whose scope contains each vertex."""
        inc: list[list[int]] = [[] for _ in range(self.n)]
        for i, c in enumerate(self.constraints):
            for v in c.scope:
                inc[v].append(i)
        return tuple(tuple(x) for x in inc)

    @cached_property
    def neighbors(self) -> tuple[frozenset[int], ...]:
        """N(u): u itself plus every vertex sharing a constraint with it."""
        out = []
        for u in range(self.n):
            members = {u}
            for i in self.incident[u]:
                members.update(self.constraints[i].scope)
            out.append(frozenset(members))
        return tuple(out)

    @property
    def B(self) -> int:
        return max((len(x) for x in self.incident), default=0)

    @property
    def k(self) -> int:
        return max((c.arity for c in self.constraints), default=0)


def _format_pattern(p: Sequence[int]) -> str:
    return ",".join(str(i) for i in p)


def parse_instance(text: str) -> Instance:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"invalid JSON: {exc}") from exc
    if not isinstance(data, dict) or "n" not in data:
        raise InstanceError("instance must be an object with fields 'n' and 'constraints'")
    n = data["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise InstanceError(f"'n' must be a non-negative integer, got {n!r}")
    raw = data.get("constraints", [])
    if not isinstance(raw, list):
        raise InstanceError("'constraints' must be an array")

    constraints = []
    for i, item in enumerate(raw):
        try:
            scope = item["scope"]
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in scope):
                raise InstanceError("scope entries must be integers")
            for v in scope:
                if not 0 <= v < n:
                    raise InstanceError(f"vertex id {v} out of range for n={n}")
            if len(set(scope)) != len(scope):
                raise InstanceError(f"duplicate vertex in scope {scope}")
            table = {}
            for key, value in item.get("payoffs", {}).items():
                try:
                    pattern = tuple(int(s) for s in key.split(","))
                except ValueError:
                    raise InstanceError(f"bad pattern key {key!r}") from None
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise InstanceError(f"payoff for {key!r} is not a number")
                table[pattern] = value
            constraints.append(Constraint.from_mapping(scope, table))
        except InstanceError as exc:
            raise InstanceError(f"constraint {i}: {exc}") from None
        except (KeyError, TypeError, AttributeError):
            raise InstanceError(f"constraint {i}: expected fields 'scope' and 'payoffs'") from None
    return Instance(n, tuple(constraints))


def serialize_instance(instance: Instance) -> str:
    """Canonical JSON text: every pattern key written out, in lexicographic order."""
    constraints = []
    for c in instance.constraints:
        payoffs = {_format_pattern(p): v for p, v in zip(patterns(c.arity), c.payoffs)}
        constraints.append({"scope": list(c.scope), "payoffs": payoffs})
    return json.dumps({"n": instance.n, "constraints": constraints}, indent=1) + "\n"


def load_instance(path) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_instance(instance))
