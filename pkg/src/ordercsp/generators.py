"""Seeded bounded-occurrence instance families and the boolean-CSP encoding."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

from .model import (MAX_ARITY, Constraint, Instance, InstanceError, betweenness_constraint,
                    mas_constraint, patterns)
from .solvers import make_rng

FAMILIES = ("mas", "betweenness", "random-table")
MAX_BOOLEAN_ARITY = MAX_ARITY // 2


@dataclass(frozen=True)
class GenSpec:
    family: str
    n: int
    B: int
    seed: int
    k: int = 2

    def build(self) -> Instance:
        if self.family == "mas":
            return gen_mas(self.n, self.B, self.seed)
        if self.family == "betweenness":
            return gen_betweenness(self.n, self.B, self.seed)
        if self.family == "random-table":
            return gen_random_table(self.n, self.B, self.k, self.seed)
        raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")


def _fill(n: int, B: int, k: int, rng, max_rejections: int) -> list[tuple[int, ...]]:
    """Random k-vertex scopes added until ``max_rejections`` draws in a row fail.

    A draw fails if it repeats a scope or touches a vertex already in B
    constraints.
    """
    load = [0] * n
    seen: set[tuple[int, ...]] = set()
    scopes = []
    misses = 0
    while misses < max_rejections:
        scope = tuple(int(v) for v in rng.choice(n, size=k, replace=False))
        if scope in seen or any(load[v] >= B for v in scope):
            misses += 1
            continue
        misses = 0
        seen.add(scope)
        scopes.append(scope)
        for v in scope:
            load[v] += 1
    return scopes


def _check(n: int, B: int, k: int) -> None:
    if B < 0:
        raise ValueError(f"B must be non-negative, got {B}")
    if n < k:
        raise ValueError(f"need n >= {k}, got n={n}")


def gen_mas(n: int, B: int, seed: int, max_rejections: int | None = None) -> Instance:
    """Random simple digraph with total degree at most B, one edge constraint per arc."""
    _check(n, B, 2)
    rng = make_rng(seed)
    scopes = _fill(n, B, 2, rng, max_rejections or 20 * n) if B else []
    return Instance(n, tuple(mas_constraint(u, v) for u, v in scopes))


def gen_betweenness(n: int, B: int, seed: int, max_rejections: int | None = None) -> Instance:
    _check(n, B, 3)
    rng = make_rng(seed)
    scopes = _fill(n, B, 3, rng, max_rejections or 20 * n) if B else []
    return Instance(n, tuple(betweenness_constraint(*s) for s in scopes))


def gen_random_table(n: int, B: int, k: int, seed: int, max_rejections: int | None = None) -> Instance:
    """Random k-ary scopes with payoffs drawn uniformly from [0, 1]."""
    if not 1 <= k <= MAX_ARITY:
        raise ValueError(f"k must be in 1..{MAX_ARITY}, got {k}")
    _check(n, B, k)
    rng = make_rng(seed)
    scopes = _fill(n, B, k, rng, max_rejections or 20 * n) if B else []
    constraints = []
    for scope in scopes:
        table = rng.random(len(patterns(k)))
        constraints.append(Constraint(scope, tuple(float(p) for p in table)))
    return Instance(n, tuple(constraints))


@dataclass(frozen=True)
class BooleanClause:
    """A payoff on the 0/1 values of ``variables``; missing assignments pay 0."""

    variables: tuple[int, ...]
    table: Mapping[tuple[int, ...], float]

    def __call__(self, assignment: Sequence[int]) -> float:
        return float(self.table.get(tuple(assignment[x] for x in self.variables), 0.0))


def encode_boolean_csp(n_vars: int, clauses: Sequence[BooleanClause]) -> Instance:
    """Ordering instance on 2*n_vars vertices encoding a boolean CSP.

    Variable ``x`` becomes vertices ``2x`` (left) and ``2x + 1`` (right);
    ``x = 1`` iff the left vertex precedes the right one. A clause on j
    variables becomes a 2j-ary constraint that pays the clause value of the
    decoded assignment.
    """
    constraints = []
    for ci, clause in enumerate(clauses):
        j = len(clause.variables)
        if not 1 <= j <= MAX_BOOLEAN_ARITY:
            raise InstanceError(f"clause {ci}: arity {j} outside 1..{MAX_BOOLEAN_ARITY}")
        if len(set(clause.variables)) != j or any(not 0 <= x < n_vars for x in clause.variables):
            raise InstanceError(f"clause {ci}: bad variables {clause.variables}")
        scope = tuple(v for x in clause.variables for v in (2 * x, 2 * x + 1))
        payoffs = []
        for pattern in patterns(2 * j):
            where = {local: i for i, local in enumerate(pattern)}
            bits = tuple(int(where[2 * t] < where[2 * t + 1]) for t in range(j))
            payoffs.append(float(clause.table.get(bits, 0.0)))
        constraints.append(Constraint(scope, tuple(payoffs)))
    return Instance(2 * n_vars, tuple(constraints))


def all_boolean_tables(arity: int):
    """Every 0/1 payoff table on ``arity`` boolean inputs."""
    keys = list(product((0, 1), repeat=arity))
    for bits in product((0.0, 1.0), repeat=len(keys)):
        yield dict(zip(keys, bits))
