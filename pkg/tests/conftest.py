import math
from itertools import permutations

import pytest
from hypothesis import strategies as st

from ordercsp import Constraint, Instance, mas_constraint
from ordercsp.generators import GenSpec

ACCEPTANCE_LINES = []


def triangle():
    return Instance(3, (mas_constraint(0, 1), mas_constraint(1, 2), mas_constraint(2, 0)))


def path3():
    return Instance(3, (mas_constraint(0, 1), mas_constraint(1, 2)))


@pytest.fixture
def tri():
    return triangle()


def acceptance_corpus():
    """50 seeded instances: n in 6..10, B in {2, 3}, arity <= 3."""
    families = ("mas", "betweenness", "random-table")
    out = []
    for i in range(50):
        spec = GenSpec(families[i % 3], n=6 + i % 5, B=2 + i % 2, seed=1000 + i, k=2 + (i // 3) % 2)
        out.append((spec, spec.build()))
    return out


@st.composite
def instances(draw, max_n=6, max_k=3, max_constraints=5):
    n = draw(st.integers(1, max_n))
    constraints = []
    for _ in range(draw(st.integers(0, max_constraints))):
        k = draw(st.integers(1, min(max_k, n)))
        scope = draw(st.permutations(range(n)))[:k]
        payoffs = draw(st.lists(st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.0]),
                                min_size=math.factorial(k), max_size=math.factorial(k)))
        constraints.append(Constraint(tuple(scope), tuple(payoffs)))
    return Instance(n, tuple(constraints))


def all_orderings(n):
    return list(permutations(range(n)))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
