"""Character expansion of the neighbourhood payoff f over the bucket cube.

Bucket ``b`` in ``1..D`` (``D = 2**L``) is encoded as the L bits of ``b - 1``,
least significant first, with bit value 0 read as -1 and 1 as +1. Member
``i`` of a neighbourhood owns boolean variables ``i*L .. i*L + L - 1``, so
a point of the cube is an integer ``z`` whose bit ``j`` is variable ``j``,
and the bucket of member ``i`` is ``((z >> i*L) & (D - 1)) + 1``. A
character index ``S`` is likewise a bitmask over the variables.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from .buckets import Neighborhood, constraint_expectation
from .model import GuardError

MAX_CUBE_BITS = 20
NONZERO_TOL = 1e-9
CHECK_TOL = 1e-9


@dataclass(frozen=True)
class CubeEncoding:
    L: int

    @property
    def D(self) -> int:
        return 1 << self.L

    def encode(self, bucket: int) -> tuple[int, ...]:
        if not 1 <= bucket <= self.D:
            raise ValueError(f"bucket {bucket} outside 1..{self.D}")
        return tuple(1 if (bucket - 1) >> i & 1 else -1 for i in range(self.L))

    def decode(self, point) -> int:
        return 1 + sum(1 << i for i, s in enumerate(point) if s == 1)


def fwht(values: np.ndarray) -> np.ndarray:
    """Character coefficients of a function on {-1,+1}^N given as a 2**N table.

    Entry ``z`` of ``values`` is the function at the point with coordinate
    ``j`` equal to +1 iff bit ``j`` of ``z`` is set. Entry ``S`` of the
    result is ``E[f * chi_S]``.
    """
    a = np.array(values, dtype=np.float64)
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError("table length must be a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        lo, hi = a[:, 0, :], a[:, 1, :]
        a = np.stack((lo + hi, hi - lo), axis=1)
        h *= 2
    return a.reshape(size) / size


def characters(n_vars: int) -> np.ndarray:
    """Matrix of chi_S(z), rows S, columns z, built directly from parities."""
    z = np.arange(1 << n_vars, dtype=np.uint32)
    minus = ~z & np.uint32((1 << n_vars) - 1)  # coordinates equal to -1
    odd = np.bitwise_count(z[:, None] & minus[None, :]) & 1
    return np.where(odd == 0, 1, -1).astype(np.int8)


@dataclass
class FourierTable:
    variables: list[tuple[int, int]]  # (vertex, bit)
    coefficients: np.ndarray  # indexed by variable bitmask
    values: np.ndarray  # f on every cube point

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def mask(self, subset) -> int:
        index = {var: j for j, var in enumerate(self.variables)}
        return sum(1 << index[var] for var in subset)

    def subset(self, mask: int) -> list[tuple[int, int]]:
        return [var for j, var in enumerate(self.variables) if mask >> j & 1]

    def coefficient(self, subset) -> float:
        return float(self.coefficients[self.mask(subset)])

    def vertex_mask(self, vertex: int) -> int:
        return sum(1 << j for j, (v, _) in enumerate(self.variables) if v == vertex)

    def nonzero_count(self, tol: float = NONZERO_TOL) -> int:
        return int(np.count_nonzero(np.abs(self.coefficients) > tol))

    def reconstruct(self, z: int) -> float:
        """sum_S f_S chi_S at cube point ``z``."""
        size = self.coefficients.shape[0]
        minus = ~int(z) & (size - 1)
        odd = np.bitwise_count(np.arange(size, dtype=np.int64) & minus) & 1
        return float(np.sum(self.coefficients * np.where(odd, -1.0, 1.0)))


def _check_guard(nbhd: Neighborhood, D: int) -> int:
    if D < 1 or D & (D - 1):
        raise ValueError(f"D must be a power of two, got {D}")
    L = D.bit_length() - 1
    if L * len(nbhd.members) > MAX_CUBE_BITS:
        raise GuardError(
            f"vertex {nbhd.center}: {L} bits x {len(nbhd.members)} members exceeds "
            f"the {MAX_CUBE_BITS}-bit transform limit")
    return L


def payoff_table(nbhd: Neighborhood, D: int) -> np.ndarray:
    """f at every point of the cube, one constraint table at a time."""
    L = _check_guard(nbhd, D)
    z = np.arange(1 << (L * len(nbhd.members)), dtype=np.int64)
    slot = {v: i for i, v in enumerate(nbhd.members)}
    f = np.zeros(z.shape[0])
    for c in nbhd.local_constraints:
        k = c.arity
        small = np.array([constraint_expectation(c, [b + 1 for b in combo])
                          for combo in product(range(D), repeat=k)])
        flat = np.zeros_like(z)
        for v in c.scope:
            flat = flat * D + ((z >> (slot[v] * L)) & (D - 1))
        f += small[flat]
    return f


def transform(nbhd: Neighborhood, D: int) -> FourierTable:
    L = _check_guard(nbhd, D)
    variables = [(v, i) for v in nbhd.members for i in range(L)]
    values = payoff_table(nbhd, D)
    return FourierTable(variables, fwht(values), values)


def sparsity_bound(nbhd: Neighborhood, D: int) -> int:
    """T * D**k: each of the T constraints touches at most k*L variables."""
    return nbhd.T * D ** nbhd.arity


def _center_axis(nbhd: Neighborhood, values: np.ndarray, D: int) -> np.ndarray:
    """Reshape the cube table to (high context, center bucket, low context)."""
    L = D.bit_length() - 1
    c = nbhd.members.index(nbhd.center)
    return values.reshape(-1, D, 1 << (c * L))


def pick_s_star(table: FourierTable, center: int) -> tuple[int, int] | None:
    """Largest |coefficient| among characters touching the center.

    Ties go to the lexicographically smallest variable list; the chosen
    center bit is the lowest one in S*. Returns (S* mask, i* variable index),
    or None when every such coefficient is zero.
    """
    cmask = table.vertex_mask(center)
    masks = np.nonzero(np.arange(table.coefficients.shape[0]) & cmask)[0]
    if masks.size == 0:
        return None
    mags = np.abs(table.coefficients[masks])
    top = mags.max()
    if top <= NONZERO_TOL:
        return None
    tied = masks[mags >= top - 1e-15]

    def var_list(m):
        return [j for j in range(table.n_vars) if m >> j & 1]

    s_star = int(min(tied, key=var_list))
    i_star = next(j for j in var_list(s_star) if cmask >> j & 1)
    return s_star, i_star


@dataclass
class ImprovementStats:
    gap: float
    max_coeff: float
    expected_improvement: float
    center_l1: float


def improvement_statistics(nbhd: Neighborhood, D: int, table: FourierTable | None = None) -> ImprovementStats:
    if table is None:
        table = transform(nbhd, D)
    grid = _center_axis(nbhd, table.values, D)
    gap = float((grid.max(axis=1) - grid.min(axis=1)).max())
    expected = float((grid.max(axis=1) - grid.mean(axis=1)).mean())
    cmask = table.vertex_mask(nbhd.center)
    touching = (np.arange(table.coefficients.shape[0]) & cmask) != 0
    center_coeffs = np.abs(table.coefficients[touching])
    max_coeff = float(center_coeffs.max()) if center_coeffs.size else 0.0
    return ImprovementStats(gap, max_coeff, expected, float(center_coeffs.sum()))


def flip_construction(table: FourierTable, s_star: int, i_star: int) -> Callable[[np.ndarray], np.ndarray]:
    """The map X0 -> X0' on cube points (integers or integer arrays).

    Bit ``i_star`` is multiplied by sigma * chi_{S*}(point); every other
    coordinate is kept. Only the center's bits change.
    """
    if not s_star >> i_star & 1:
        raise ValueError("i_star must belong to S*")
    sigma = 1 if table.coefficients[s_star] >= 0 else -1
    full = (1 << table.n_vars) - 1

    def flip(z):
        z = np.asarray(z, dtype=np.int64)
        chi = np.where(np.bitwise_count(~z & full & s_star) & 1, -1, 1)
        return np.where(sigma * chi < 0, z ^ (1 << i_star), z)

    return flip


def flip_gain(table: FourierTable, s_star: int, i_star: int) -> float:
    """E[f(X0', X) - f(X0, X)] by enumerating the whole cube."""
    flip = flip_construction(table, s_star, i_star)
    moved = flip(np.arange(table.values.shape[0], dtype=np.int64))
    return float(np.mean(table.values[moved] - table.values))


@dataclass
class Certificate:
    vertex: int
    members: list[int]
    T: int
    k: int
    D: int
    L: int
    n_vars: int
    gap: float
    center_l1: float
    max_coeff: float
    s_star: list[list[int]] | None
    i_star: list[int] | None
    flip_gain: float
    expected_improvement: float
    bound: float
    nonzero_count: int
    sparsity_bound: int
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def theorem2_certificate(nbhd: Neighborhood, D: int | None = None) -> Certificate:
    """Check the improvement chain for the center of ``nbhd`` exactly.

    (a) gap <= 2 * sum of |f_S| over S touching the center
    (b) max_coeff >= gap / (2 T D^k)
    (c) expected improvement >= max_coeff
    (d) expected improvement >= gap / (2 T D^k)
    plus the sparsity count and the flip gain equal to max_coeff.
    ``D`` defaults to the smallest power of two above |N(u)|.
    """
    if D is None:
        D = nbhd.D
    L = _check_guard(nbhd, D)
    table = transform(nbhd, D)
    stats = improvement_statistics(nbhd, D, table)
    denom = 2 * nbhd.T * D ** nbhd.arity
    bound = stats.gap / denom if denom else 0.0
    pick = pick_s_star(table, nbhd.center)
    if pick is None:
        s_star = i_star = None
        gain = 0.0
    else:
        s_star, i_star = pick
        gain = flip_gain(table, s_star, i_star)
    nonzero = table.nonzero_count()
    sparsity = sparsity_bound(nbhd, D)
    tol = CHECK_TOL
    checks = {
        "a_gap_vs_l1": stats.gap <= 2 * stats.center_l1 + tol,
        "b_max_coeff_vs_bound": stats.max_coeff >= bound - tol,
        "c_improvement_vs_max_coeff": stats.expected_improvement >= stats.max_coeff - tol,
        "d_improvement_vs_bound": stats.expected_improvement >= bound - tol,
        "flip_gain_equals_max_coeff": math.isclose(gain, stats.max_coeff, rel_tol=0, abs_tol=tol),
        "sparsity": nonzero <= sparsity,
    }
    return Certificate(
        vertex=nbhd.center,
        members=list(nbhd.members),
        T=nbhd.T,
        k=nbhd.arity,
        D=D,
        L=L,
        n_vars=table.n_vars,
        gap=stats.gap,
        center_l1=stats.center_l1,
        max_coeff=stats.max_coeff,
        s_star=None if s_star is None else [list(v) for v in table.subset(s_star)],
        i_star=None if i_star is None else list(table.variables[i_star]),
        flip_gain=gain,
        expected_improvement=stats.expected_improvement,
        bound=bound,
        nonzero_count=nonzero,
        sparsity_bound=sparsity,
        checks=checks,
    )
