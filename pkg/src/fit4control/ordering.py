"""Reorderings of mode indices.

Two constructions are provided. The snake bijection fills N^d with unit steps
through a nested sequence of odd boxes {1..m_1} x ... x {1..m_d}: each
schedule step bumps one odd box dimension by 2 and appends two boustrophedon
slabs, so every previously computed prefix is preserved. The greedy (alpha)
reordering consumes a symmetric nonzero-pattern oracle and always appends the
smallest unplaced index coupled to the current set, which makes every leading
truncation of the reordered coupling matrix connected by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .coupling import coupling_entry
from .domain import SpectralDecomposition
from .errors import ConfigError, StrandedComponentError
from .spectral import simplicity_check

ReorderingKind = str  # identity | alpha-greedy | snake-induced | user


@dataclass(frozen=True)
class Reordering:
    """A prefix h(1..N) of a reordering of N (1-based, pairwise distinct)."""

    table: tuple[int, ...]
    kind: ReorderingKind = "user"

    def __post_init__(self):
        if len(set(self.table)) != len(self.table):
            raise ConfigError("reordering entries must be pairwise distinct")
        if any(j < 1 for j in self.table):
            raise ConfigError("reordering entries are 1-based positive integers")

    def __len__(self) -> int:
        return len(self.table)

    def __getitem__(self, l: int) -> int:
        """h(l) for 1-based l."""
        return self.table[l - 1]


def identity_reordering(n: int) -> Reordering:
    return Reordering(tuple(range(1, n + 1)), "identity")


def _box_snake(m: tuple[int, ...]) -> list[tuple[int, ...]]:
    """Unit-step enumeration of {1..m_1} x ... x {1..m_d} (all m_i odd),
    starting at (1,..,1) and ending at m: boustrophedon layer stacking."""
    if len(m) == 0:
        return [()]
    if len(m) == 1:
        return [(i,) for i in range(1, m[0] + 1)]
    base = _box_snake(m[:-1])
    out: list[tuple[int, ...]] = []
    for j in range(m[-1]):
        layer = base if j % 2 == 0 else reversed(base)
        out.extend(pt + (j + 1,) for pt in layer)
    return out


@dataclass(frozen=True)
class SnakeBijection:
    """Prefix of a unit-step bijection N -> N^d.

    ``table[j]`` is the (1-based) grid point visited at step j+1; ``schedule``
    records the odd-box milestones m(1), m(2), ... reached while extending.
    """

    dimension: int
    table: np.ndarray  # (M, d) int
    schedule: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return int(self.table.shape[0])

    def __getitem__(self, j: int) -> tuple[int, ...]:
        """h(j) for 1-based j."""
        return tuple(int(v) for v in self.table[j - 1])


def snake(
    dimension: int,
    count: int,
    schedule_axis: Callable[[int], int] | None = None,
) -> SnakeBijection:
    """First ``count`` entries of the snake bijection of N onto N^d.

    ``schedule_axis`` maps the (0-based) extension step l to the 1-based axis
    to grow; the default is the cyclic choice l mod d + 1. Each extension
    appends two slabs along the chosen axis, traversing a snake of the
    complementary box backwards then forwards, so the previous prefix, its
    unit-step property and the odd-box coverage milestones are all preserved.
    """
    if dimension < 1 or count < 1:
        raise ConfigError("need dimension >= 1 and count >= 1")
    m = [1] * dimension
    table: list[tuple[int, ...]] = [(1,) * dimension]
    milestones = [tuple(m)]
    step = 0
    while len(table) < count:
        axis = (step % dimension) if schedule_axis is None else schedule_axis(step) - 1
        if not 0 <= axis < dimension:
            raise ConfigError(f"schedule chose axis {axis + 1} outside 1..{dimension}")
        complement = tuple(m[i] for i in range(dimension) if i != axis)
        g = _box_snake(complement)
        for layer_offset, order in ((1, reversed(g)), (2, g)):
            value = m[axis] + layer_offset
            for pt in order:
                table.append(pt[:axis] + (value,) + pt[axis:])
        m[axis] += 2
        milestones.append(tuple(m))
        step += 1
    arr = np.array(table[:count], dtype=np.int64)
    return SnakeBijection(dimension, arr, tuple(milestones))


def alpha_reordering(
    pattern: np.ndarray | Callable[[int, int], bool],
    n: int,
    universe: int | None = None,
) -> Reordering:
    """Greedy reordering from a symmetric nonzero-pattern oracle.

    Starts at index 1; each next entry is the smallest index outside the
    placed set that couples to some placed index. By construction the pattern
    graph restricted to every prefix {h(1),...,h(k)} is connected, so the
    reordered coupling matrix is connected at every truncation size.

    ``universe`` bounds the indices the oracle is consulted on (defaults to
    the matrix size, or to n for a callable). Raises StrandedComponentError
    when no in-universe unplaced index couples to the placed set before n
    entries are placed.
    """
    if n < 1:
        raise ConfigError("need n >= 1")
    if callable(pattern):
        couples = pattern
        universe = n if universe is None else universe
    else:
        mat = np.asarray(pattern)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ConfigError("pattern matrix must be square")
        if mat.shape[0] < n:
            raise ConfigError(f"pattern covers {mat.shape[0]} indices, need {n}")
        bool_mat = mat != 0 if mat.dtype != bool else mat
        if not np.array_equal(bool_mat, bool_mat.T):
            raise ConfigError("pattern must be symmetric")

        def couples(j: int, k: int) -> bool:
            return bool(bool_mat[j - 1, k - 1])

        universe = mat.shape[0] if universe is None else min(universe, mat.shape[0])

    placed = [1]
    placed_set = {1}
    while len(placed) < n:
        candidate = None
        for j in range(2, universe + 1):
            if j in placed_set:
                continue
            if any(couples(i, j) for i in placed):
                candidate = j
                break
        if candidate is None:
            raise StrandedComponentError(placed, n)
        placed.append(candidate)
        placed_set.add(candidate)
    return Reordering(tuple(placed), "alpha-greedy")


def snake_induced_reordering(
    spec: SpectralDecomposition, snake_table: SnakeBijection, length: int
) -> Reordering:
    """Reordering of sorted-eigenvalue indices induced by a snake through the
    mode multi-indices of an analytic box spectrum."""
    if spec.mode_indices is None:
        raise ConfigError("snake-induced reorderings need an analytic box spectrum")
    position = {k: i + 1 for i, k in enumerate(spec.mode_indices)}
    table = []
    for l in range(1, length + 1):
        k = snake_table[l]
        if k not in position:
            raise ConfigError(
                f"snake entry {k} is outside the computed spectrum; raise the mode count"
            )
        table.append(position[k])
    return Reordering(tuple(table), "snake-induced")


def sine_product_moment(k: int) -> float:
    """Reference value -4k(1+k)/((1+2k)^2 pi^2) of the normalized first-moment
    sine product integral; tends to -1/pi^2 monotonically as k grows."""
    if k < 1:
        raise ConfigError("mode number k is >= 1")
    return -4.0 * k * (1 + k) / ((1 + 2 * k) ** 2 * math.pi**2)


def sine_product_moment_antiderivative(k: int, length: float = 1.0) -> float:
    """(1/L^2) integral_0^L x sin(k pi x / L) sin((k+1) pi x / L) dx evaluated
    through the exact antiderivative of the product-to-sum expansion."""
    if k < 1 or length <= 0:
        raise ConfigError("need k >= 1 and positive length")

    def moment(a: int) -> float:
        # (1/L^2) integral_0^L x cos(a pi x / L) dx, a != 0
        api = a * math.pi
        return math.sin(api) / api + (math.cos(api) - 1.0) / api**2

    return 0.5 * (moment(1) - moment(2 * k + 1))


def sine_product_moment_quadrature(k: int, length: float = 1.0, grid: int = 2000) -> float:
    """Same normalized integral through grid quadrature on interior nodes."""
    h = length / (grid + 1)
    x = h * np.arange(1, grid + 1)
    f = x * np.sin(k * math.pi * x / length) * np.sin((k + 1) * math.pi * x / length)
    return float(np.sum(f) * h / length**2)


@dataclass(frozen=True)
class ConsecutiveCouplingCheck:
    """Per-step coupling entries of Z between consecutive snake modes."""

    entries: tuple[float, ...]
    nonzero: tuple[bool, ...]
    zero_threshold: float

    @property
    def all_nonzero(self) -> bool:
        return all(self.nonzero)


def consecutive_coupling_check(
    spec: SpectralDecomposition,
    z_values: np.ndarray,
    snake_table: SnakeBijection,
    length: int,
    zero_threshold: float = 1e-12,
    simplicity_tolerance: float | None = None,
) -> ConsecutiveCouplingCheck:
    """Evaluate the coupling integral of Z between consecutive snake modes of
    an analytic box spectrum, and compare |entry| against the threshold.

    The box sides must give a simple spectrum (pick Q-linearly independent
    squared-side products); degenerate eigenvalues are refused.
    """
    if spec.mode_indices is None:
        raise ConfigError("consecutive coupling checks need an analytic box spectrum")
    if len(simplicity_check(spec, simplicity_tolerance)) != spec.count:
        raise ConfigError("box spectrum has degenerate eigenvalues; choose non-resonant sides")
    ordering = snake_induced_reordering(spec, snake_table, length + 1)
    z_flat = np.asarray(z_values).reshape(-1)
    entries = []
    for l in range(1, length + 1):
        a, b = ordering[l] - 1, ordering[l + 1] - 1
        entries.append(
            coupling_entry(
                z_flat,
                spec.eigenfunctions[a],
                spec.eigenfunctions[b],
                spec.quadrature_weights,
            )
        )
    flags = tuple(abs(e) > zero_threshold for e in entries)
    return ConsecutiveCouplingCheck(tuple(entries), flags, zero_threshold)


def default_snake_box_sides(dimension: int) -> tuple[float, ...]:
    """Orthotope sides r_i = p_i^(1/4) with distinct primes p_i: the products
    of squared sides over any d-1 axes are then Q-linearly independent, which
    keeps the box spectrum simple at every scaling."""
    primes = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    if dimension > len(primes):
        raise ConfigError("default sides cover dimensions up to 10")
    if dimension == 1:
        return (1.0,)
    return tuple(p ** 0.25 for p in primes[:dimension])
