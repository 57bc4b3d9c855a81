"""Coupling matrices b_{jk} = integral of W phi_{h(j)} phi_{h(k)} and the
connectivity checks on their nonzero pattern.

Connectivity of a symmetric matrix means: the graph on {1..n} with an edge
{j,k} wherever |b_{jk}| exceeds the zero threshold (j != k) is connected. This
is equivalent to the chain condition "some product b_{j r1} b_{r1 r2} ...
b_{rl k} is nonzero for every pair j,k". Matrices are computed once per
unordered pair, so symmetry holds exactly.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import ComputationalDomain, Potential, SpectralDecomposition
from .errors import ConfigError, DegenerateModeError
from .spectral import simplicity_check

#: relative zero-threshold default: quadrature error floor
ZERO_THRESHOLD_FACTOR = 1e-8


def coupling_entry(
    w_values: np.ndarray,
    phi_a: np.ndarray,
    phi_b: np.ndarray,
    quadrature_weights: np.ndarray,
) -> float:
    """Grid quadrature of W * phi_a * phi_b."""
    w_values = np.asarray(w_values).reshape(-1)
    phi_a = np.asarray(phi_a).reshape(-1)
    phi_b = np.asarray(phi_b).reshape(-1)
    quad = np.asarray(quadrature_weights).reshape(-1)
    if not (w_values.shape == phi_a.shape == phi_b.shape == quad.shape):
        raise ConfigError("shape mismatch in coupling entry")
    if np.any(quad <= 0):
        raise ConfigError("quadrature weights must be positive")
    return float(np.sum(quad * w_values * phi_a * phi_b))


@dataclass(frozen=True)
class CouplingMatrix:
    """Symmetric coupling matrix in a given mode ordering.

    ``ordering[j]`` is the 1-based spectral index h(j+1); entry (j, k) couples
    modes h(j+1) and h(k+1). ``boundary_mass`` (truncated domains only) holds
    each involved mode's quadrature mass on the outer 10% collar, a diagnostic
    for truncation-induced error in the entries.
    """

    entries: np.ndarray
    ordering: tuple[int, ...]
    zero_threshold: float
    spectrum_fingerprint: str
    boundary_mass: np.ndarray | None = None

    @property
    def size(self) -> int:
        return int(self.entries.shape[0])

    def pattern(self, threshold: float | None = None) -> np.ndarray:
        """Boolean off-diagonal nonzero pattern at the given threshold."""
        tau = self.zero_threshold if threshold is None else threshold
        mask = np.abs(self.entries) > tau
        np.fill_diagonal(mask, False)
        return mask


def _collar_mask(domain: ComputationalDomain) -> np.ndarray:
    """Grid points within the outer 10% of any axis extent."""
    masks = []
    for i in range(domain.dimension):
        x = domain.axis_coordinates(i)
        lo, hi = x[0] - domain.spacings[i], x[-1] + domain.spacings[i]
        margin = 0.1 * (hi - lo)
        masks.append((x < lo + margin) | (x > hi - margin))
    mask = masks[0]
    for m in masks[1:]:
        mask = mask[..., None] | m
    return mask.reshape(-1)


def default_zero_threshold(entries: np.ndarray) -> float:
    peak = float(np.max(np.abs(entries))) if entries.size else 0.0
    return ZERO_THRESHOLD_FACTOR * peak


def coupling_matrix(
    spec: SpectralDecomposition,
    w: Potential | np.ndarray,
    ordering: Sequence[int] | None = None,
    n: int | None = None,
    zero_threshold: float | None = None,
    simplicity_tolerance: float | None = None,
) -> CouplingMatrix:
    """Assemble the n x n coupling matrix of W over modes ordering[1..n].

    Refuses to proceed if any requested eigenvalue is not simple: such entries
    are only defined up to a rotation of the degenerate eigenspace.
    """
    w_values = w.flat if isinstance(w, Potential) else np.asarray(w, float).reshape(-1)
    ordering = getattr(ordering, "table", ordering)  # accept Reordering values
    if n is None:
        n = spec.count if ordering is None else len(ordering)
    if ordering is None:
        ordering = tuple(range(1, n + 1))
    else:
        ordering = tuple(int(j) for j in ordering[:n])
    if len(set(ordering)) != n:
        raise ConfigError("ordering entries must be distinct")
    if max(ordering) > spec.count:
        raise ConfigError(
            f"ordering requests mode {max(ordering)} of a {spec.count}-level spectrum"
        )
    simple = set(simplicity_check(spec, simplicity_tolerance))
    bad = [j for j in ordering if j not in simple]
    if bad:
        raise DegenerateModeError(bad)

    quad = spec.quadrature_weights
    rows = spec.eigenfunctions[[j - 1 for j in ordering]]
    weighted = rows * (quad * w_values)
    entries = weighted @ rows.T
    entries = np.triu(entries) + np.triu(entries, 1).T  # exact symmetry
    tau = default_zero_threshold(entries) if zero_threshold is None else float(zero_threshold)

    boundary = None
    if spec.domain is not None and spec.domain.kind == "truncated-confining":
        collar = _collar_mask(spec.domain)
        boundary = np.sqrt(np.sum(quad[collar] * rows[:, collar] ** 2, axis=1))

    return CouplingMatrix(entries, ordering, tau, spec.fingerprint(), boundary)


@dataclass(frozen=True)
class ConnectivityResult:
    connected: bool
    component_labels: tuple[int, ...]  # per index, 0-based component id

    @property
    def components(self) -> list[list[int]]:
        groups: dict[int, list[int]] = {}
        for pos, lab in enumerate(self.component_labels):
            groups.setdefault(lab, []).append(pos + 1)
        return [groups[k] for k in sorted(groups)]


def connectivity(matrix: CouplingMatrix | np.ndarray, zero_threshold: float | None = None) -> ConnectivityResult:
    """Breadth-first connectivity of the off-diagonal nonzero pattern."""
    if isinstance(matrix, CouplingMatrix):
        mask = matrix.pattern(zero_threshold)
    else:
        entries = np.asarray(matrix, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise ConfigError("connectivity needs a square matrix")
        if not np.array_equal(entries, entries.T):
            raise ConfigError("connectivity needs a symmetric matrix")
        tau = default_zero_threshold(entries) if zero_threshold is None else zero_threshold
        mask = np.abs(entries) > tau
        np.fill_diagonal(mask, False)
    n = mask.shape[0]
    labels = [-1] * n
    current = 0
    for start in range(n):
        if labels[start] != -1:
            continue
        labels[start] = current
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(mask[u]):
                if labels[v] == -1:
                    labels[v] = current
                    queue.append(int(v))
        current += 1
    return ConnectivityResult(current == 1, tuple(labels))


@dataclass(frozen=True)
class FrequentConnectivityTable:
    """Per-truncation-size connectivity verdicts plus the desk proxy for
    "connected for infinitely many n": connected throughout a tail window."""

    sizes: tuple[int, ...]
    connected: tuple[bool, ...]
    tail_window: tuple[int, int]
    zero_threshold: float

    @property
    def frequently_connected_desk(self) -> bool:
        lo, hi = self.tail_window
        flags = [c for s, c in zip(self.sizes, self.connected) if lo <= s <= hi]
        return bool(flags) and all(flags)

    @property
    def all_connected(self) -> bool:
        return all(self.connected)

    def to_rows(self) -> list[tuple[int, str]]:
        return [(s, "connected" if c else "split") for s, c in zip(self.sizes, self.connected)]


def frequent_connectivity(
    spec: SpectralDecomposition,
    w: Potential | np.ndarray,
    ordering: Sequence[int] | None = None,
    n_max: int | None = None,
    zero_threshold: float | None = None,
    tail_length: int = 6,
    simplicity_tolerance: float | None = None,
) -> FrequentConnectivityTable:
    """Connectivity of every leading truncation B_n, n = 2..n_max.

    The entries depend only on unordered mode pairs, so the full n_max matrix
    is assembled once and truncated. With an explicit threshold it applies to
    every n; the default threshold is relative to the full matrix.
    """
    if n_max is None:
        n_max = spec.count if ordering is None else len(ordering)
    if n_max < 2:
        raise ConfigError("need n_max >= 2")
    full = coupling_matrix(
        spec, w, ordering, n_max, zero_threshold, simplicity_tolerance
    )
    sizes = tuple(range(2, n_max + 1))
    flags = tuple(
        connectivity(full.entries[:n, :n], full.zero_threshold).connected for n in sizes
    )
    tail = (max(2, n_max - tail_length + 1), n_max)
    return FrequentConnectivityTable(sizes, flags, tail, full.zero_threshold)
