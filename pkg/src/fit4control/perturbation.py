"""Numerical perturbation experiments: homotopy paths with simplicity and
coupling tracking, blow-up (confinement) convergence tables, and seeded Monte
Carlo genericity scans over random potentials.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .certification import CertificationParams, FitCheckResult, fit_for_control_check
from .coupling import coupling_entry
from .domain import ComputationalDomain, Potential, make_domain, sample_potential
from .errors import ConfigError
from .spectral import default_simplicity_tol, discretize, eigensolve


@dataclass(frozen=True)
class HomotopySample:
    mu: float
    eigenvalues: tuple[float, ...]
    min_gap: float
    tracked_entries: tuple[float, ...]
    simplicity_flag: bool
    coupling_flag: bool

    @property
    def flagged(self) -> bool:
        return self.simplicity_flag or self.coupling_flag


@dataclass(frozen=True)
class HomotopyReport:
    samples: tuple[HomotopySample, ...]
    tracked_pairs: tuple[tuple[int, int], ...]
    levels: int
    simplicity_tolerance: float
    zero_threshold: float

    @property
    def flagged_mus(self) -> tuple[float, ...]:
        return tuple(s.mu for s in self.samples if s.flagged)


def homotopy_scan(
    domain: ComputationalDomain,
    v_base: Potential,
    v_target: Potential,
    w: Potential,
    mu_samples: Sequence[float] | int = 11,
    levels: int = 6,
    tracked_pairs: Sequence[tuple[int, int]] | None = None,
    simplicity_tolerance: float | None = None,
    zero_threshold: float = 1e-10,
) -> HomotopyReport:
    """Track spectral gaps and coupling entries along the affine potential
    path V_mu = (1-mu) V_base + mu V_target.

    The two-coefficient form makes the reversed path bitwise identical sample
    by sample (mu <-> 1-mu), so path reversal exactly reverses the flag set.
    Eigenfunction signs are matched to the previous sample by maximal overlap
    before entries are evaluated. A sample is flagged when the minimal gap
    among the first ``levels`` eigenvalues drops below the simplicity
    tolerance, or when a tracked entry falls below the zero threshold; flags
    are recorded, never fatal.
    """
    if isinstance(mu_samples, int):
        mu_values = np.linspace(0.0, 1.0, mu_samples)
    else:
        mu_values = np.asarray(list(mu_samples), dtype=float)
    if mu_values.size < 1:
        raise ConfigError("need at least one path sample")
    if v_base.values.shape != v_target.values.shape:
        raise ConfigError("path endpoints live on different grids")
    if not np.all(np.isfinite(v_target.values - v_base.values)):
        raise ConfigError("path increment must be bounded on the grid")
    if tracked_pairs is None:
        tracked_pairs = [(j, j + 1) for j in range(1, levels)]
    tracked_pairs = [(int(a), int(b)) for a, b in tracked_pairs]
    if any(a < 1 or b < 1 or a > levels or b > levels for a, b in tracked_pairs):
        raise ConfigError("tracked pairs must lie within the computed levels")

    samples: list[HomotopySample] = []
    previous_phi: np.ndarray | None = None
    quad = domain.quadrature_weights
    tol = simplicity_tolerance
    for mu in mu_values:
        values = (1.0 - mu) * v_base.values + mu * v_target.values
        pot = Potential(values, f"path(mu={mu})")
        spec = eigensolve(discretize(domain, pot), levels)
        phi = spec.eigenfunctions.copy()
        if previous_phi is not None:
            overlaps = (previous_phi * quad) @ phi.T
            used: set[int] = set()
            aligned = np.empty_like(phi)
            for j in range(levels):
                row = np.abs(overlaps[j]).copy()
                row[list(used)] = -1.0
                k = int(np.argmax(row))
                used.add(k)
                aligned[j] = phi[k] if overlaps[j, k] >= 0 else -phi[k]
            phi = aligned
        sample_tol = default_simplicity_tol(spec) if tol is None else tol
        gaps = np.diff(spec.eigenvalues)
        min_gap = float(np.min(gaps)) if gaps.size else math.inf
        entries = tuple(
            coupling_entry(w.flat, phi[a - 1], phi[b - 1], quad) for a, b in tracked_pairs
        )
        samples.append(
            HomotopySample(
                mu=float(mu),
                eigenvalues=tuple(float(v) for v in spec.eigenvalues),
                min_gap=min_gap,
                tracked_entries=entries,
                simplicity_flag=min_gap < sample_tol,
                coupling_flag=any(abs(e) < zero_threshold for e in entries),
            )
        )
        previous_phi = phi
    return HomotopyReport(
        samples=tuple(samples),
        tracked_pairs=tuple(tracked_pairs),
        levels=levels,
        simplicity_tolerance=-1.0 if tol is None else tol,
        zero_threshold=zero_threshold,
    )


@dataclass(frozen=True)
class BlowupRow:
    confinement: float
    eigenvalue_errors: tuple[float, ...]
    eigenfunction_errors: tuple[float, ...]
    exterior_mass: tuple[float, ...]  # ||sqrt(V_k) phi_j|| on the exterior


@dataclass(frozen=True)
class BlowupReport:
    rows: tuple[BlowupRow, ...]
    reference_eigenvalues: tuple[float, ...]
    window: tuple[tuple[float, float], ...]


def _window_slices(domain: ComputationalDomain, window: Sequence[Sequence[float]]):
    """Per-axis index slices of the grid nodes strictly inside the window;
    window faces must land on grid nodes (or the outer boundary)."""
    if len(window) != domain.dimension:
        raise ConfigError("window dimension mismatch")
    slices = []
    origin = domain._origin()
    for axis, (lo, hi) in enumerate(window):
        h = domain.spacings[axis]
        n = domain.grid_points_per_side[axis]
        i_lo = (lo - origin[axis]) / h
        i_hi = (hi - origin[axis]) / h
        if abs(i_lo - round(i_lo)) > 1e-9 or abs(i_hi - round(i_hi)) > 1e-9:
            raise ConfigError(
                f"window face on axis {axis + 1} does not align with the grid"
            )
        i_lo, i_hi = int(round(i_lo)), int(round(i_hi))
        if not 0 <= i_lo < i_hi <= n + 1:
            raise ConfigError(f"window on axis {axis + 1} leaves the domain")
        # nodes i_lo+1 .. i_hi-1 (1-based grid indexing) are interior to the window
        if i_hi - i_lo - 1 < 3:
            raise ConfigError("window too small: fewer than 3 interior nodes per axis")
        slices.append(slice(i_lo, i_hi - 1))
    return tuple(slices)


def subwindow_domain(
    domain: ComputationalDomain, window: Sequence[Sequence[float]]
) -> tuple[ComputationalDomain, tuple[slice, ...]]:
    """The window as its own Dirichlet domain on the aligned sub-grid, plus
    the index slices embedding it into the parent grid."""
    slices = _window_slices(domain, window)
    sides = [hi - lo for lo, hi in window]
    counts = [s.stop - s.start for s in slices]
    kind = "interval" if domain.dimension == 1 else "orthotope"
    return make_domain(kind, sides, counts), slices


def blowup_experiment(
    domain: ComputationalDomain,
    window: Sequence[Sequence[float]],
    v_window: Potential,
    v_bar: Potential,
    confinement_levels: Sequence[float],
    level_count: int = 1,
) -> BlowupReport:
    """Observe spectral convergence under blow-up potentials.

    For each confinement k, the potential equals ``v_window`` inside the
    window and ``v_bar + k`` outside; eigenpairs of the full domain are
    compared against the Dirichlet reference on the window (extension by
    zero), and the exterior mass ||sqrt(V_k) phi_j|| outside the window is
    recorded (negative exterior potentials are clipped at zero for this
    diagnostic). k = 0 is allowed and reproduces the unmodified operator when
    ``v_window`` matches ``v_bar`` on the window.
    """
    sub, slices = subwindow_domain(domain, window)
    if v_window.values.shape != sub.grid_shape:
        raise ConfigError(
            f"window potential shape {v_window.values.shape} != window grid {sub.grid_shape}"
        )
    if v_bar.values.shape != domain.grid_shape:
        raise ConfigError("background potential must live on the full grid")
    reference = eigensolve(discretize(sub, v_window), level_count)

    inside = np.zeros(domain.grid_shape, dtype=bool)
    inside[slices] = True
    inside_flat = inside.reshape(-1)
    quad = domain.quadrature_weights

    extended = np.zeros((level_count, domain.total_points))
    for j in range(level_count):
        block = np.zeros(domain.grid_shape)
        block[slices] = reference.eigenfunctions[j].reshape(sub.grid_shape)
        extended[j] = block.reshape(-1)

    rows = []
    for k in confinement_levels:
        values = np.where(inside, 0.0, v_bar.values + float(k))
        values[slices] = v_window.values
        pot = Potential(values, f"blowup(k={k})")
        spec = eigensolve(discretize(domain, pot), level_count)
        lam_err = tuple(
            float(abs(spec.eigenvalues[j] - reference.eigenvalues[j]))
            for j in range(level_count)
        )
        phi_err = []
        mass = []
        for j in range(level_count):
            phi = spec.eigenfunctions[j]
            if np.sum(quad * phi * extended[j]) < 0:
                phi = -phi
            phi_err.append(float(np.sqrt(np.sum(quad * (phi - extended[j]) ** 2))))
            vk_out = np.clip(pot.flat[~inside_flat], 0.0, None)
            mass.append(
                float(np.sqrt(np.sum(quad[~inside_flat] * vk_out * phi[~inside_flat] ** 2)))
            )
        rows.append(BlowupRow(float(k), lam_err, tuple(phi_err), tuple(mass)))
    return BlowupReport(
        rows=tuple(rows),
        reference_eigenvalues=tuple(float(v) for v in reference.eigenvalues),
        window=tuple((float(lo), float(hi)) for lo, hi in window),
    )


@dataclass(frozen=True)
class ScanSample:
    index: int
    seed: int
    passed: bool
    failure_reasons: tuple[str, ...]
    first_resonant_prefix: int | None


@dataclass(frozen=True)
class ScanReport:
    samples: tuple[ScanSample, ...]
    pass_fraction: float
    seed: int
    amplitude: float
    knots: int
    params: CertificationParams

    def failure_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.samples:
            for r in s.failure_reasons:
                counts[r] = counts.get(r, 0) + 1
        return counts


def genericity_scan(
    domain: ComputationalDomain,
    w: Potential,
    sample_count: int = 100,
    seed: int = 0,
    amplitude: float = 10.0,
    knots: int = 8,
    params: CertificationParams = CertificationParams(levels=8),
    threads: int = 1,
) -> ScanReport:
    """Monte Carlo estimate of how often a random potential passes the desk
    certification against a fixed W.

    Sample i draws a piecewise-linear potential from seed ``seed + i``; the
    per-sample verdicts are merged by sample index, so the report is
    reproducible for a given seed regardless of thread count. Individual
    sample failures are recorded, never fatal.
    """
    if sample_count < 1:
        raise ConfigError("need at least one sample")

    def run(index: int) -> ScanSample:
        sample_seed = seed + index
        v = sample_potential(
            domain,
            f"random-piecewise-linear(seed={sample_seed}, amp={amplitude}, knots={knots})",
        )
        spec = eigensolve(discretize(domain, v), params.solve_count)
        check: FitCheckResult = fit_for_control_check(spec, w, params)
        return ScanSample(
            index=index,
            seed=sample_seed,
            passed=check.passed,
            failure_reasons=check.failure_reasons,
            first_resonant_prefix=check.resonance.first_resonant_prefix,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            samples = list(pool.map(run, range(sample_count)))
    else:
        samples = [run(i) for i in range(sample_count)]
    samples.sort(key=lambda s: s.index)
    passed = sum(1 for s in samples if s.passed)
    return ScanReport(
        samples=tuple(samples),
        pass_fraction=passed / sample_count,
        seed=seed,
        amplitude=amplitude,
        knots=knots,
        params=params,
    )
