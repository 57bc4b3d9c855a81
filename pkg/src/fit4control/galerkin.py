"""Finite-level truncation of the controlled Schrodinger dynamics: unitary
propagation under piecewise-constant controls, density matrices, fidelity
metrics, and a seeded random/greedy search for population-transfer schedules.

Each constant-control segment propagates by the exact exponential of the real
symmetric level Hamiltonian diag(lambda) + u B, computed via its spectral
decomposition, so unitarity holds to roundoff for any segment duration.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coupling import CouplingMatrix
from .domain import ControlSet, SpectralDecomposition
from .errors import ConfigError, NumericalError

NORM_TOL = 1e-12
DENSITY_TRACE_TOL = 1e-12
DENSITY_PSD_FLOOR = -1e-12


@dataclass(frozen=True)
class TruncatedSystem:
    """n-level truncation: drift eigenvalues and a symmetric coupling matrix."""

    eigenvalues: np.ndarray  # (n,) real nondecreasing
    coupling: np.ndarray  # (n, n) real symmetric
    control_set: ControlSet | None = None

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        b = np.asarray(self.coupling, dtype=float)
        if lam.ndim != 1 or b.shape != (lam.size, lam.size):
            raise ConfigError("level count mismatch between eigenvalues and coupling")
        if np.any(np.diff(lam) < 0):
            raise ConfigError("drift eigenvalues must be nondecreasing")
        if not np.array_equal(b, b.T):
            raise ConfigError("coupling matrix must be symmetric")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "coupling", b)

    @property
    def levels(self) -> int:
        return int(self.eigenvalues.size)

    def hamiltonian(self, u: float) -> np.ndarray:
        return np.diag(self.eigenvalues) + u * self.coupling

    @classmethod
    def from_spectrum(
        cls,
        spec: SpectralDecomposition,
        coupling: CouplingMatrix,
        control_set: ControlSet | None = None,
    ) -> "TruncatedSystem":
        lam = np.array([spec.eigenvalues[j - 1] for j in coupling.ordering])
        if np.any(np.diff(lam) < 0):
            raise ConfigError(
                "reordered drift eigenvalues are not nondecreasing; truncate in spectral order"
            )
        return cls(lam, coupling.entries, control_set)


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant control law: (value, duration) segments."""

    segments: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for u, t in self.segments:
            if not (math.isfinite(u) and math.isfinite(t)):
                raise ConfigError("schedule entries must be finite")
            if t <= 0:
                raise ConfigError("segment durations must be strictly positive")

    @property
    def total_duration(self) -> float:
        return sum(t for _, t in self.segments)

    def __len__(self) -> int:
        return len(self.segments)

    def to_rows(self) -> list[tuple[float, float]]:
        return [(u, t) for u, t in self.segments]


EMPTY_SCHEDULE = ControlSchedule(())


def _check_values_admissible(system: TruncatedSystem, schedule: ControlSchedule) -> None:
    if system.control_set is None:
        return
    for u, _ in schedule.segments:
        if not system.control_set.contains(u):
            raise ConfigError(f"control value {u} lies outside the admissible set")


def _segment_factors(system: TruncatedSystem, schedule: ControlSchedule):
    """Eigendecompositions of the segment Hamiltonians, cached per value."""
    cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}
    for u, t in schedule.segments:
        if u not in cache:
            evals, evecs = np.linalg.eigh(system.hamiltonian(u))
            cache[u] = (evals, evecs)
        yield cache[u], t


def propagate_state(
    system: TruncatedSystem, psi0: np.ndarray, schedule: ControlSchedule
) -> np.ndarray:
    """Apply the schedule's product of exponentials exp(-i t_k (Lambda + u_k B))
    to a unit state vector, first segment first."""
    psi = np.asarray(psi0, dtype=complex)
    if psi.shape != (system.levels,):
        raise ConfigError(f"state must have {system.levels} components")
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise ConfigError("initial state must be normalized to 1e-12")
    _check_values_admissible(system, schedule)
    for (evals, evecs), t in _segment_factors(system, schedule):
        psi = evecs @ (np.exp(-1j * evals * t) * (evecs.T @ psi))
    return psi


def schedule_propagator(system: TruncatedSystem, schedule: ControlSchedule) -> np.ndarray:
    """The full unitary of the schedule."""
    _check_values_admissible(system, schedule)
    u_total = np.eye(system.levels, dtype=complex)
    for (evals, evecs), t in _segment_factors(system, schedule):
        u_total = (evecs @ (np.exp(-1j * evals * t)[:, None] * evecs.T)) @ u_total
    return u_total


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, trace-one mixture state."""

    matrix: np.ndarray
    weights: tuple[float, ...] | None = None

    def __post_init__(self):
        rho = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", rho)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ConfigError("density matrix must be square")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
            raise ConfigError("density matrix must be Hermitian")
        if abs(np.trace(rho).real - 1.0) > DENSITY_TRACE_TOL or abs(np.trace(rho).imag) > DENSITY_TRACE_TOL:
            raise ConfigError("density matrix trace must be 1 within 1e-12")
        if float(np.min(np.linalg.eigvalsh(rho))) < DENSITY_PSD_FLOOR:
            raise ConfigError("density matrix must be positive semidefinite (>= -1e-12)")

    @property
    def levels(self) -> int:
        return int(self.matrix.shape[0])

    @classmethod
    def pure(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), weights=(1.0,))

    @classmethod
    def mixture(cls, weights: Sequence[float], states: Sequence[np.ndarray]) -> "DensityMatrix":
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or abs(w.sum() - 1.0) > DENSITY_TRACE_TOL:
            raise ConfigError("mixture weights must be nonnegative and sum to 1")
        rho = sum(
            wi * np.outer(np.asarray(s, complex), np.asarray(s, complex).conj())
            for wi, s in zip(w, states)
        )
        return cls(rho, weights=tuple(float(v) for v in w))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityMatrix":
        return cls(np.eye(n, dtype=complex) / n, weights=tuple([1.0 / n] * n))


def propagate_density(
    system: TruncatedSystem, rho0: DensityMatrix, schedule: ControlSchedule
) -> DensityMatrix:
    """Conjugate the mixture by the schedule unitary: U rho U*."""
    if rho0.levels != system.levels:
        raise ConfigError("density matrix size does not match the system")
    u_total = schedule_propagator(system, schedule)
    rho = u_total @ rho0.matrix @ u_total.conj().T
    rho = 0.5 * (rho + rho.conj().T)  # strip roundoff skew
    try:
        return DensityMatrix(rho, weights=rho0.weights)
    except ConfigError as exc:
        raise NumericalError(f"propagated density violates invariants: {exc}") from exc


@dataclass(frozen=True)
class FidelityResult:
    overlap: float
    distance: float


def fidelity(a, b) -> FidelityResult:
    """Transfer metrics for a state pair or a density pair.

    States: overlap |<a, b>|^2 and norm distance ||a - b||. Densities:
    overlap Re tr(rho_a rho_b) (the squared state overlap for pure states)
    and operator-norm distance ||rho_a - rho_b||.
    """
    if isinstance(a, DensityMatrix):
        a = a.matrix
    if isinstance(b, DensityMatrix):
        b = b.matrix
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise ConfigError("fidelity arguments must have matching shapes")
    if a.ndim == 1:
        for v in (a, b):
            if abs(np.linalg.norm(v) - 1.0) > 1e-9:
                raise ConfigError("fidelity expects normalized states")
        return FidelityResult(
            overlap=float(abs(np.vdot(a, b)) ** 2),
            distance=float(np.linalg.norm(a - b)),
        )
    if a.ndim == 2:
        return FidelityResult(
            overlap=float(np.trace(a @ b).real),
            distance=float(np.linalg.norm(a - b, ord=2)),
        )
    raise ConfigError("fidelity expects vectors or square matrices")


def sample_trajectory(
    system: TruncatedSystem,
    psi0: np.ndarray,
    schedule: ControlSchedule,
    times: Sequence[float],
) -> np.ndarray:
    """States at the requested times (within the schedule's total duration)."""
    times = np.asarray(times, dtype=float)
    total = schedule.total_duration
    if np.any(times < 0) or np.any(times > total + 1e-12):
        raise ConfigError("sample times must lie within the schedule duration")
    _check_values_admissible(system, schedule)
    out = np.empty((times.size, system.levels), dtype=complex)
    order = np.argsort(times)
    psi = np.asarray(psi0, dtype=complex)
    elapsed = 0.0
    factors = list(_segment_factors(system, schedule))
    seg_idx = 0
    for pos in order:
        t = times[pos]
        while seg_idx < len(factors) and elapsed + factors[seg_idx][1] < t - 1e-15:
            (evals, evecs), dt = factors[seg_idx]
            psi = evecs @ (np.exp(-1j * evals * dt) * (evecs.T @ psi))
            elapsed += dt
            seg_idx += 1
        if seg_idx < len(factors):
            (evals, evecs), _ = factors[seg_idx]
            partial = t - elapsed
            out[pos] = evecs @ (np.exp(-1j * evals * partial) * (evecs.T @ psi))
        else:
            out[pos] = psi
    return out


@dataclass(frozen=True)
class TransferSearchResult:
    schedule: ControlSchedule
    overlap: float
    evaluated: int
    improvements: tuple[tuple[int, float], ...]  # (candidate index, overlap)


def _candidate_overlap(system, psi0, target, schedule) -> float:
    return fidelity(propagate_state(system, psi0, schedule), target).overlap


def _coordinate_descent(
    system,
    psi0,
    target,
    start: ControlSchedule,
    start_overlap: float,
    budget: int,
    bounds,
):
    """Greedy cyclic refinement of one schedule: multiplicative steps on
    durations, additive steps on pulse values, halving the steps whenever a
    full sweep brings no improvement. Deterministic. Returns the refined
    (schedule, overlap, evaluations used)."""
    lo_t, hi_t, anchor, delta, drift_value = bounds
    best, best_overlap = start, start_overlap
    used = 0
    step_t, step_u = 1.35, 0.12
    while used < budget and (step_t > 1.0005 or step_u > 1e-4):
        improved = False
        segs = list(best.segments)
        for i in range(len(segs)):
            u, t = segs[i]
            for new_t in (t * step_t, t / step_t):
                if used >= budget:
                    break
                new_t = float(np.clip(new_t, lo_t, hi_t))
                cand = ControlSchedule(tuple(segs[:i] + [(u, new_t)] + segs[i + 1 :]))
                used += 1
                val = _candidate_overlap(system, psi0, target, cand)
                if val > best_overlap:
                    best, best_overlap, improved = cand, val, True
                    segs = list(cand.segments)
            u, t = segs[i]
            if u != drift_value:
                for new_u in (u + step_u * delta, u - step_u * delta):
                    if used >= budget:
                        break
                    new_u = float(np.clip(new_u, anchor, anchor + delta * (1 - 1e-12)))
                    cand = ControlSchedule(tuple(segs[:i] + [(new_u, t)] + segs[i + 1 :]))
                    used += 1
                    val = _candidate_overlap(system, psi0, target, cand)
                    if val > best_overlap:
                        best, best_overlap, improved = cand, val, True
                        segs = list(cand.segments)
        if not improved:
            step_t = 1.0 + (step_t - 1.0) * 0.5
            step_u *= 0.5
    return best, best_overlap, used


def search_transfer(
    system: TruncatedSystem,
    psi0: np.ndarray,
    target: np.ndarray,
    budget: int = 10_000,
    seed: int = 0,
    max_segments: int = 8,
    duration_range: tuple[float, float] = (0.01, 100.0),
    threads: int = 1,
) -> TransferSearchResult:
    """Best-of-budget random/greedy search for a transfer schedule.

    Candidate 0 is the empty schedule (so a target equal to the initial state
    is solved exactly). Half the budget samples random candidates that
    alternate drift and pulse segments or draw every segment from the anchor
    interval; the other half refines the four best distinct candidates by
    cyclic coordinate descent on durations and pulse values. Deterministic
    for a given seed; with threads the random phase is evaluated in parallel
    and reduced by (overlap, candidate index).
    """
    if budget < 1:
        raise ConfigError("budget must be >= 1")
    rng = np.random.default_rng(seed)
    u_set = system.control_set
    anchor = 0.0 if u_set is None else u_set.anchor
    delta = 1.0 if u_set is None else u_set.delta
    drift_value = 0.0 if (u_set is None or u_set.contains(0.0)) else anchor
    lo_t, hi_t = duration_range
    if not (0 < lo_t < hi_t):
        raise ConfigError("invalid duration range")
    bounds = (lo_t, hi_t, anchor, delta, drift_value)

    def random_duration() -> float:
        return float(np.exp(rng.uniform(math.log(lo_t), math.log(hi_t))))

    def random_pulse() -> float:
        return float(anchor + rng.uniform(0.0, delta) * (1.0 - 1e-12))

    def random_candidate() -> ControlSchedule:
        nseg = int(rng.integers(1, max_segments + 1))
        alternating = bool(rng.integers(0, 2))
        parity = int(rng.integers(0, 2))
        segs = []
        for i in range(nseg):
            if alternating and i % 2 == parity:
                segs.append((drift_value, random_duration()))
            else:
                segs.append((random_pulse(), random_duration()))
        return ControlSchedule(tuple(segs))

    random_budget = max(1, budget // 2)
    candidates = [EMPTY_SCHEDULE] + [random_candidate() for _ in range(random_budget - 1)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            overlaps = list(
                pool.map(lambda s: _candidate_overlap(system, psi0, target, s), candidates)
            )
    else:
        overlaps = [_candidate_overlap(system, psi0, target, s) for s in candidates]
    best_idx = max(range(len(overlaps)), key=lambda i: (overlaps[i], -i))
    best, best_overlap = candidates[best_idx], overlaps[best_idx]
    improvements = [(0, overlaps[0])]
    if best_idx != 0:
        improvements.append((best_idx, best_overlap))

    order = sorted(range(len(overlaps)), key=lambda i: (-overlaps[i], i))
    pool_starts = [(candidates[i], overlaps[i]) for i in order[:4] if len(candidates[i]) > 0]
    remaining = budget - random_budget
    used_total = random_budget
    if pool_starts and remaining > 0:
        share = max(1, remaining // len(pool_starts))
        for start, start_val in pool_starts:
            if remaining <= 0:
                break
            refined, val, used = _coordinate_descent(
                system, psi0, target, start, start_val, min(share, remaining), bounds
            )
            remaining -= used
            used_total += used
            if val > best_overlap:
                best, best_overlap = refined, val
                improvements.append((used_total, val))
    return TransferSearchResult(
        schedule=best,
        overlap=float(best_overlap),
        evaluated=used_total,
        improvements=tuple(improvements),
    )
