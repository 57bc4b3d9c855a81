"""The desk certification core: given a spectrum and a coupling potential,
check the two sufficient-condition surrogates

  (i)  no rational relation found among the leading eigenvalue gaps, up to a
       recorded (prefix length, coefficient bound, tolerance) envelope, and
  (ii) connectivity of every leading coupling truncation B_n, n <= N_max,
       under a greedy reordering built from the nonzero pattern.

Both halves are finite proxies for the infinite conditions and every report
carries the full tolerance envelope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coupling import FrequentConnectivityTable, coupling_matrix, frequent_connectivity
from .domain import Potential, SpectralDecomposition
from .errors import StrandedComponentError
from .ordering import Reordering, alpha_reordering, identity_reordering
from .resonance import (
    DEFAULT_BOUND,
    DEFAULT_GAP_PREFIX_MAX,
    DEFAULT_TOLERANCE,
    GapPrefixScan,
    gap_sequence,
    scan_gap_prefixes,
)
from .spectral import default_simplicity_tol, simplicity_check


@dataclass(frozen=True)
class CertificationParams:
    """Tolerance/bound envelope for a desk certification."""

    levels: int = 20  # N_max: coupling truncations checked for n = 2..levels
    gap_prefix_max: int = DEFAULT_GAP_PREFIX_MAX  # K_max
    coeff_bound: int = DEFAULT_BOUND  # B
    relation_tolerance: float = DEFAULT_TOLERANCE  # eps
    zero_threshold: float | None = None  # tau; None -> 1e-8 * max|b|
    simplicity_tolerance: float | None = None  # None -> 1e-6 * max(1, |lambda_N|)
    tail_length: int = 6

    @property
    def solve_count(self) -> int:
        """Eigenvalues needed: N_max levels and K_max + 1 for the gap scan."""
        return max(self.levels, self.gap_prefix_max + 1)

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "gap_prefix_max": self.gap_prefix_max,
            "coeff_bound": self.coeff_bound,
            "relation_tolerance": self.relation_tolerance,
            "zero_threshold": self.zero_threshold,
            "simplicity_tolerance": self.simplicity_tolerance,
            "tail_length": self.tail_length,
        }


@dataclass(frozen=True)
class FitCheckResult:
    """Outcome of the fit-for-control surrogate checks on one (spectrum, W)."""

    passed: bool
    failure_reasons: tuple[str, ...]
    resonance: GapPrefixScan
    simple_indices: tuple[int, ...]
    ordering: Reordering | None
    connectivity: FrequentConnectivityTable | None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "failure_reasons": list(self.failure_reasons),
            "resonance": self.resonance.to_dict(),
            "simple_indices": list(self.simple_indices),
            "ordering": list(self.ordering.table) if self.ordering else None,
            "ordering_kind": self.ordering.kind if self.ordering else None,
            "connectivity": {
                "sizes": list(self.connectivity.sizes),
                "connected": list(self.connectivity.connected),
                "tail_window": list(self.connectivity.tail_window),
                "zero_threshold": self.connectivity.zero_threshold,
                "all_connected": self.connectivity.all_connected,
                "frequently_connected_desk": self.connectivity.frequently_connected_desk,
            }
            if self.connectivity
            else None,
        }


def fit_for_control_check(
    spec: SpectralDecomposition,
    w: Potential | np.ndarray,
    params: CertificationParams = CertificationParams(),
) -> FitCheckResult:
    """Run the resonance and connectivity surrogates on a computed spectrum.

    Individual failures do not abort: the result carries every reason, so a
    scan can attribute failures. Connectivity is assessed under the greedy
    reordering when one exists (it then holds at every truncation size by
    construction, but is still verified by breadth-first search); a stranded
    pattern or degenerate requested modes fail the check.
    """
    reasons: list[str] = []
    gaps = gap_sequence(spec)
    scan = scan_gap_prefixes(
        gaps, params.gap_prefix_max, params.coeff_bound, params.relation_tolerance
    )
    if scan.resonant:
        reasons.append("resonance")

    simple = tuple(simplicity_check(spec, params.simplicity_tolerance))
    ordering: Reordering | None = None
    table: FrequentConnectivityTable | None = None
    needed = set(range(1, params.levels + 1))
    if not needed.issubset(simple):
        reasons.append("degenerate-modes")
    else:
        base = coupling_matrix(
            spec,
            w,
            identity_reordering(params.levels),
            params.levels,
            params.zero_threshold,
            params.simplicity_tolerance,
        )
        try:
            ordering = alpha_reordering(base.pattern(), params.levels)
        except StrandedComponentError:
            ordering = identity_reordering(params.levels)
            reasons.append("connectivity")
        table = frequent_connectivity(
            spec,
            w,
            ordering,
            params.levels,
            params.zero_threshold,
            params.tail_length,
            params.simplicity_tolerance,
        )
        if not table.all_connected and "connectivity" not in reasons:
            reasons.append("connectivity")

    return FitCheckResult(
        passed=not reasons,
        failure_reasons=tuple(reasons),
        resonance=scan,
        simple_indices=simple,
        ordering=ordering,
        connectivity=table,
    )
