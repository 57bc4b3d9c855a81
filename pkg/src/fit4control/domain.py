"""Core value types: computational domains, grid-sampled potentials, control
sets, spectral decompositions and resonance verdicts.

All types are immutable after construction (arrays are marked read-only) and
safe to share between workers. Grids are uniform tensor grids with Dirichlet
rows eliminated: only interior nodes are stored, the quadrature weight of a
node is the grid cell volume.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from typing import Callable, Literal, Sequence

import numpy as np

from .errors import ConfigError

DomainKind = Literal["interval", "orthotope", "truncated-confining"]

#: default quadrature-orthonormality tolerances (1-D is tighter because the
#: tridiagonal solver delivers essentially exact orthogonality)
ORTHONORMALITY_TOL_1D = 1e-10
ORTHONORMALITY_TOL_ND = 1e-8


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ComputationalDomain:
    """A d-dimensional box with a uniform interior grid.

    ``interval``/``orthotope`` span (0, r_i) per axis. ``truncated-confining``
    is a finite stand-in for an unbounded domain: the box is centered at
    ``truncation_center`` with half-width ``truncation_half_width`` per axis,
    and is only meaningful together with a confining potential.
    """

    kind: DomainKind
    sides: tuple[float, ...]
    grid_points_per_side: tuple[int, ...]
    truncation_center: tuple[float, ...] | None = None
    truncation_half_width: float | None = None

    @property
    def dimension(self) -> int:
        return len(self.sides)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(r / (n + 1) for r, n in zip(self.sides, self.grid_points_per_side))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacings)

    @property
    def total_points(self) -> int:
        return math.prod(self.grid_points_per_side)

    @property
    def grid_shape(self) -> tuple[int, ...]:
        return self.grid_points_per_side

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Interior node coordinates along ``axis`` (Dirichlet ends excluded)."""
        n = self.grid_points_per_side[axis]
        h = self.spacings[axis]
        lo = self._origin()[axis]
        return lo + h * np.arange(1, n + 1)

    def _origin(self) -> tuple[float, ...]:
        if self.kind == "truncated-confining":
            c = self.truncation_center or (0.0,) * self.dimension
            return tuple(ci - si / 2 for ci, si in zip(c, self.sides))
        return (0.0,) * self.dimension

    def meshgrid(self) -> list[np.ndarray]:
        axes = [self.axis_coordinates(i) for i in range(self.dimension)]
        return list(np.meshgrid(*axes, indexing="ij"))

    @property
    def quadrature_weights(self) -> np.ndarray:
        return np.full(self.total_points, self.cell_volume)

    @property
    def orthonormality_tol(self) -> float:
        return ORTHONORMALITY_TOL_1D if self.dimension == 1 else ORTHONORMALITY_TOL_ND


def make_domain(
    kind: DomainKind,
    sides: Sequence[float],
    grid_counts: Sequence[int],
    truncation: tuple[Sequence[float], float] | None = None,
) -> ComputationalDomain:
    """Validate and build a :class:`ComputationalDomain`.

    ``truncation`` is a ``(center, half_width)`` pair, required exactly when
    ``kind == "truncated-confining"``.
    """
    sides = tuple(float(s) for s in sides)
    grid_counts = tuple(int(n) for n in grid_counts)
    if len(sides) < 1:
        raise ConfigError("need at least one side", field="sides")
    if len(grid_counts) != len(sides):
        raise ConfigError(
            f"{len(grid_counts)} grid counts for {len(sides)} sides",
            field="grid_points_per_side",
        )
    if any(s <= 0 or not math.isfinite(s) for s in sides):
        raise ConfigError("sides must be positive and finite", field="sides")
    if any(n < 3 for n in grid_counts):
        raise ConfigError("grid counts must be >= 3", field="grid_points_per_side")
    if kind == "truncated-confining":
        if truncation is None:
            raise ConfigError(
                "truncated-confining domains need a (center, half_width) box",
                field="truncation",
            )
        center, half_width = truncation
        center = tuple(float(c) for c in center)
        half_width = float(half_width)
        if len(center) != len(sides):
            raise ConfigError("truncation center dimension mismatch", field="truncation")
        if half_width <= 0:
            raise ConfigError("truncation half-width must be positive", field="truncation")
        return ComputationalDomain(kind, sides, grid_counts, center, half_width)
    if kind not in ("interval", "orthotope"):
        raise ConfigError(f"unknown domain kind {kind!r}", field="kind")
    if truncation is not None:
        raise ConfigError("truncation box only applies to truncated-confining", field="truncation")
    if kind == "interval" and len(sides) != 1:
        raise ConfigError("interval domains are 1-D", field="sides")
    return ComputationalDomain(kind, sides, grid_counts)


@dataclass(frozen=True)
class Potential:
    """A real potential sampled on the domain grid."""

    values: np.ndarray  # shape == domain.grid_shape
    label: str
    analytic_form: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "values", _freeze(np.asarray(self.values, dtype=float)))
        if not np.all(np.isfinite(self.values)):
            raise ConfigError(f"potential {self.label!r} has non-finite values")

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


_FORM_RE = re.compile(r"^\s*([a-zA-Z][\w-]*)\s*(?:\((.*)\))?\s*$")


def _parse_form(form: str) -> tuple[str, dict[str, float]]:
    m = _FORM_RE.match(form)
    if not m:
        raise ConfigError(f"unparseable potential form {form!r}", field="form")
    name, argstr = m.group(1), m.group(2)
    args: dict[str, float] = {}
    if argstr:
        for part in argstr.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise ConfigError(f"expected key=value in {form!r}", field="form")
            k, v = part.split("=", 1)
            args[k.strip()] = float(v.strip())
    return name, args


def _piecewise_linear_1d(domain: ComputationalDomain, seed: int, amp: float, knots: int) -> np.ndarray:
    # knots interior nodes plus the two endpoints, values iid uniform(-amp, amp)
    rng = np.random.default_rng(seed)
    r = domain.sides[0]
    lo = domain._origin()[0]
    nodes = lo + np.linspace(0.0, r, knots + 2)
    vals = rng.uniform(-amp, amp, size=knots + 2)
    x = domain.axis_coordinates(0)
    return np.interp(x, nodes, vals)


def sample_potential(
    domain: ComputationalDomain,
    form: str | Callable[..., np.ndarray],
    label: str | None = None,
) -> Potential:
    """Sample a potential on the domain grid.

    ``form`` is either a callable taking the d meshgrid coordinate arrays and
    returning the value array, or one of the named forms:

    - ``"zero"``
    - ``"constant(c=...)"``
    - ``"linear-x"``: the first coordinate
    - ``"coordinate-product"``: product of all coordinates (x*y in 2-D)
    - ``"step(height=..., at=...)"``: 0 below ``at`` (first coordinate), height above
    - ``"harmonic(scale=...)"``: scale * sum of squared coordinates about the
      domain center (confining; default scale 1)
    - ``"random-piecewise-linear(seed=..., amp=..., knots=...)"``: reproducible
      1-D piecewise-linear interpolation of seeded uniform knot values
    """
    if callable(form):
        mesh = domain.meshgrid()
        values = np.asarray(form(*mesh), dtype=float)
        if values.shape != domain.grid_shape:
            raise ConfigError(
                f"callback returned shape {values.shape}, grid is {domain.grid_shape}"
            )
        return Potential(values, label or "callback", None)

    name, args = _parse_form(form)
    mesh = domain.meshgrid()
    if name == "zero":
        values = np.zeros(domain.grid_shape)
    elif name == "constant":
        values = np.full(domain.grid_shape, args.get("c", 0.0))
    elif name == "linear-x":
        values = mesh[0].copy()
    elif name == "coordinate-product":
        values = mesh[0].copy()
        for m in mesh[1:]:
            values = values * m
    elif name == "step":
        height = args.get("height", 1.0)
        at = args.get("at", 0.0)
        values = np.where(mesh[0] >= at, height, 0.0)
    elif name == "harmonic":
        scale = args.get("scale", 1.0)
        center = domain._origin()
        mids = [c + s / 2 for c, s in zip(center, domain.sides)]
        values = scale * sum((m - mid) ** 2 for m, mid in zip(mesh, mids))
    elif name == "random-piecewise-linear":
        if domain.dimension != 1:
            raise ConfigError("random-piecewise-linear is 1-D only", field="form")
        seed = int(args.get("seed", 0))
        amp = float(args.get("amp", 1.0))
        knots = int(args.get("knots", 8))
        if knots < 1:
            raise ConfigError("knots must be >= 1", field="form")
        values = _piecewise_linear_1d(domain, seed, amp, knots)
    else:
        raise ConfigError(f"unknown potential form {name!r}", field="form")
    return Potential(np.asarray(values, dtype=float), label or name, form)


@dataclass(frozen=True)
class ControlSet:
    """The admissible control values U: a union of intervals plus a recorded
    anchor u with [u, u+delta) inside U."""

    intervals: tuple[tuple[float, float], ...]
    anchor: float
    delta: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ConfigError("anchor delta must be positive", field="control_set.delta")
        for lo, hi in self.intervals:
            if not lo < hi:
                raise ConfigError(f"empty interval [{lo}, {hi})", field="control_set.intervals")
        if not self.contains_interval(self.anchor, self.anchor + self.delta):
            raise ConfigError(
                f"[{self.anchor}, {self.anchor + self.delta}) is not inside U",
                field="control_set.anchor",
            )

    def contains_interval(self, lo: float, hi: float) -> bool:
        # merge touching/overlapping intervals, then test containment
        merged: list[list[float]] = []
        for a, b in sorted(self.intervals):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return any(a <= lo and hi <= b for a, b in merged)

    def contains(self, u: float) -> bool:
        return any(lo <= u < hi for lo, hi in self.intervals)


def make_control_set(
    intervals: Sequence[Sequence[float]] = ((0.0, 1.0),),
    anchor: float = 0.0,
    delta: float | None = None,
) -> ControlSet:
    ivs = tuple((float(a), float(b)) for a, b in intervals)
    if delta is None:
        containing = [hi for lo, hi in ivs if lo <= anchor < hi]
        if not containing:
            raise ConfigError("anchor lies outside every interval", field="control_set.anchor")
        delta = max(containing) - anchor
    return ControlSet(ivs, float(anchor), float(delta))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Leading eigenpairs of a Schrodinger operator on a grid.

    ``eigenfunctions[j]`` is the flat (row-major) grid sampling of the j-th
    eigenfunction, normalized so that the grid quadrature of its square is 1.
    """

    eigenvalues: np.ndarray  # (N,) nondecreasing
    eigenfunctions: np.ndarray  # (N, M)
    quadrature_weights: np.ndarray  # (M,)
    domain: ComputationalDomain | None = None
    residuals: np.ndarray | None = None
    mode_indices: tuple[tuple[int, ...], ...] | None = None  # for analytic box spectra
    orthonormality_tol: float = ORTHONORMALITY_TOL_ND

    def __post_init__(self):
        lam = _freeze(np.asarray(self.eigenvalues, dtype=float))
        phi = _freeze(np.asarray(self.eigenfunctions, dtype=float))
        w = _freeze(np.asarray(self.quadrature_weights, dtype=float))
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "eigenfunctions", phi)
        object.__setattr__(self, "quadrature_weights", w)
        if self.residuals is not None:
            object.__setattr__(self, "residuals", _freeze(np.asarray(self.residuals, dtype=float)))
        if lam.ndim != 1 or phi.shape != (lam.size, w.size):
            raise ConfigError(
                f"inconsistent spectral shapes: {lam.shape}, {phi.shape}, {w.shape}"
            )
        if np.any(np.diff(lam) < 0):
            raise ConfigError("eigenvalues must be nondecreasing")
        if np.any(w <= 0):
            raise ConfigError("quadrature weights must be positive")
        gram = (phi * w) @ phi.T
        err = np.max(np.abs(gram - np.eye(lam.size)))
        if err > 10 * self.orthonormality_tol:
            raise ConfigError(
                f"eigenfunctions not quadrature-orthonormal: max deviation {err:.3e}"
            )

    @property
    def count(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def simplicity_gaps(self) -> np.ndarray:
        return np.diff(self.eigenvalues)

    def inner(self, a: np.ndarray, b: np.ndarray) -> float:
        return float(np.sum(self.quadrature_weights * a * b))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.eigenvalues.tobytes())
        h.update(self.eigenfunctions.tobytes())
        return h.hexdigest()[:16]


ResonanceStatus = Literal["RESONANT", "NO_RELATION_FOUND", "EXACT_NONRESONANT"]


@dataclass(frozen=True)
class ResonanceVerdict:
    """Outcome of a rational-relation search over a finite value family.

    Floating-point inputs can never be certified non-resonant, only
    ``NO_RELATION_FOUND`` up to the recorded (bound, tolerance) envelope;
    ``EXACT_NONRESONANT`` is reserved for exact symbolic inputs.
    """

    status: ResonanceStatus
    witness: tuple[int, ...] | None = None
    search_bound: int = 0
    tolerance: float = 0.0
    checked_count: int = 0

    def __post_init__(self):
        if (self.status == "RESONANT") != (self.witness is not None):
            raise ConfigError("witness present iff status is RESONANT")
        if self.witness is not None and not any(self.witness):
            raise ConfigError("witness must be a nonzero integer vector")

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "witness": list(self.witness) if self.witness else None,
            "search_bound": self.search_bound,
            "tolerance": self.tolerance,
            "checked_count": self.checked_count,
        }
