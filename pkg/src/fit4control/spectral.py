"""Finite-difference discretization of -Laplacian + V with Dirichlet walls,
leading eigenpairs, and the closed-form orthotope spectrum used as an oracle.

The second-order stencil on a uniform interior grid gives, per axis, the
tridiagonal block (-1, 2, -1)/h^2. In d >= 2 the operator is the Kronecker sum
of the axis blocks plus the diagonal potential; it is kept in sparse/structured
form and only densified below ``dense_limit`` unknowns.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.sparse.linalg import ArpackNoConvergence

from .domain import ComputationalDomain, Potential, SpectralDecomposition, make_domain
from .errors import ConfigError, NumericalError

#: largest operator that may be densified (see eigensolve's d >= 2 fallback)
DENSE_LIMIT = 4000
#: largest total grid size accepted at all
SIZE_LIMIT = 4_000_000


@dataclass(frozen=True)
class DiscreteOperator:
    """-Laplacian + V on the interior grid of ``domain``.

    ``axis_blocks[i]`` holds the (diagonal, off-diagonal) coefficients of the
    1-D Laplacian along axis i; the full operator is their Kronecker sum plus
    ``diag(potential)``. Symmetric by construction.
    """

    domain: ComputationalDomain
    axis_blocks: tuple[tuple[float, float], ...]  # (2/h^2, -1/h^2) per axis
    potential: np.ndarray  # flat, length == total grid points
    dense_limit: int = DENSE_LIMIT

    @property
    def size(self) -> int:
        return self.potential.size

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    def tridiagonal(self) -> tuple[np.ndarray, np.ndarray]:
        """1-D only: (main diagonal incl. potential, off-diagonal)."""
        if self.dimension != 1:
            raise ConfigError("tridiagonal form only exists in 1-D")
        d, e = self.axis_blocks[0]
        n = self.size
        return d + self.potential, np.full(n - 1, e)

    def as_sparse(self) -> scipy.sparse.csr_matrix:
        shape = self.domain.grid_shape
        mats = []
        for i, (d, e) in enumerate(self.axis_blocks):
            n = shape[i]
            T = scipy.sparse.diags(
                [np.full(n - 1, e), np.full(n, d), np.full(n - 1, e)], [-1, 0, 1]
            )
            left = scipy.sparse.identity(math.prod(shape[:i]), format="csr")
            right = scipy.sparse.identity(math.prod(shape[i + 1 :]), format="csr")
            mats.append(scipy.sparse.kron(scipy.sparse.kron(left, T), right))
        A = mats[0]
        for m in mats[1:]:
            A = A + m
        return (A + scipy.sparse.diags(self.potential)).tocsr()

    def as_dense(self) -> np.ndarray:
        if self.size > self.dense_limit:
            raise NumericalError(
                f"refusing to densify a {self.size}-unknown operator (limit {self.dense_limit})"
            )
        return self.as_sparse().toarray()

    def matvec(self, x: np.ndarray) -> np.ndarray:
        if self.dimension == 1:
            d, e = self.axis_blocks[0]
            y = (d + self.potential) * x
            y[:-1] += e * x[1:]
            y[1:] += e * x[:-1]
            return y
        return self.as_sparse() @ x


def discretize(domain: ComputationalDomain, potential: Potential) -> DiscreteOperator:
    """Assemble -Laplacian + V on the domain's interior grid."""
    if potential.values.shape != domain.grid_shape:
        raise ConfigError(
            f"potential shape {potential.values.shape} does not match grid {domain.grid_shape}"
        )
    if domain.total_points > SIZE_LIMIT:
        raise NumericalError(
            f"grid of {domain.total_points} unknowns exceeds the configured limit {SIZE_LIMIT}"
        )
    blocks = tuple((2.0 / h**2, -1.0 / h**2) for h in domain.spacings)
    return DiscreteOperator(domain, blocks, potential.flat.copy())


def _fix_signs(phi: np.ndarray) -> np.ndarray:
    """Sign convention: the first grid component of appreciable magnitude
    (above 1e-8 of the mode's peak) is positive.

    Using the literal largest-magnitude component would be ill-conditioned:
    sampled sine modes have many lobes tied at the peak up to rounding, so the
    argmax lands on an effectively random lobe. The first-appreciable rule is
    the discrete analog of a positive normal derivative at the left wall and
    leaves product-of-sines modes unflipped.
    """
    for j in range(phi.shape[0]):
        row = phi[j]
        peak = np.max(np.abs(row))
        idx = int(np.argmax(np.abs(row) > 1e-8 * peak))
        if row[idx] < 0:
            phi[j] = -row
    return phi


def eigensolve(
    op: DiscreteOperator,
    count: int,
    residual_tol: float = 1e-8,
) -> SpectralDecomposition:
    """Compute the ``count`` smallest eigenpairs of ``op``.

    Eigenfunctions come back quadrature-orthonormal with the sign convention
    applied (first appreciable grid component positive); the recorded
    residuals are ||A phi - lambda phi||_2.

    1-D operators go through the LAPACK tridiagonal path; larger ones through
    sparse Lanczos (shift-invert at a point below the spectrum), with a dense
    solve as fallback for small sizes.
    """
    if count < 1 or count > op.size:
        raise ConfigError(f"requested {count} eigenpairs of a {op.size}-unknown operator")
    if op.dimension == 1:
        d, e = op.tridiagonal()
        vals, vecs = scipy.linalg.eigh_tridiagonal(
            d, e, select="i", select_range=(0, count - 1)
        )
    else:
        A = op.as_sparse()
        if op.size <= op.dense_limit:
            vals, vecs = scipy.linalg.eigh(A.toarray(), subset_by_index=[0, count - 1])
        else:
            sigma = float(np.min(op.potential)) - 1.0  # strictly below the spectrum
            try:
                vals, vecs = scipy.sparse.linalg.eigsh(A, k=count, sigma=sigma, which="LM")
            except ArpackNoConvergence as exc:
                if exc.eigenvalues is not None and exc.eigenvalues.size >= count:
                    vals, vecs = exc.eigenvalues[:count], exc.eigenvectors[:, :count]
                else:
                    raise NumericalError(
                        f"Lanczos failed to converge: got {0 if exc.eigenvalues is None else exc.eigenvalues.size}"
                        f" of {count} eigenpairs"
                    ) from exc
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]

    w = op.domain.cell_volume
    phi = (vecs.T / math.sqrt(w)).copy()  # L2(grid) unit -> quadrature unit
    # re-orthonormalize defensively (ARPACK vectors can drift at tight tolerances)
    gram = (phi * w) @ phi.T
    err = np.max(np.abs(gram - np.eye(count)))
    if err > op.domain.orthonormality_tol:
        q, _ = np.linalg.qr(phi.T * math.sqrt(w))
        phi = (q.T / math.sqrt(w)).copy()
    phi = _fix_signs(phi)

    if op.dimension == 1:
        d, e = op.tridiagonal()
        res = np.empty(count)
        for j in range(count):
            x = phi[j]
            y = d * x
            y[:-1] += e * x[1:]
            y[1:] += e * x[:-1]
            res[j] = np.linalg.norm(y - vals[j] * x) * math.sqrt(w)
    else:
        A = op.as_sparse()
        res = np.array(
            [np.linalg.norm(A @ phi[j] - vals[j] * phi[j]) * math.sqrt(w) for j in range(count)]
        )
    scale = np.maximum(np.abs(vals), 1.0)
    if np.any(res > residual_tol * scale * 1e3):
        worst = int(np.argmax(res / scale))
        raise NumericalError(
            f"eigenpair {worst + 1} residual {res[worst]:.3e} exceeds tolerance"
        )
    return SpectralDecomposition(
        eigenvalues=np.asarray(vals, dtype=float),
        eigenfunctions=phi,
        quadrature_weights=op.domain.quadrature_weights,
        domain=op.domain,
        residuals=res,
        orthonormality_tol=op.domain.orthonormality_tol,
    )


def box_mode_eigenvalue(sides: Sequence[float], k: Sequence[int], scaling: float = 1.0) -> float:
    """Dirichlet eigenvalue pi^2 sum_i (k_i / (alpha r_i))^2 of the scaled box."""
    return sum((ki * math.pi / (scaling * ri)) ** 2 for ki, ri in zip(k, sides))


def _enumerate_box_modes(sides: Sequence[float], scaling: float, count: int):
    """Multi-indices of the ``count`` smallest box eigenvalues, sorted by
    (eigenvalue, lexicographic index)."""
    d = len(sides)
    kmax = max(2, math.ceil(count ** (1.0 / d)) + 1)
    while True:
        modes = []
        for k in np.ndindex(*([kmax] * d)):
            kk = tuple(ki + 1 for ki in k)
            modes.append((box_mode_eigenvalue(sides, kk, scaling), kk))
        modes.sort()
        if len(modes) < count:
            kmax *= 2
            continue
        nth = modes[count - 1][0]
        # safe iff no unseen mode (some k_i > kmax) can slip below the n-th value
        boundary = min(
            box_mode_eigenvalue(
                sides, tuple(kmax + 1 if i == j else 1 for i in range(d)), scaling
            )
            for j in range(d)
        )
        if nth < boundary:
            return modes[:count]
        kmax *= 2


def box_spectrum_analytic(
    sides: Sequence[float],
    grid_counts: Sequence[int],
    count: int,
    scaling: float = 1.0,
) -> SpectralDecomposition:
    """Exact Dirichlet spectrum of the orthotope prod (0, alpha*r_i), with the
    product-of-sines eigenfunctions sampled on a uniform interior grid.

    The sampled sines are exactly quadrature-orthonormal (discrete sine
    transform orthogonality), so this doubles as an oracle for the FD solver.
    """
    sides = [float(s) for s in sides]
    if any(s <= 0 for s in sides) or scaling <= 0:
        raise ConfigError("box sides and scaling must be positive")
    scaled = [scaling * s for s in sides]
    kind = "interval" if len(sides) == 1 else "orthotope"
    dom = make_domain(kind, scaled, grid_counts)
    modes = _enumerate_box_modes(sides, scaling, count)
    mesh = dom.meshgrid()
    d = len(sides)
    norm = (2.0 ** (d / 2)) / (scaling ** (d / 2) * math.sqrt(math.prod(sides)))
    phis = np.empty((count, dom.total_points))
    for row, (_, k) in enumerate(modes):
        psi = np.full(dom.grid_shape, norm)
        for i in range(d):
            psi = psi * np.sin(k[i] * math.pi * mesh[i] / scaled[i])
        phis[row] = psi.reshape(-1)
    _fix_signs(phis)
    return SpectralDecomposition(
        eigenvalues=np.array([lam for lam, _ in modes]),
        eigenfunctions=phis,
        quadrature_weights=dom.quadrature_weights,
        domain=dom,
        residuals=np.zeros(count),
        mode_indices=tuple(k for _, k in modes),
        orthonormality_tol=dom.orthonormality_tol,
    )


def default_simplicity_tol(spec: SpectralDecomposition) -> float:
    return 1e-6 * max(1.0, float(np.max(np.abs(spec.eigenvalues))))


def simplicity_check(spec: SpectralDecomposition, tolerance: float | None = None) -> list[int]:
    """1-based indices j whose eigenvalue is simple: both neighboring gaps
    exceed the tolerance (missing neighbors count as infinite)."""
    tol = default_simplicity_tol(spec) if tolerance is None else tolerance
    lam = spec.eigenvalues
    simple = []
    for j in range(lam.size):
        below = lam[j] - lam[j - 1] if j > 0 else math.inf
        above = lam[j + 1] - lam[j] if j + 1 < lam.size else math.inf
        if min(below, above) > tol:
            simple.append(j + 1)
    return simple
