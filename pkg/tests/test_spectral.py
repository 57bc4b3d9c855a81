import itertools
import math

import numpy as np
import pytest

from fit4control.domain import make_domain, sample_potential
from fit4control.errors import ConfigError
from fit4control.spectral import (
    box_spectrum_analytic,
    default_simplicity_tol,
    discretize,
    eigensolve,
    simplicity_check,
)

PI2 = math.pi**2


def unit_interval_spec(n_grid=2000, count=12, form="zero"):
    dom = make_domain("interval", [1.0], [n_grid])
    return eigensolve(discretize(dom, sample_potential(dom, form)), count)


class TestDiscretize:
    def test_1d_stencil(self):
        dom = make_domain("interval", [1.0], [3])
        op = discretize(dom, sample_potential(dom, "zero"))
        h = 1.0 / 4
        d, e = op.tridiagonal()
        assert np.allclose(d, 2.0 / h**2)
        assert np.allclose(e, -1.0 / h**2)

    def test_constant_potential_shifts_diagonal(self):
        dom = make_domain("interval", [1.0], [3])
        op0 = discretize(dom, sample_potential(dom, "zero"))
        opc = discretize(dom, sample_potential(dom, "constant(c=5.0)"))
        d0, e0 = op0.tridiagonal()
        dc, ec = opc.tridiagonal()
        assert np.allclose(dc, d0 + 5.0)
        assert np.allclose(ec, e0)

    def test_2d_kronecker_sum(self):
        dom = make_domain("orthotope", [1.0, 1.0], [4, 4])
        op = discretize(dom, sample_potential(dom, "zero"))
        A = op.as_dense()
        assert np.allclose(A, A.T)
        # Kronecker sum of the axis blocks, assembled independently
        h = 1.0 / 5
        T = (np.diag(np.full(4, 2.0)) + np.diag(np.full(3, -1.0), 1) + np.diag(np.full(3, -1.0), -1)) / h**2
        expected = np.kron(T, np.eye(4)) + np.kron(np.eye(4), T)
        assert np.allclose(A, expected)

    def test_shape_mismatch_rejected(self):
        dom_a = make_domain("interval", [1.0], [10])
        dom_b = make_domain("interval", [1.0], [11])
        with pytest.raises(ConfigError):
            discretize(dom_a, sample_potential(dom_b, "zero"))


class TestEigensolve:
    def test_dirichlet_box_eigenvalues(self):
        # closed-form oracle: lambda_k = k^2 pi^2 on (0,1)
        spec = unit_interval_spec()
        for k in range(1, 11):
            exact = k**2 * PI2
            assert abs(spec.eigenvalues[k - 1] - exact) / exact < 1e-3

    def test_square_box_degeneracy(self):
        dom = make_domain("orthotope", [1.0, 1.0], [45, 45])
        spec = eigensolve(discretize(dom, sample_potential(dom, "zero")), 4)
        # modes (1,2)/(2,1) share 5 pi^2
        assert spec.eigenvalues[1] == pytest.approx(5 * PI2, rel=5e-3)
        assert spec.eigenvalues[2] - spec.eigenvalues[1] < default_simplicity_tol(spec)

    def test_confining_well_approaches_subdomain_spectrum(self):
        # oracle: the blow-up limit lambda_1(omega, 0) = pi^2 on omega = (0,1);
        # monotone approach checked over increasing confinement
        dom = make_domain("interval", [2.0], [1999])
        previous_error = math.inf
        for height in (1e2, 1e3, 1e4):
            v = sample_potential(dom, f"step(height={height}, at=1.0)")
            spec = eigensolve(discretize(dom, v), 1)
            err = abs(spec.eigenvalues[0] - PI2)
            assert err < previous_error
            previous_error = err
        assert previous_error < 0.05 * PI2

    def test_orthonormality_invariant(self):
        spec = unit_interval_spec(count=8)
        w = spec.quadrature_weights
        gram = (spec.eigenfunctions * w) @ spec.eigenfunctions.T
        assert np.max(np.abs(gram - np.eye(8))) < 10 * spec.orthonormality_tol

    def test_rayleigh_residual_invariant(self):
        spec = unit_interval_spec(count=10)
        assert np.all(spec.residuals <= 1e-8 * np.abs(spec.eigenvalues))

    def test_shift_invariance(self):
        dom = make_domain("interval", [1.0], [400])
        base = eigensolve(discretize(dom, sample_potential(dom, "zero")), 6)
        shifted = eigensolve(discretize(dom, sample_potential(dom, "constant(c=17.5)")), 6)
        assert np.allclose(shifted.eigenvalues, base.eigenvalues + 17.5, atol=1e-8)

    def test_convergence_order_against_analytic(self):
        # measured order of the FD eigenvalue error between two grids in [1.7, 2.3]
        errs = []
        for n in (250, 500):
            spec = unit_interval_spec(n_grid=n, count=3)
            errs.append(abs(spec.eigenvalues[2] - 9 * PI2))
        order = math.log2(errs[0] / errs[1])
        assert 1.7 <= order <= 2.3

    def test_sign_convention(self):
        spec = unit_interval_spec(count=5)
        for j in range(5):
            row = spec.eigenfunctions[j]
            first = np.argmax(np.abs(row) > 1e-8 * np.max(np.abs(row)))
            assert row[first] > 0

    def test_sign_convention_aligns_fd_with_analytic(self):
        fd = unit_interval_spec(n_grid=500, count=6)
        exact = box_spectrum_analytic([1.0], [500], 6)
        w = fd.quadrature_weights
        overlaps = np.sum(w * fd.eigenfunctions * exact.eigenfunctions, axis=1)
        assert np.all(overlaps > 0.999)

    def test_2d_sparse_path_matches_analytic(self):
        dom = make_domain("orthotope", [1.0, 1.3], [80, 80])  # 6400 > dense limit
        spec = eigensolve(discretize(dom, sample_potential(dom, "zero")), 5)
        exact = sorted(
            PI2 * (i**2 / 1.0 + j**2 / 1.3**2) for i, j in itertools.product(range(1, 7), repeat=2)
        )[:5]
        assert np.allclose(spec.eigenvalues, exact, rtol=2e-3)


class TestBoxSpectrumAnalytic:
    def test_ground_mode_closed_form(self):
        spec = box_spectrum_analytic([1.0], [200], 1)
        assert spec.eigenvalues[0] == pytest.approx(PI2)
        x = np.linspace(0, 1, 202)[1:-1]
        assert np.allclose(spec.eigenfunctions[0], math.sqrt(2) * np.sin(math.pi * x))

    def test_square_box_equal_pair(self):
        spec = box_spectrum_analytic([1.0, 1.0], [30, 30], 3)
        assert spec.eigenvalues[1] == pytest.approx(5 * PI2)
        assert spec.eigenvalues[2] == pytest.approx(5 * PI2)
        assert set(spec.mode_indices[1:3]) == {(1, 2), (2, 1)}

    def test_incommensurate_box_first_ten_simple(self):
        # oracle: brute-force enumeration of pi^2 (k1^2 + k2^2 / sqrt(2))
        r2 = 2.0 ** 0.25
        values = sorted(
            PI2 * (k1**2 + k2**2 / math.sqrt(2))
            for k1, k2 in itertools.product(range(1, 12), repeat=2)
        )[:10]
        spec = box_spectrum_analytic([1.0, r2], [40, 40], 10)
        assert np.allclose(spec.eigenvalues, values, rtol=1e-12)
        assert np.all(np.diff(spec.eigenvalues) > 1e-6)

    def test_scaling(self):
        spec = box_spectrum_analytic([1.0], [100], 2, scaling=2.0)
        assert spec.eigenvalues[0] == pytest.approx(PI2 / 4)

    def test_quadrature_orthonormality_is_exact(self):
        spec = box_spectrum_analytic([1.0, 2.0 ** 0.25], [25, 25], 8)
        w = spec.quadrature_weights
        gram = (spec.eigenfunctions * w) @ spec.eigenfunctions.T
        assert np.max(np.abs(gram - np.eye(8))) < 1e-12

    def test_fd_solver_reproduces_analytic_spectrum(self):
        # O(h^2) convergence of the FD path toward the closed form
        errs = []
        for n in (100, 200):
            dom = make_domain("interval", [1.5], [n])
            spec = eigensolve(discretize(dom, sample_potential(dom, "zero")), 4)
            exact = box_spectrum_analytic([1.5], [10], 4).eigenvalues
            errs.append(np.max(np.abs(spec.eigenvalues - exact)))
        order = math.log(errs[0] / errs[1]) / math.log((201 / 101))
        assert 1.7 <= order <= 2.3


class TestSimplicityCheck:
    def test_1d_all_simple(self):
        spec = unit_interval_spec(count=10)
        assert simplicity_check(spec) == list(range(1, 11))

    def test_square_box_degenerate_pair_flagged(self):
        spec = box_spectrum_analytic([1.0, 1.0], [30, 30], 6)
        simple = simplicity_check(spec)
        assert 2 not in simple and 3 not in simple
        assert 1 in simple

    def test_perturbation_splits_degeneracy(self):
        # oracle: eigensolve on the perturbed square
        dom = make_domain("orthotope", [1.0, 1.0], [40, 40])
        v = sample_potential(dom, lambda x, y: 30.0 * x * y)
        spec = eigensolve(discretize(dom, v), 6)
        assert simplicity_check(spec) == [1, 2, 3, 4, 5, 6]
