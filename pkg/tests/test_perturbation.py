import math

import numpy as np
import pytest

from fit4control.certification import CertificationParams
from fit4control.domain import make_domain, sample_potential
from fit4control.errors import ConfigError
from fit4control.perturbation import (
    blowup_experiment,
    genericity_scan,
    homotopy_scan,
    subwindow_domain,
)
from fit4control.spectral import discretize, eigensolve

PI2 = math.pi**2


@pytest.fixture(scope="module")
def line_domain():
    return make_domain("interval", [1.0], [500])


class TestHomotopyScan:
    def test_constant_path_no_flags(self, line_domain):
        v = sample_potential(line_domain, "random-piecewise-linear(seed=3, amp=5, knots=6)")
        w = sample_potential(line_domain, "linear-x")
        report = homotopy_scan(line_domain, v, v, w, mu_samples=5, levels=4)
        assert report.flagged_mus == ()
        first = report.samples[0]
        assert all(s.eigenvalues == first.eigenvalues for s in report.samples)

    def test_1d_paths_have_no_simplicity_flags(self, line_domain):
        v0 = sample_potential(line_domain, "zero")
        v1 = sample_potential(line_domain, "random-piecewise-linear(seed=9, amp=20, knots=5)")
        w = sample_potential(line_domain, "linear-x")
        report = homotopy_scan(line_domain, v0, v1, w, mu_samples=7, levels=5)
        assert not any(s.simplicity_flag for s in report.samples)
        # sign continuity: the (1,2) entry of W=x stays on one side of zero
        first_entries = [s.tracked_entries[0] for s in report.samples]
        assert all(e < 0 for e in first_entries)

    def test_square_box_degeneracy_resolves_off_zero(self):
        dom = make_domain("orthotope", [1.0, 1.0], [28, 28])
        v0 = sample_potential(dom, "zero")
        v1 = sample_potential(dom, lambda x, y: 30.0 * x * y)
        w = sample_potential(dom, "linear-x")
        report = homotopy_scan(dom, v0, v1, w, mu_samples=6, levels=4)
        flags = [s.simplicity_flag for s in report.samples]
        assert flags[0] is True  # exact square-box degeneracy at mu = 0
        assert flags[1:] == [False] * 5

    def test_path_reversal_mirrors_samples_exactly(self, line_domain):
        v0 = sample_potential(line_domain, "zero")
        v1 = sample_potential(line_domain, "random-piecewise-linear(seed=4, amp=15, knots=7)")
        w = sample_potential(line_domain, "linear-x")
        fwd = homotopy_scan(line_domain, v0, v1, w, mu_samples=6, levels=4)
        rev = homotopy_scan(line_domain, v1, v0, w, mu_samples=6, levels=4)
        for a, b in zip(fwd.samples, reversed(rev.samples)):
            assert a.eigenvalues == b.eigenvalues  # bitwise, by the symmetric path form
            assert a.simplicity_flag == b.simplicity_flag
            assert a.coupling_flag == b.coupling_flag

    def test_bad_tracked_pairs_rejected(self, line_domain):
        v = sample_potential(line_domain, "zero")
        w = sample_potential(line_domain, "linear-x")
        with pytest.raises(ConfigError):
            homotopy_scan(line_domain, v, v, w, levels=3, tracked_pairs=[(1, 9)])


@pytest.fixture(scope="module")
def setup():
    dom = make_domain("interval", [2.0], [1999])
    sub, _ = subwindow_domain(dom, [(0.0, 1.0)])
    v_in = sample_potential(sub, "zero")
    v_bar = sample_potential(dom, "zero")
    return dom, sub, v_in, v_bar


class TestBlowupExperiment:
    def test_convergence_to_window_spectrum(self, setup):
        dom, sub, v_in, v_bar = setup
        report = blowup_experiment(dom, [(0.0, 1.0)], v_in, v_bar, [10, 100, 1000, 10000])
        # reference is the Dirichlet problem on (0,1): lambda_1 ~= pi^2
        assert report.reference_eigenvalues[0] == pytest.approx(PI2, rel=1e-3)
        lam_errors = [row.eigenvalue_errors[0] for row in report.rows]
        assert all(a > b for a, b in zip(lam_errors, lam_errors[1:]))
        assert lam_errors[-1] < 0.05 * PI2
        phi_errors = [row.eigenfunction_errors[0] for row in report.rows]
        assert all(a > b for a, b in zip(phi_errors, phi_errors[1:]))

    def test_exterior_mass_decreases(self, setup):
        dom, sub, v_in, v_bar = setup
        report = blowup_experiment(dom, [(0.0, 1.0)], v_in, v_bar, [10, 100, 1000, 10000])
        mass = [row.exterior_mass[0] for row in report.rows]
        assert all(a > b for a, b in zip(mass, mass[1:]))

    def test_zero_confinement_is_identity(self):
        # v = v_bar restricted to the window and k = 0 reproduce the plain operator
        dom = make_domain("interval", [2.0], [999])
        v_bar = sample_potential(dom, "linear-x")
        sub, slices = subwindow_domain(dom, [(0.0, 1.0)])
        v_in = sample_potential(sub, "linear-x")  # matches v_bar on the window
        report = blowup_experiment(dom, [(0.0, 1.0)], v_in, v_bar, [0.0], level_count=2)
        direct = eigensolve(discretize(dom, v_bar), 2)
        sub_direct = eigensolve(discretize(sub, v_in), 2)
        assert report.rows[0].eigenvalue_errors == tuple(
            abs(a - b) for a, b in zip(direct.eigenvalues, sub_direct.eigenvalues)
        )

    def test_misaligned_window_rejected(self):
        dom = make_domain("interval", [2.0], [1000])
        sub_ok, _ = subwindow_domain(dom, [(0.0, 2.0 * 500 / 1001)])
        with pytest.raises(ConfigError):
            subwindow_domain(dom, [(0.0, 0.333)])


@pytest.fixture(scope="module")
def scan_inputs():
    dom = make_domain("interval", [1.0], [400])
    w = sample_potential(dom, "linear-x")
    params = CertificationParams(levels=5, gap_prefix_max=4, coeff_bound=20)
    return dom, w, params


class TestGenericityScan:
    def test_reproducible_for_seed(self, scan_inputs):
        dom, w, params = scan_inputs
        a = genericity_scan(dom, w, sample_count=6, seed=123, params=params)
        b = genericity_scan(dom, w, sample_count=6, seed=123, params=params)
        assert a.pass_fraction == b.pass_fraction
        assert [s.failure_reasons for s in a.samples] == [s.failure_reasons for s in b.samples]

    def test_threads_do_not_change_results(self, scan_inputs):
        dom, w, params = scan_inputs
        a = genericity_scan(dom, w, sample_count=6, seed=5, params=params)
        b = genericity_scan(dom, w, sample_count=6, seed=5, params=params, threads=3)
        assert [s.passed for s in a.samples] == [s.passed for s in b.samples]

    def test_zero_coupling_never_passes(self, scan_inputs):
        dom, _, params = scan_inputs
        w0 = sample_potential(dom, "zero")
        report = genericity_scan(dom, w0, sample_count=3, seed=0, params=params)
        assert report.pass_fraction == 0.0
        assert all("connectivity" in s.failure_reasons for s in report.samples)

    def test_zero_amplitude_ensemble_is_resonant(self, scan_inputs):
        # amp = 0 draws V = 0, a resonant spectrum. On the FD grid the first
        # detected relation is (7,-7,2) at prefix 3: it annihilates both the
        # linear and cubic terms of the discrete sine eigenvalues, so it
        # survives the O(h^2) discretization error that masks (5,-3).
        dom, w, params = scan_inputs
        report = genericity_scan(dom, w, sample_count=1, seed=0, amplitude=0.0, params=params)
        assert report.pass_fraction == 0.0
        assert report.samples[0].failure_reasons == ("resonance",)
        assert report.samples[0].first_resonant_prefix == 3
