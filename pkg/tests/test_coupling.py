import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fit4control.coupling import (
    connectivity,
    coupling_entry,
    coupling_matrix,
    frequent_connectivity,
)
from fit4control.domain import make_domain, sample_potential
from fit4control.errors import ConfigError, DegenerateModeError
from fit4control.spectral import box_spectrum_analytic, discretize, eigensolve

PI2 = math.pi**2


def closed_form_x_entry(j, k):
    """Oracle: integral of x * 2 sin(j pi x) sin(k pi x) on (0,1)."""
    if j == k:
        return 0.5
    if (j - k) % 2 == 0:
        return 0.0
    return (2 / PI2) * (1.0 / (j + k) ** 2 - 1.0 / (j - k) ** 2)


@pytest.fixture(scope="module")
def unit_box_spec():
    return box_spectrum_analytic([1.0], [4000], 22)


@pytest.fixture(scope="module")
def w_linear(unit_box_spec):
    return sample_potential(unit_box_spec.domain, "linear-x")


class TestCouplingEntry:
    def test_normalization(self, unit_box_spec):
        s = unit_box_spec
        one = np.ones(s.quadrature_weights.size)
        val = coupling_entry(one, s.eigenfunctions[0], s.eigenfunctions[0], s.quadrature_weights)
        assert val == pytest.approx(1.0, abs=1e-12)

    def test_orthogonality(self, unit_box_spec):
        s = unit_box_spec
        one = np.ones(s.quadrature_weights.size)
        val = coupling_entry(one, s.eigenfunctions[0], s.eigenfunctions[1], s.quadrature_weights)
        assert abs(val) < 1e-12

    def test_x_weight_first_pair(self, unit_box_spec, w_linear):
        # closed form -16/(9 pi^2), cross-checked by a fine quadrature oracle
        s = unit_box_spec
        val = coupling_entry(w_linear.flat, s.eigenfunctions[0], s.eigenfunctions[1], s.quadrature_weights)
        exact = -16.0 / (9.0 * PI2)
        assert exact == pytest.approx(-0.180126548, abs=1e-8)
        assert val == pytest.approx(exact, abs=1e-7)
        x = (np.arange(1, 1_000_001) / 1_000_001.0)
        oracle = float(np.sum(x * 2 * np.sin(math.pi * x) * np.sin(2 * math.pi * x)) / 1_000_001.0)
        assert val == pytest.approx(oracle, abs=1e-7)

    def test_shape_mismatch(self, unit_box_spec):
        s = unit_box_spec
        with pytest.raises(ConfigError):
            coupling_entry(np.ones(3), s.eigenfunctions[0], s.eigenfunctions[1], s.quadrature_weights)


class TestCouplingMatrix:
    def test_x_weight_closed_form(self, unit_box_spec, w_linear):
        mat = coupling_matrix(unit_box_spec, w_linear, n=4)
        for j in range(1, 5):
            for k in range(1, 5):
                assert mat.entries[j - 1, k - 1] == pytest.approx(
                    closed_form_x_entry(j, k), abs=1e-9
                )

    def test_zero_potential(self, unit_box_spec):
        w0 = sample_potential(unit_box_spec.domain, "zero")
        mat = coupling_matrix(unit_box_spec, w0, n=5)
        assert np.all(mat.entries == 0.0)

    def test_scaled_interval_consecutive_entry(self):
        # scaling laws on (0, alpha r) with W = x (slope 1), J_k the
        # normalized moment -4k(1+k)/((1+2k)^2 pi^2): the raw sine-product
        # integral is alpha^2 r^2 J_k; with unit-normalized eigenfunctions
        # the coupling entry picks up 2/(alpha r) and becomes 2 alpha r J_k
        alpha, r = 0.35, 1.7
        length = alpha * r
        spec = box_spectrum_analytic([r], [3000], 6, scaling=alpha)
        w = sample_potential(spec.domain, "linear-x")
        mat = coupling_matrix(spec, w, n=6)
        x = spec.domain.axis_coordinates(0)
        h = spec.domain.spacings[0]
        for k in (1, 2, 3):
            j_k = -4 * k * (1 + k) / ((1 + 2 * k) ** 2 * PI2)
            raw = float(
                np.sum(x * np.sin(k * math.pi * x / length) * np.sin((k + 1) * math.pi * x / length)) * h
            )
            assert raw == pytest.approx(alpha**2 * r**2 * j_k, rel=1e-6)
            assert mat.entries[k - 1, k] == pytest.approx(2 * alpha * r * j_k, rel=1e-6)

    def test_symmetry_exact(self, unit_box_spec, w_linear):
        mat = coupling_matrix(unit_box_spec, w_linear, n=8)
        assert np.array_equal(mat.entries, mat.entries.T)

    def test_degenerate_modes_refused(self):
        spec = box_spectrum_analytic([1.0, 1.0], [25, 25], 4)
        w = sample_potential(spec.domain, "linear-x")
        with pytest.raises(DegenerateModeError) as err:
            coupling_matrix(spec, w, n=4)
        assert 2 in err.value.indices and 3 in err.value.indices

    def test_ordering_permutes_entries(self, unit_box_spec, w_linear):
        plain = coupling_matrix(unit_box_spec, w_linear, n=4)
        perm = coupling_matrix(unit_box_spec, w_linear, ordering=(2, 1, 4, 3), n=4)
        assert perm.entries[0, 1] == plain.entries[1, 0]
        assert perm.entries[0, 2] == plain.entries[1, 3]

    def test_sign_flip_leaves_magnitudes(self, unit_box_spec, w_linear):
        flipped = unit_box_spec.eigenfunctions.copy()
        flipped[1] = -flipped[1]
        w = unit_box_spec.quadrature_weights
        a = (unit_box_spec.eigenfunctions * (w * w_linear.flat)) @ unit_box_spec.eigenfunctions.T
        b = (flipped * (w * w_linear.flat)) @ flipped.T
        assert np.allclose(np.abs(a), np.abs(b))
        assert connectivity(np.triu(a[:4, :4]) + np.triu(a[:4, :4], 1).T).connected == \
            connectivity(np.triu(b[:4, :4]) + np.triu(b[:4, :4], 1).T).connected

    def test_boundary_mass_diagnostic_for_truncated_domain(self):
        dom = make_domain("truncated-confining", [20.0], [1500], ([0.0], 10.0))
        v = sample_potential(dom, "harmonic")
        spec = eigensolve(discretize(dom, v), 4)
        w = sample_potential(dom, "linear-x")
        mat = coupling_matrix(spec, w, n=4)
        assert mat.boundary_mass is not None
        # confined modes carry almost no mass on the outer 10% collar
        assert np.all(mat.boundary_mass < 1e-8)


class TestConnectivity:
    def test_tridiagonal_path(self):
        m = np.zeros((5, 5))
        for i in range(4):
            m[i, i + 1] = m[i + 1, i] = 1.0
        res = connectivity(m, zero_threshold=0.5)
        assert res.connected

    def test_block_diagonal_split(self):
        m = np.zeros((4, 4))
        m[0, 1] = m[1, 0] = 1.0
        m[2, 3] = m[3, 2] = 1.0
        res = connectivity(m, zero_threshold=0.5)
        assert not res.connected
        assert res.components == [[1, 2], [3, 4]]

    def test_x_weight_box_connected_at_20(self, unit_box_spec, w_linear):
        mat = coupling_matrix(unit_box_spec, w_linear, n=20)
        assert connectivity(mat, 1e-8).connected
        # oracle: BFS over the closed-form odd-difference pattern
        import collections

        adj = {
            j: [k for k in range(1, 21) if k != j and abs(closed_form_x_entry(j, k)) > 1e-8]
            for j in range(1, 21)
        }
        seen, queue = {1}, collections.deque([1])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        assert seen == set(range(1, 21))

    @given(st.integers(min_value=0, max_value=500))
    @settings(max_examples=25, deadline=None)
    def test_tau_monotonicity(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.normal(size=(6, 6))
        m = m + m.T
        tau = abs(rng.normal()) * 0.5
        if connectivity(m, tau).connected:
            assert connectivity(m, tau / 3).connected


class TestFrequentConnectivity:
    def test_x_weight_connected_everywhere(self, unit_box_spec, w_linear):
        table = frequent_connectivity(unit_box_spec, w_linear, n_max=20)
        assert table.all_connected
        assert table.frequently_connected_desk
        assert table.sizes == tuple(range(2, 21))

    def test_even_potential_parity_split(self):
        # oracle: parity selection rule. phi_j(1-x) = (-1)^(j+1) phi_j(x), so
        # an even-about-center W kills every odd j+k entry and the pattern
        # splits into odd and even mode classes at every n.
        spec = box_spectrum_analytic([1.0], [2001], 8)
        x = spec.domain.axis_coordinates(0)
        w = np.where(np.abs(x - 0.5) < 0.25, 1.0, 0.0)
        mat = coupling_matrix(spec, w, n=8)
        j, k = np.meshgrid(np.arange(1, 9), np.arange(1, 9), indexing="ij")
        odd_sum = (j + k) % 2 == 1
        assert np.all(np.abs(mat.entries[odd_sum]) < 1e-10)
        table = frequent_connectivity(spec, w, n_max=8, zero_threshold=1e-8)
        assert not any(table.connected)

    def test_two_level_single_edge(self, unit_box_spec, w_linear):
        table = frequent_connectivity(unit_box_spec, w_linear, n_max=2)
        assert table.connected == (True,)
