import numpy as np
import pytest

from fit4control.domain import (
    ComputationalDomain,
    make_control_set,
    make_domain,
    sample_potential,
)
from fit4control.errors import ConfigError


class TestMakeDomain:
    def test_unit_interval(self):
        dom = make_domain("interval", [1.0], [2000])
        assert dom.dimension == 1
        assert dom.total_points == 2000
        assert dom.spacings[0] == pytest.approx(1.0 / 2001)
        x = dom.axis_coordinates(0)
        assert x[0] == pytest.approx(dom.spacings[0])
        assert x[-1] == pytest.approx(1.0 - dom.spacings[0])

    def test_2d_box(self):
        dom = make_domain("orthotope", [1.0, 1.3], [120, 120])
        assert dom.dimension == 2
        assert dom.total_points == 120 * 120
        assert dom.cell_volume == pytest.approx((1.0 / 121) * (1.3 / 121))

    def test_truncated_confining(self):
        dom = make_domain("truncated-confining", [20.0], [4000], ([0.0], 10.0))
        assert dom.kind == "truncated-confining"
        x = dom.axis_coordinates(0)
        assert x[0] == pytest.approx(-10.0 + dom.spacings[0])
        assert x[-1] == pytest.approx(10.0 - dom.spacings[0])

    def test_rejects_bad_input(self):
        with pytest.raises(ConfigError):
            make_domain("interval", [-1.0], [100])
        with pytest.raises(ConfigError):
            make_domain("interval", [1.0], [2])
        with pytest.raises(ConfigError):
            make_domain("orthotope", [1.0, 1.0], [10])
        with pytest.raises(ConfigError):
            make_domain("truncated-confining", [20.0], [100])
        with pytest.raises(ConfigError):
            make_domain("interval", [1.0], [100], ([0.0], 5.0))


class TestSamplePotential:
    def test_zero(self):
        dom = make_domain("interval", [1.0], [50])
        v = sample_potential(dom, "zero")
        assert np.all(v.values == 0.0)
        assert v.label == "zero"

    def test_linear_x_is_identity_sampling(self):
        dom = make_domain("interval", [1.0], [50])
        v = sample_potential(dom, "linear-x")
        assert np.allclose(v.values, dom.axis_coordinates(0))

    def test_coordinate_product_2d(self):
        dom = make_domain("orthotope", [1.0, 2.0], [8, 6])
        v = sample_potential(dom, "coordinate-product")
        x, y = dom.meshgrid()
        assert np.allclose(v.values, x * y)

    def test_seeded_rebuild_is_bit_identical(self):
        dom = make_domain("interval", [1.0], [500])
        form = "random-piecewise-linear(seed=7, amp=10, knots=8)"
        a = sample_potential(dom, form)
        b = sample_potential(dom, form)
        assert a.values.tobytes() == b.values.tobytes()
        assert np.max(np.abs(a.values)) <= 10.0

    def test_different_seed_differs(self):
        dom = make_domain("interval", [1.0], [500])
        a = sample_potential(dom, "random-piecewise-linear(seed=1, amp=10, knots=8)")
        b = sample_potential(dom, "random-piecewise-linear(seed=2, amp=10, knots=8)")
        assert not np.array_equal(a.values, b.values)

    def test_callback(self):
        dom = make_domain("interval", [2.0], [40])
        v = sample_potential(dom, lambda x: np.sin(x), label="sin")
        assert np.allclose(v.values, np.sin(dom.axis_coordinates(0)))

    def test_step(self):
        dom = make_domain("interval", [2.0], [99])
        v = sample_potential(dom, "step(height=10000, at=1.0)")
        x = dom.axis_coordinates(0)
        assert np.all(v.values[x < 1.0] == 0.0)
        assert np.all(v.values[x >= 1.0] == 10000.0)

    def test_non_finite_rejected(self):
        dom = make_domain("interval", [1.0], [10])
        with pytest.raises(ConfigError), np.errstate(divide="ignore"):
            sample_potential(dom, lambda x: 1.0 / (x - x[3]))

    def test_unknown_form_rejected(self):
        dom = make_domain("interval", [1.0], [10])
        with pytest.raises(ConfigError):
            sample_potential(dom, "no-such-form")


class TestControlSet:
    def test_default(self):
        u = make_control_set()
        assert u.contains(0.0)
        assert u.contains(0.5)
        assert not u.contains(1.0)
        assert u.delta == pytest.approx(1.0)

    def test_anchor_outside_rejected(self):
        with pytest.raises(ConfigError):
            make_control_set([(0.0, 1.0)], anchor=2.0)

    def test_anchor_interval_spans_touching_pieces(self):
        u = make_control_set([(0.0, 0.5), (0.5, 1.0)], anchor=0.25, delta=0.5)
        assert u.contains_interval(0.25, 0.75)
