import math

import numpy as np
import pytest

from phaselab.errors import (
    ContactSingularityError,
    ExtinctionError,
    ResolutionError,
    StabilityError,
    UsageError,
)
from phaselab.sharp import (
    ArcSolution,
    PolylineFront,
    arc_exact,
    circle_radius_errors,
    compare_to_exact,
    curvature_vectors,
    evolve_front,
    make_arc_front,
    make_circle_front,
    polyline_step,
    redistribute,
)


class TestArcExact:
    def test_initial_data_sigma_one(self):
        s = arc_exact(1.0, 0.0)
        assert s.big_radius == pytest.approx(math.sqrt(2.0))
        assert s.x0 == pytest.approx(0.0)
        assert s.x1 == pytest.approx(2.0)
        assert s.vb == pytest.approx(1.0)
        assert s.sin_theta == pytest.approx(1.0 / math.sqrt(2.0))

    def test_mid_time_values(self):
        s = arc_exact(1.0, 0.375)
        assert s.r == pytest.approx(math.sqrt(2.0 - 0.75))
        assert s.x0 == pytest.approx(0.5)
        assert s.x1 == pytest.approx(1.5)
        assert s.vb == pytest.approx(2.0)

    @pytest.mark.parametrize("sigma", [0.3, 0.5, 1.0, 2.0, 7.0])
    @pytest.mark.parametrize("t", [0.0, 0.2, 0.45])
    def test_algebraic_identity(self, sigma, t):
        s = arc_exact(sigma, t)
        assert s.r**2 - 1.0 / sigma**2 == pytest.approx(1.0 - 2.0 * t, abs=1e-13)
        # sigma / tan(theta) equals the contact speed
        tan_theta = s.sin_theta / s.cos_theta
        assert sigma / tan_theta == pytest.approx(s.vb, rel=1e-12)

    def test_gap_and_speed_degenerate_toward_detachment(self):
        s = arc_exact(1.0, 0.499999)
        assert s.x1 - s.x0 < 3e-3
        assert s.vb > 700.0

    def test_detached_regime_fields_absent(self):
        s = arc_exact(1.0, 0.6)
        assert not s.contacts_exist
        assert s.vb is None and s.sin_theta is None
        assert s.r == pytest.approx(math.sqrt(2.0 - 1.2))

    def test_extinction_raises(self):
        with pytest.raises(ExtinctionError):
            arc_exact(1.0, 1.0)

    def test_bad_arguments(self):
        with pytest.raises(UsageError):
            arc_exact(-1.0, 0.1)
        with pytest.raises(UsageError):
            arc_exact(1.0, -0.1)


class TestPolylineFront:
    def test_attached_endpoints_pinned_exactly(self):
        f = make_arc_front(1.0, 50)
        assert f.nodes[0, 1] == 0.0
        assert f.nodes[-1, 1] == 0.0

    def test_closed_and_attached_exclusive(self):
        with pytest.raises(UsageError):
            PolylineFront(np.zeros((4, 2)), closed=True, attached=True)

    def test_is_simple_detects_figure_eight(self):
        eight = PolylineFront(
            np.array([[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]), closed=True
        )
        assert not eight.is_simple()
        square = PolylineFront(
            np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]), closed=True
        )
        assert square.is_simple()

    def test_redistribute_preserves_endpoints_and_count(self):
        f = make_arc_front(1.0, 80, grade_count=5)
        g = redistribute(f)
        assert g.n_nodes() == f.n_nodes()
        assert np.array_equal(g.nodes[0], f.nodes[0])
        assert np.array_equal(g.nodes[-1], f.nodes[-1])

    def test_curvature_exact_on_circle_nodes(self):
        f = make_circle_front((0.0, 0.0), 0.5, 64)
        kn = curvature_vectors(f.nodes, closed=True)
        mags = np.hypot(kn[:, 0], kn[:, 1])
        assert np.allclose(mags, 2.0, rtol=1e-12)

    def test_collinear_nodes_zero_curvature(self):
        nodes = np.column_stack([np.linspace(0, 1, 7), np.zeros(7)])
        kn = curvature_vectors(nodes, closed=False)
        assert np.all(kn == 0.0)


class TestPolylineStep:
    def test_dt_bound_enforced(self):
        f = make_circle_front((0.0, 0.0), 0.5, 64)
        with pytest.raises(StabilityError):
            polyline_step(f, 1.0, 1.0)

    def test_needs_three_nodes(self):
        f = PolylineFront(np.array([[0.0, 0.0], [1.0, 0.0]]))
        with pytest.raises(UsageError):
            polyline_step(f, 1.0, 1e-8)

    def test_tangential_contact_raises(self):
        nodes = np.array([[0.0, 0.0], [0.5, 1e-12], [1.0, 0.0]])
        f = PolylineFront(nodes, attached=True)
        with pytest.raises(ContactSingularityError):
            polyline_step(f, 1.0, 1e-26)

    def test_segment_collapse_raises(self):
        nodes = np.array([[0.0, 0.0], [1e-13, 1e-13], [1.0, 1.0]])
        f = PolylineFront(nodes)
        with pytest.raises(ResolutionError):
            polyline_step(f, 1.0, 1e-30)

    def test_right_angle_contact_stationary(self):
        # vertical first segments: tan(theta) = inf, endpoint speed 0
        nodes = np.array(
            [[0.0, 0.0], [0.0, 0.5], [0.5, 0.9], [1.0, 0.5], [1.0, 0.0]]
        )
        f = PolylineFront(nodes, attached=True)
        out = polyline_step(f, 3.0, 1e-6, tangent_correction=False)
        assert out.nodes[0, 0] == 0.0
        assert out.nodes[-1, 0] == 1.0

    def test_one_step_consistency_with_exact_arc(self):
        f = make_arc_front(1.0, 100, grade_count=0)
        dt = 1e-6
        out = polyline_step(f, 1.0, dt)
        sol = arc_exact(1.0, dt)
        cx, cy = sol.center
        rr = np.hypot(out.nodes[:, 0] - cx, out.nodes[:, 1] - cy)
        assert np.max(np.abs(rr - sol.r)) < 5e-6
        assert abs(out.nodes[0, 0] - sol.x0) < 5e-6


class TestEvolution:
    def test_circle_shrinks_on_exact_law(self):
        front = make_circle_front((0.0, 0.0), 0.5, 200)
        hist = evolve_front(front, 1.0, 0.02, dt=1e-5, redistribute_every=0)
        times, errs = circle_radius_errors(hist, (0.0, 0.0), 0.5)
        assert errs.max() < 1e-4

    def test_area_decreases_at_two_pi(self):
        front = make_circle_front((0.0, 0.0), 0.5, 200)
        hist = evolve_front(front, 1.0, 0.02, dt=1e-5, redistribute_every=0)
        a0 = PolylineFront(hist.fronts[0], closed=True).enclosed_area()
        a1 = PolylineFront(hist.fronts[-1], closed=True).enclosed_area()
        rate = (a0 - a1) / (hist.times[-1] - hist.times[0])
        assert rate == pytest.approx(2.0 * math.pi, rel=0.02)

    def test_arc_contacts_track_closed_form(self):
        front = make_arc_front(1.0, 200, grade_count=2)
        hist = evolve_front(front, 1.0, 0.1, redistribute_every=25)
        tab = compare_to_exact(hist, 1.0)
        assert tab.radius_error.max() < 1e-3
        assert np.nanmax(tab.contact_error) < 1e-3

    def test_compare_rejects_foreign_initial_data(self):
        front = make_arc_front(1.0, 50)
        front.nodes[5] += 0.01
        hist = evolve_front(front, 1.0, 1e-4, redistribute_every=0)
        with pytest.raises(UsageError):
            compare_to_exact(hist, 1.0)

    def test_fixed_dt_respects_shrinking_bound(self):
        front = make_arc_front(1.0, 200, grade_count=6)
        with pytest.raises(StabilityError):
            evolve_front(front, 1.0, 0.05, dt=1e-5)
