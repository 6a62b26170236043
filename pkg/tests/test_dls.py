"""Core generating-function machinery: blocks, step map, orbit refinement."""

import numpy as np
import pytest

import hillkit as hk
from conftest import ACUTE_TRIANGLE, foot_parameters
from hillkit import billiards as bl
from hillkit.dls import PeriodicOrbit, orbit_with_residual
from hillkit.errors import SingularTwist
from hillkit.models import StandardMap, TrigPotential, cosine_potential


def test_standard_map_blocks_at_origin(standard_map_k1):
    blocks = hk.evaluate_blocks(standard_map_k1, 0, [0.0], [0.0])
    assert blocks.value == pytest.approx(-1.0, abs=1e-14)
    assert blocks.d1[0] == pytest.approx(0.0, abs=1e-14)
    assert blocks.twist[0, 0] == pytest.approx(1.0, abs=1e-14)
    assert blocks.d11[0, 0] == pytest.approx(1.5, abs=1e-14)


def test_blocks_deterministic(standard_map_k1):
    a = hk.evaluate_blocks(standard_map_k1, 0, [0.3], [0.7])
    b = hk.evaluate_blocks(standard_map_k1, 0, [0.3], [0.7])
    assert a.value == b.value
    assert np.array_equal(a.d11, b.d11)
    assert np.array_equal(a.twist, b.twist)


def test_circle_billiard_block_value():
    model = bl.circle_billiard(1.0, 2)
    blocks = hk.evaluate_blocks(model, 0, [0.0], [np.pi / 2])
    assert blocks.twist[0, 0] == pytest.approx(-1 / (2 * np.sqrt(2)), abs=1e-14)


def test_singular_twist_rejected():
    class Degenerate(hk.DiscreteLagrangian):
        dim = 1

        def value(self, i, x, y):
            return float(x[0] ** 2 + y[0] ** 2)

    with pytest.raises(SingularTwist):
        hk.evaluate_blocks(Degenerate(), 0, [0.2], [0.4])


@pytest.mark.parametrize(
    "model,span",
    [
        (StandardMap([[1.0]], cosine_potential(1.3)), 3.0),
        (StandardMap(np.array([[1.0, 0.2], [0.2, 2.0]]), TrigPotential(2, cos_terms=[(0.7, [1, 1]), (0.4, [2, 0])])), 3.0),
        (bl.ellipse_billiard(2.0, 1.0, 2), 2 * np.pi),
    ],
)
def test_gradients_match_finite_differences(model, span, rng):
    h = 1e-6
    worst = 0.0
    for _ in range(100):
        x = span * rng.random(model.dim)
        y = span * rng.random(model.dim) + 2.5
        g1 = model.grad1(0, x, y)
        g2 = model.grad2(0, x, y)
        for a in range(model.dim):
            e = np.zeros(model.dim)
            e[a] = h
            fd1 = (model.value(0, x + e, y) - model.value(0, x - e, y)) / (2 * h)
            fd2 = (model.value(0, x, y + e) - model.value(0, x, y - e)) / (2 * h)
            scale = 1.0 + abs(g1[a]) + abs(g2[a])
            worst = max(worst, abs(g1[a] - fd1) / scale, abs(g2[a] - fd2) / scale)
    assert worst < 1e-6


def test_action_circle_diameter():
    model = bl.circle_billiard(1.0, 2)
    orbit = orbit_with_residual(model, np.array([[0.0], [np.pi]]))
    assert hk.action(model, orbit) == pytest.approx(4.0, abs=1e-12)


def test_action_constant_orbit_zero():
    model = StandardMap([[1.0]])
    for n in (1, 3, 5):
        orbit = PeriodicOrbit(points=np.full((n, 1), 0.37))
        assert hk.action(model, orbit) == pytest.approx(0.0, abs=1e-14)


def test_action_orthic_triangle_is_perimeter(triangle_model, orthic_orbit):
    from conftest import altitude_feet

    feet = altitude_feet(ACUTE_TRIANGLE)
    perimeter = sum(np.linalg.norm(feet[i] - feet[(i + 1) % 3]) for i in range(3))
    assert hk.action(triangle_model, orthic_orbit) == pytest.approx(perimeter, abs=1e-12)


def test_residual_fixed_point_exact(standard_map_k1):
    orbit = PeriodicOrbit(points=np.zeros((1, 1)))
    assert np.all(hk.residual(standard_map_k1, orbit) == 0.0)


def test_residual_perturbed_fixed_point_taylor(standard_map_k1):
    eps = 1e-3
    orbit = PeriodicOrbit(points=np.full((4, 1), eps))
    res = hk.residual(standard_map_k1, orbit)
    # each entry is -V'(eps) = K sin(eps) for V = K cos
    assert np.max(np.abs(res - np.sin(eps))) < 1e-12


def test_refine_ellipse_major_axis():
    model = bl.ellipse_billiard(2.0, 1.0, 2)
    guess = PeriodicOrbit(points=np.array([[0.05], [np.pi - 0.05]]))
    orbit = hk.refine_orbit(model, guess, tol=1e-12)
    ambient = model.ambient_points(orbit)
    assert orbit.converged and orbit.residual_norm < 1e-12
    assert np.max(np.abs(np.abs(ambient[:, 0]) - 2.0)) < 1e-12
    assert np.max(np.abs(ambient[:, 1])) < 1e-12


def test_refine_exact_fixed_point_zero_iterations(standard_map_k1):
    orbit = hk.refine_orbit(standard_map_k1, PeriodicOrbit(points=np.zeros((1, 1))))
    assert orbit.converged
    assert len(orbit.newton_history) == 1  # residual already below tolerance


def test_refine_midpoints_to_orthic(triangle_model):
    guess = PeriodicOrbit(points=np.full((3, 1), 0.5), chart_tags=(0, 1, 2))
    orbit = hk.refine_orbit(triangle_model, guess, tol=1e-12)
    assert np.max(np.abs(orbit.points - foot_parameters(ACUTE_TRIANGLE))) < 1e-10


def test_refine_idempotent(triangle_model):
    orbit = hk.refine_orbit(
        triangle_model, PeriodicOrbit(points=np.full((3, 1), 0.5)), tol=1e-12
    )
    again = hk.refine_orbit(triangle_model, orbit, tol=1e-12)
    assert np.max(np.abs(again.points - orbit.points)) < 1e-14


def test_cyclic_relabel_preserves_convergence_and_action(triangle_model):
    # rotating an orbit rotates both its points and, for billiards, the
    # itinerary of boundary pieces walked by the generating function
    orbit = hk.refine_orbit(
        triangle_model, PeriodicOrbit(points=np.full((3, 1), 0.5), chart_tags=(0, 1, 2)),
        tol=1e-12,
    )
    base = hk.action(triangle_model, orbit)
    for shift in range(1, 3):
        rotated = orbit.rotated(shift)
        model = bl.polygon_billiard(ACUTE_TRIANGLE, cycle=rotated.chart_tags)
        refreshed = orbit_with_residual(
            model, rotated.points, chart_tags=rotated.chart_tags, tol=1e-11
        )
        assert refreshed.converged
        assert hk.action(model, refreshed) == pytest.approx(base, abs=1e-12)


def test_cyclic_relabel_single_law():
    model = StandardMap([[1.0]], cosine_potential(5.0))
    guess = PeriodicOrbit(points=np.array([[2.5], [-2.5]]))
    orbit = hk.refine_orbit(model, guess, tol=1e-12)
    base = hk.action(model, orbit)
    rotated = orbit_with_residual(model, orbit.rotated(1).points, tol=1e-11)
    assert rotated.converged
    assert hk.action(model, rotated) == pytest.approx(base, abs=1e-12)


def test_advance_free_map():
    model = StandardMap([[1.0]])
    _, z = hk.advance(model, [0.1], [0.3])
    assert z[0] == pytest.approx(0.5, abs=1e-13)


def test_advance_fixed_point(standard_map_k1):
    _, z = hk.advance(standard_map_k1, [0.0], [0.0])
    assert abs(z[0]) < 1e-12


def test_advance_circle_equal_angles():
    model = bl.circle_billiard(1.0, 3)
    _, z = hk.advance(model, [0.0], [2 * np.pi / 3])
    assert z[0] == pytest.approx(4 * np.pi / 3, abs=1e-11)


def test_advance_preserves_twist_two_form(rng):
    # the pulled-back symplectic form of the step map matches the original:
    # dT^T Omega(y, z) dT = Omega(x, y), with Jacobians by finite differences
    model = StandardMap([[1.0]], cosine_potential(0.8))
    h = 1e-6
    for _ in range(10):
        x = rng.uniform(-2, 2, 1)
        y = rng.uniform(-2, 2, 1)
        _, z = hk.advance(model, x, y)
        jac = np.empty((2, 2))
        for col, (dx, dy) in enumerate(((np.array([h]), 0.0), (0.0, np.array([h])))):
            zp = hk.advance(model, x + dx, y + dy, guess=z)[1]
            zm = hk.advance(model, x - dx, y - dy, guess=z)[1]
            jac[:, col] = [(0.0 if col == 0 else 1.0), (zp[0] - zm[0]) / (2 * h)]
        b_xy = hk.evaluate_blocks(model, 0, x, y).twist[0, 0]
        b_yz = hk.evaluate_blocks(model, 0, y, z).twist[0, 0]
        omega_xy = np.array([[0.0, b_xy], [-b_xy, 0.0]])
        omega_yz = np.array([[0.0, b_yz], [-b_yz, 0.0]])
        dT = np.array([[0.0, 1.0], [jac[1, 0], jac[1, 1]]])
        assert np.max(np.abs(dT.T @ omega_yz @ dT - omega_xy)) < 1e-8


def test_fd_fallback_blocks_close_to_analytic():
    class ValueOnly(hk.DiscreteLagrangian):
        dim = 1

        def value(self, i, x, y):
            return 0.5 * (x[0] - y[0]) ** 2 - 0.5 * (np.cos(x[0]) + np.cos(y[0]))

    fd = ValueOnly()
    exact = StandardMap([[1.0]], cosine_potential(1.0))
    assert fd.uses_fd_second_derivatives and not exact.uses_fd_second_derivatives
    b_fd = hk.evaluate_blocks(fd, 0, [0.4], [0.9])
    b_ex = hk.evaluate_blocks(exact, 0, [0.4], [0.9])
    assert abs(b_fd.d11[0, 0] - b_ex.d11[0, 0]) < 1e-6
    assert abs(b_fd.twist[0, 0] - b_ex.twist[0, 0]) < 1e-6


def test_degenerate_family_refinement_flags_suspect():
    # rotations of a circle polygon form a symmetry family: exact Newton is
    # singular there and the least-squares fallback must flag it
    model = bl.circle_billiard(1.0, 3)
    guess = PeriodicOrbit(points=bl.circle_polygon_orbit(3) + np.array([[1e-4], [-2e-4], [5e-5]]))
    orbit = hk.refine_orbit(model, guess, tol=1e-11)
    assert orbit.converged
    assert orbit.degenerate_suspect


def test_mixed_partials_consistent(rng):
    # d12 agrees with differentiating grad1 in the second argument
    models = [
        StandardMap(np.array([[1.0, 0.3], [0.3, 2.0]]), TrigPotential(2, cos_terms=[(0.6, [1, 1])])),
        bl.ellipse_billiard(2.0, 1.0, 2),
    ]
    h = 1e-6
    for model in models:
        for _ in range(10):
            x = rng.uniform(0.3, 1.2, model.dim)
            y = rng.uniform(2.0, 3.0, model.dim)
            d12 = model.second_blocks(0, x, y)[2]
            for b in range(model.dim):
                e = np.zeros(model.dim)
                e[b] = h
                fd = (model.grad1(0, x, y + e) - model.grad1(0, x, y - e)) / (2 * h)
                assert np.max(np.abs(d12[:, b] - fd)) < 1e-6 * (1 + np.max(np.abs(fd)))
