import math
import tempfile
import unittest
from unittest import mock

import numpy as np

from src.semiclassica.config import Quadrature
from src.semiclassica.errors import EmptyContour, InvalidQN, NoRoot, OrbitCollision, ValidationError
from src.semiclassica.helium_pt import (
    contour_nu_of_chi,
    crossing_anomalies,
    double_average,
    effective_hamiltonian_grid,
    evaluate,
    first_order_energy,
    interpolator,
    level_bounds,
    quantize_w,
    scaled_interaction,
)
from src.semiclassica.models import EquivalentPair
from src.semiclassica.numkit import find_root

FAST = Quadrature(abs_tol=1e-9, rel_tol=1e-8, max_subdivisions=4000)


def midpoint_oracle(nu: float, theta: float, points: int = 1200) -> float:
    e = math.sqrt(1.0 - nu * nu)
    xi = (np.arange(points) + 0.5) * 2.0 * math.pi / points
    x1, y1 = np.cos(xi) - e, nu * np.sin(xi)
    along, across = np.cos(xi) - e, -nu * np.sin(xi)
    x2 = along * math.cos(theta) - across * math.sin(theta)
    y2 = along * math.sin(theta) + across * math.cos(theta)
    weight = 1.0 - e * np.cos(xi)
    distance = np.hypot(x1[:, None] - x2[None, :], y1[:, None] - y2[None, :])
    return float(np.sum(weight[:, None] * weight[None, :] / distance)) / points**2


class PairAverageTests(unittest.TestCase):
    def test_scaling_with_principal_quantum_number(self) -> None:
        low = double_average(EquivalentPair(2.0, 1, 0.5, 2.0), FAST)
        high = double_average(EquivalentPair(2.0, 2, 0.5, 2.0), FAST)
        self.assertAlmostEqual(low / high, 4.0, delta=1e-12)

    def test_mirror_symmetry(self) -> None:
        base = scaled_interaction(0.4, 1.1, FAST)
        self.assertAlmostEqual(scaled_interaction(0.4, -1.1, FAST), base, delta=1e-10)
        self.assertAlmostEqual(scaled_interaction(0.4, 2.0 * math.pi - 1.1, FAST), base, delta=1e-10)

    def test_matches_brute_force_double_sum(self) -> None:
        value = scaled_interaction(0.6, 0.5 * math.pi, FAST)
        self.assertAlmostEqual(value, midpoint_oracle(0.6, 0.5 * math.pi), delta=5e-3 * value)

    def test_crossings_share_polar_angle(self) -> None:
        nu, theta = 0.6, 1.3
        e = math.sqrt(1.0 - nu * nu)
        for xi in crossing_anomalies(nu, theta):
            first = np.array([math.cos(xi) - e, nu * math.sin(xi)])
            along, across = math.cos(xi) - e, -nu * math.sin(xi)
            second = np.array(
                [along * math.cos(theta) - across * math.sin(theta), along * math.sin(theta) + across * math.cos(theta)]
            )
            self.assertLess(np.linalg.norm(first - second), 1e-12)

    def test_repulsion_grows_as_perihelia_align(self) -> None:
        values = [scaled_interaction(0.05, theta, FAST) for theta in (math.pi, 0.5 * math.pi, 0.25 * math.pi)]
        self.assertLess(values[0], values[1])
        self.assertLess(values[1], values[2])

    def test_antiparallel_near_radial_orbits_converge(self) -> None:
        value = scaled_interaction(0.02, math.pi)
        self.assertTrue(math.isfinite(value))
        self.assertAlmostEqual(value, midpoint_oracle(0.02, math.pi, points=2000), delta=1e-2 * value)

    def test_invalid_and_coincident_orbits(self) -> None:
        with self.assertRaises(ValidationError):
            scaled_interaction(0.0, 1.0)
        with self.assertRaises(ValidationError):
            scaled_interaction(1.2, 1.0)
        with self.assertRaises(ValidationError):
            double_average(EquivalentPair(-1.0, 2, 0.5, 1.0))
        with self.assertRaises(OrbitCollision):
            scaled_interaction(0.5, 0.0)
        with self.assertRaises(OrbitCollision):
            scaled_interaction(1.0, 2.0)


class GridTestCase(unittest.TestCase):
    grid = None

    @classmethod
    def setUpClass(cls) -> None:
        if GridTestCase.grid is None:
            GridTestCase.grid = effective_hamiltonian_grid(12, 12, quadrature=FAST)
        cls.spline = interpolator(GridTestCase.grid)


class GridTests(GridTestCase):
    def test_interpolates_nodes_and_is_even_in_chi(self) -> None:
        grid = self.grid
        self.assertEqual(grid.shape, (12, 12))
        self.assertAlmostEqual(evaluate(self.spline, grid.nu[3], grid.chi[5]), grid.values[3, 5], delta=1e-9)
        self.assertEqual(evaluate(self.spline, 0.5, -0.7), evaluate(self.spline, 0.5, 0.7))

    def test_minimum_sits_at_the_antipodal_corner(self) -> None:
        self.assertAlmostEqual(float(np.min(self.grid.values)), self.grid.values[0, 0], delta=1e-12)

    def test_cache_round_trip(self) -> None:
        with tempfile.TemporaryDirectory() as cache_dir:
            first = effective_hamiltonian_grid(4, 4, (0.2, 0.8), (0.0, 1.0), FAST, cache_dir)
            with mock.patch("src.semiclassica.helium_pt.scaled_interaction", side_effect=AssertionError("recomputed")):
                second = effective_hamiltonian_grid(4, 4, (0.2, 0.8), (0.0, 1.0), FAST, cache_dir)
        np.testing.assert_array_equal(first.values, second.values)
        self.assertEqual(first.cache_key, second.cache_key)

    def test_default_grid_starts_at_the_radial_corner(self) -> None:
        grid = effective_hamiltonian_grid(4, 4)
        self.assertAlmostEqual(grid.nu[0], 0.02, delta=1e-15)
        self.assertEqual(grid.chi[0], 0.0)
        self.assertTrue(np.all(np.isfinite(grid.values)))
        self.assertAlmostEqual(float(np.min(grid.values)), grid.values[0, 0], delta=1e-12)

    def test_invalid_grid_specs(self) -> None:
        with self.assertRaises(ValidationError):
            effective_hamiltonian_grid(3, 10)
        with self.assertRaises(ValidationError):
            effective_hamiltonian_grid(10, 10, nu_range=(0.1, 1.0))
        with self.assertRaises(ValidationError):
            effective_hamiltonian_grid(10, 10, chi_range=(0.0, 0.5 * math.pi))


class ContourTests(GridTestCase):
    def test_level_near_minimum_shrinks_to_a_point(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        contour = contour_nu_of_chi(lo + 1e-4 * (hi - lo), self.grid, self.spline)
        self.assertLess(contour.chi_m, 0.25)

    def test_level_sets_are_nested(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        contours = [contour_nu_of_chi(lo + f * (hi - lo), self.grid, self.spline) for f in (0.1, 0.25, 0.4, 0.6, 0.8)]
        turning = [c.chi_m for c in contours]
        areas = [c.area() for c in contours]
        self.assertEqual(turning, sorted(turning))
        self.assertEqual(areas, sorted(areas))

    def test_points_lie_on_the_level(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        w = lo + 0.5 * (hi - lo)
        contour = contour_nu_of_chi(w, self.grid, self.spline)
        for fraction in (0.2, 0.5, 0.8):
            nu = contour(fraction * contour.chi_m)
            self.assertAlmostEqual(evaluate(self.spline, nu, fraction * contour.chi_m), w, delta=1e-9)

    def test_levels_outside_the_grid(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        with self.assertRaises(EmptyContour):
            contour_nu_of_chi(lo - 1e-3, self.grid, self.spline)
        with self.assertRaises(EmptyContour):
            contour_nu_of_chi(hi + 1e-3, self.grid, self.spline)


class QuantizationTests(GridTestCase):
    def test_small_q_selects_the_bottom_of_the_well(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        q, w = quantize_w(200, 0, self.grid)
        self.assertAlmostEqual(q, 0.0025, delta=1e-15)
        self.assertLess(w - lo, 0.05 * (hi - lo))

    def test_levels_increase_with_k(self) -> None:
        levels = [quantize_w(6, k, self.grid)[1] for k in range(3)]
        self.assertEqual(levels, sorted(levels))

    def test_enclosed_area_matches_q(self) -> None:
        q, w = quantize_w(50, 30, self.grid)
        self.assertAlmostEqual(q, 0.61, delta=1e-12)
        contour = contour_nu_of_chi(w, self.grid, self.spline)
        self.assertAlmostEqual(contour.area(), 0.5 * math.pi * q, delta=1e-6)

    def test_turning_point_at_two_fifths_pi_encloses_q_061(self) -> None:
        lo, hi = level_bounds(self.grid, self.spline)
        gap = 1e-6 * (hi - lo)
        turning = lambda w: contour_nu_of_chi(w, self.grid, self.spline).chi_m - 0.4 * math.pi  # noqa: E731
        w = find_root(turning, (lo + gap, hi - gap), xtol=1e-12)
        area = contour_nu_of_chi(w, self.grid, self.spline).area()
        self.assertAlmostEqual(area / (0.5 * math.pi), 0.61, delta=0.02)

    def test_low_q_levels_match_quantum_first_order(self) -> None:
        # 1s^2: <1/r12> = 5Z/8; n = 2 lower 1S (2s^2 - 2p^2 mixed): 0.12296 Z
        for n, expected in ((1, 0.625), (2, 4.0 * 0.12296)):
            q, w = quantize_w(n, 0, self.grid)
            self.assertLessEqual(q, 0.5)
            self.assertAlmostEqual(w, expected, delta=0.05 * expected, msg=n)

    def test_energy_scaling(self) -> None:
        helium = first_order_energy(2.0, 3, 1, self.grid)
        self.assertAlmostEqual(first_order_energy(4.0, 3, 1, self.grid) / helium, 2.0, delta=1e-12)
        self.assertAlmostEqual(helium / first_order_energy(2.0, 5, 2, self.grid), 25.0 / 9.0, delta=1e-6)
        self.assertGreater(helium, 0.0)

    def test_invalid_quantum_numbers(self) -> None:
        with self.assertRaises(InvalidQN):
            quantize_w(4, 4, self.grid)
        with self.assertRaises(ValidationError):
            first_order_energy(0.0, 4, 1, self.grid)
        with self.assertRaises(NoRoot):
            quantize_w(40, 39, self.grid)


if __name__ == "__main__":
    unittest.main()
