import math
import unittest
from unittest import mock

import numpy as np

from src.semiclassica.config import UNITS, OdeSolver, Quadrature
from src.semiclassica.errors import NoSignChange, NonConvergent
from src.semiclassica.numkit import (
    find_root,
    find_root_complex,
    gauss_legendre,
    integrate,
    integrate_ode,
)


class IntegrateTests(unittest.TestCase):
    def test_arcsine_both_endpoints(self) -> None:
        q = Quadrature(endpoint_mode="inv_sqrt_both")
        value = integrate(lambda x: 1.0 / math.sqrt(1.0 - x * x), -1.0, 1.0, q)
        self.assertAlmostEqual(value, math.pi, delta=1e-10)

    def test_polynomial(self) -> None:
        self.assertAlmostEqual(integrate(lambda x: x * x, 0.0, 1.0), 1.0 / 3.0, delta=1e-12)

    def test_polar_quantization_integral(self) -> None:
        L, m = 2.5, 1.0
        t1 = math.asin(m / L)

        def f(t: float) -> float:
            return math.sqrt(max(L * L - m * m / math.sin(t) ** 2, 0.0))

        q = Quadrature(endpoint_mode="inv_sqrt_both")
        self.assertAlmostEqual(integrate(f, t1, math.pi - t1, q), 1.5 * math.pi, delta=1e-9)

    def test_linearity_on_random_polynomials(self) -> None:
        rng = np.random.default_rng(7)
        for _ in range(5):
            p = np.polynomial.Polynomial(rng.normal(size=5))
            g = np.polynomial.Polynomial(rng.normal(size=4))
            alpha, beta = rng.normal(size=2)
            combined = integrate(lambda x: alpha * p(x) + beta * g(x), -1.0, 2.0)
            separate = alpha * integrate(p, -1.0, 2.0) + beta * integrate(g, -1.0, 2.0)
            self.assertAlmostEqual(combined, separate, delta=1e-10)

    def test_nan_integrand_raises(self) -> None:
        with self.assertRaises(NonConvergent):
            integrate(lambda x: float("nan"), 0.0, 1.0)

    def test_gauss_legendre_complex_path(self) -> None:
        value = gauss_legendre(lambda z: z**2, 0.0, 1.0 + 1.0j, n=8)
        self.assertAlmostEqual(abs(value - (1.0 + 1.0j) ** 3 / 3.0), 0.0, delta=1e-13)


class FindRootTests(unittest.TestCase):
    def test_sqrt_two(self) -> None:
        self.assertAlmostEqual(find_root(lambda x: x * x - 2.0, (1.0, 2.0)), math.sqrt(2.0), delta=1e-10)

    def test_hydrogen_ground_state_action(self) -> None:
        root = find_root(lambda e: math.pi / math.sqrt(-2.0 * e) - math.pi, (-1.0, -0.1))
        self.assertAlmostEqual(root, -0.5, delta=1e-12)

    def test_fixed_point(self) -> None:
        f = lambda x: math.cos(x) - x  # noqa: E731
        root = find_root(f, (0.0, 1.0))
        again = find_root(f, (root - 1e-3, root + 1e-3))
        self.assertAlmostEqual(root, again, delta=1e-14)

    def test_no_sign_change(self) -> None:
        with self.assertRaises(NoSignChange):
            find_root(lambda x: x * x + 1.0, (-1.0, 1.0))


class ComplexRootTests(unittest.TestCase):
    def test_imaginary_unit(self) -> None:
        result = find_root_complex(lambda z: z * z + 1.0, 0.1 + 0.9j)
        self.assertAlmostEqual(abs(result.root - 1j), 0.0, delta=1e-10)
        self.assertGreater(result.iterations, 0)

    def test_logarithm(self) -> None:
        result = find_root_complex(lambda z: np.exp(z) - 2.0, 1.0)
        self.assertAlmostEqual(abs(result.root - math.log(2.0)), 0.0, delta=1e-10)


class IntegrateOdeTests(unittest.TestCase):
    def test_oscillator_period(self) -> None:
        traj = integrate_ode(lambda t, y: np.array([y[1], -y[0]]), (1.0, 0.0), (0.0, 2.0 * math.pi))
        np.testing.assert_allclose(traj.y[:, -1], [1.0, 0.0], atol=1e-8)

    def test_kepler_period(self) -> None:
        def rhs(t: float, y: np.ndarray) -> np.ndarray:
            r3 = (y[0] ** 2 + y[1] ** 2) ** 1.5
            return np.array([y[2], y[3], -y[0] / r3, -y[1] / r3])

        # a = 1 ellipse with e = 0.5 started at perihelion.
        y0 = (0.5, 0.0, 0.0, math.sqrt(3.0))
        traj = integrate_ode(rhs, y0, (0.0, 2.0 * math.pi))
        np.testing.assert_allclose(traj.y[:2, -1], y0[:2], atol=1e-8)

    def test_event_location(self) -> None:
        def crossing(t: float, y: np.ndarray) -> float:
            return y[0]

        crossing.terminal = True
        traj = integrate_ode(lambda t, y: np.array([y[1], -y[0]]), (1.0, 0.0), (0.0, 10.0), events=[crossing])
        self.assertTrue(traj.terminated)
        self.assertAlmostEqual(traj.events[0].t, math.pi / 2.0, delta=1e-9)

    def test_event_times_refined_to_event_tol(self) -> None:
        def crossing(t: float, y: np.ndarray) -> float:
            return y[0]

        rhs = lambda t, y: np.array([y[1], -y[0]])  # noqa: E731
        solver = OdeSolver(1e-12, 1e-12, event_tol=1e-7)
        with mock.patch("src.semiclassica.numkit.find_root", wraps=find_root) as spy:
            traj = integrate_ode(rhs, (1.0, 0.0), (0.0, 10.0), events=[crossing], s=solver)
        self.assertEqual(len(traj.events), 3)
        self.assertEqual(spy.call_count, 3)
        self.assertTrue(all(call.kwargs["xtol"] == 1e-7 for call in spy.call_args_list))
        for k, event in enumerate(traj.events):
            self.assertAlmostEqual(event.t, (k + 0.5) * math.pi, delta=2e-7)
            self.assertAlmostEqual(event.y[0], 0.0, delta=2e-7)
        self.assertIsNone(traj.sol)

    def test_tightening_tolerances_converges(self) -> None:
        rhs = lambda t, y: np.array([y[1], -math.sin(y[0])])  # noqa: E731
        loose = integrate_ode(rhs, (1.0, 0.0), (0.0, 20.0), s=OdeSolver(1e-6, 1e-6))
        tight = integrate_ode(rhs, (1.0, 0.0), (0.0, 20.0), s=OdeSolver(5e-7, 5e-7))
        reference = integrate_ode(rhs, (1.0, 0.0), (0.0, 20.0), s=OdeSolver(1e-13, 1e-13))
        err_loose = abs(loose.y[0, -1] - reference.y[0, -1])
        err_tight = abs(tight.y[0, -1] - reference.y[0, -1])
        self.assertLess(abs(tight.y[0, -1] - loose.y[0, -1]), max(err_loose, 1e-12) * 3.0)
        self.assertLessEqual(err_tight, err_loose * 2.0 + 1e-12)


class UnitsTests(unittest.TestCase):
    def test_roundtrips(self) -> None:
        for value in (1e-6, 0.37, 8.0, 1234.5):
            self.assertAlmostEqual(UNITS.field_to_kv_per_cm(UNITS.field_from_kv_per_cm(value)) / value, 1.0, delta=1e-14)
            self.assertAlmostEqual(UNITS.energy_to_ev(UNITS.energy_from_ev(value)) / value, 1.0, delta=1e-14)
            self.assertAlmostEqual(UNITS.time_to_s(UNITS.time_from_s(value)) / value, 1.0, delta=1e-14)
            self.assertAlmostEqual(UNITS.area_to_cm2(UNITS.area_from_cm2(value)) / value, 1.0, delta=1e-14)
            self.assertAlmostEqual(UNITS.b_to_tesla(UNITS.b_from_tesla(value)) / value, 1.0, delta=1e-14)

    def test_stark_field(self) -> None:
        self.assertAlmostEqual(UNITS.field_from_kv_per_cm(8.0), 1.5557e-6, delta=5e-10)

    def test_area_conversion(self) -> None:
        self.assertAlmostEqual(UNITS.area_to_cm2(1.0), 2.8003e-17, delta=1e-20)


if __name__ == "__main__":
    unittest.main()
