import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from morrey.ball_modular import RadiusLadder
from morrey.errors import ParameterError
from morrey.grid_core import (BallIndicator, FamilyDescriptor, Gaussian, GridFunction, make_grid,
                              synthesize)
from morrey.operators import (OperatorSpec, apply_operator, check_size_condition, frac_maximal,
                              get_kernel, hardy_lower, hardy_upper, hybrid_calK, hybrid_K,
                              maximal, riesz, sharp_maximal, truncated_singular)


class TestPointValues(unittest.TestCase):
    """Closed-form values for the indicator of [-1, 1]."""

    @classmethod
    def setUpClass(cls):
        cls.spec = make_grid(1, 8.0, 4096)
        cls.chi = synthesize(cls.spec, FamilyDescriptor(BallIndicator((0.0,), 1.0)))
        cls.ladder = RadiusLadder.covering(cls.spec)

    def center(self, point: float) -> float:
        return float(self.chi.center_of(self.chi.nearest_index(point))[0])

    def test_maximal_outside(self):
        # M chi(2) = 1/3, attained at t = 3
        single = maximal(self.chi, RadiusLadder(3.0, 2.0, 1))
        self.assertAlmostEqual(single.value_at(2.0), 1.0 / 3.0, delta=0.002)
        value = maximal(self.chi, self.ladder).value_at(2.0)
        self.assertGreater(value, 0.3)
        self.assertLess(value, 1.0 / 3.0 + 0.002)

    def test_maximal_inside(self):
        self.assertEqual(maximal(self.chi, self.ladder).value_at(0.0), 1.0)

    def test_fractional_maximal_origin(self):
        value = frac_maximal(self.chi, 0.5, self.ladder).value_at(0.0)
        self.assertAlmostEqual(value, 2.0 ** 0.5, delta=0.015)

    def test_riesz_origin(self):
        self.assertAlmostEqual(riesz(self.chi, 0.5).value_at(0.0), 4.0, delta=0.04)

    def test_riesz_self_cell_rule(self):
        kept = riesz(self.chi, 0.5).value_at(0.0)
        dropped = riesz(self.chi, 0.5, self_cell="drop").value_at(0.0)
        self.assertLess(dropped, kept)
        with self.assertRaises(ParameterError):
            riesz(self.chi, 0.5, self_cell="half")

    def test_hardy_lower_outside(self):
        x = self.center(3.0)
        self.assertAlmostEqual(hardy_lower(self.chi, 0.0).value_at(3.0), 2.0 / x, places=12)

    def test_hardy_upper_inside(self):
        x = self.center(0.5)
        value = hardy_upper(self.chi, 0.0).value_at(0.5)
        self.assertAlmostEqual(value, 2.0 * math.log(1.0 / x), delta=0.02)

    def test_hilbert_outside(self):
        x = self.center(2.0)
        value = truncated_singular(self.chi, "hilbert1d", 0.1).value_at(2.0)
        self.assertAlmostEqual(value, math.log((x + 1.0) / (x - 1.0)), delta=1e-3)


class TestOperatorIdentities(unittest.TestCase):

    def setUp(self):
        self.spec = make_grid(1, 4.0, 256)
        self.f = synthesize(self.spec, FamilyDescriptor(Gaussian((0.7,), 0.8)))
        self.g = synthesize(self.spec, FamilyDescriptor(BallIndicator((-1.0,), 0.5)))

    def test_hybrids_at_beta_n_are_hardy(self):
        np.testing.assert_allclose(hybrid_K(self.f, 1.0).values,
                                   hardy_lower(self.f, 0.0).values, rtol=1e-12)
        np.testing.assert_allclose(hybrid_calK(self.f, 1.0).values,
                                   hardy_upper(self.f, 0.0).values, rtol=1e-12)

    def test_riesz_is_linear(self):
        combo = self.f.with_values(2.0 * self.f.values - 3.0 * self.g.values)
        expected = 2.0 * riesz(self.f, 0.3).values - 3.0 * riesz(self.g, 0.3).values
        np.testing.assert_allclose(riesz(combo, 0.3).values, expected, atol=1e-10)

    def test_sharp_maximal_of_constant(self):
        ones = GridFunction(self.spec, np.ones(256))
        ladder = RadiusLadder.covering(self.spec)
        self.assertEqual(float(np.max(sharp_maximal(ones, ladder).values)), 0.0)

    def test_maximal_dominates_function(self):
        # the one-cell ball average comes out of prefix-sum differences
        ladder = RadiusLadder.covering(self.spec)
        slack = 1e-12 * float(np.max(np.abs(self.f.values)))
        self.assertTrue(np.all(maximal(self.f, ladder).values >= np.abs(self.f.values) - slack))

    def test_hardy_is_zero_where_region_is_empty(self):
        # the two innermost cells have nothing strictly inside them
        inner = hardy_lower(self.f, 0.5).values
        self.assertEqual(inner[127], 0.0)
        self.assertEqual(inner[128], 0.0)


class TestOperatorAxioms(unittest.TestCase):
    """Sublinearity, homogeneity and monotonicity on nonnegative random data."""

    def setUp(self):
        self.spec = make_grid(1, 4.0, 256)
        self.ladder = RadiusLadder.covering(self.spec)
        rng = np.random.default_rng(3)
        self.f = GridFunction(self.spec, rng.random(256))
        self.g = GridFunction(self.spec, rng.random(256))
        self.operators = {
            "M": lambda u: maximal(u, self.ladder),
            "M#": lambda u: sharp_maximal(u, self.ladder),
            "H": lambda u: hardy_lower(u, 0.0),
            "calH": lambda u: hardy_upper(u, 0.0),
        }

    def assertBelow(self, lower, upper, msg):
        slack = 1e-12 * max(1.0, float(np.max(np.abs(upper))))
        self.assertTrue(np.all(lower <= upper + slack), msg=msg)

    def test_sublinear(self):
        total = self.f.with_values(self.f.values + self.g.values)
        for name, op in self.operators.items():
            self.assertBelow(op(total).values, op(self.f).values + op(self.g).values, name)

    def test_homogeneous(self):
        scaled = self.f.with_values(-2.0 * self.f.values)
        for name, op in self.operators.items():
            expected = op(self.f).values
            if name in ("H", "calH"):
                expected = -expected
            np.testing.assert_allclose(op(scaled).values, 2.0 * expected, rtol=1e-12, atol=1e-12,
                                       err_msg=name)

    def test_monotone(self):
        bigger = self.f.with_values(self.f.values + self.g.values)
        for name in ("M", "H", "calH"):
            op = self.operators[name]
            self.assertBelow(op(self.f).values, op(bigger).values, name)


class TestOperatorSpec(unittest.TestCase):

    def setUp(self):
        self.spec = make_grid(1, 4.0, 64)

    def test_json_round_trip(self):
        op = OperatorSpec("truncated_singular", kernel_id="hilbert1d", epsilon=0.25)
        self.assertEqual(OperatorSpec.from_json(op.to_json()), op)
        self.assertEqual(OperatorSpec.from_json('{"kind": "riesz", "alpha": 0.5}').alpha, 0.5)
        self.assertEqual(op.label, "S")

    def test_rejects_bad_specs(self):
        with self.assertRaises(ParameterError):
            OperatorSpec("laplace")
        with self.assertRaises(ParameterError):
            OperatorSpec("riesz")
        with self.assertRaises(ParameterError):
            OperatorSpec.from_json('{"kind": "riesz", "alpha": 0.5, "gamma": 1}')
        with self.assertRaises(ParameterError):
            OperatorSpec.from_json("not json")
        for text in ('{"kind": "riesz", "alpha": "x"}', '{"kind": "riesz", "alpha": [1]}',
                     '{"kind": "riesz", "alpha": true}', '{"kind": 3}',
                     '{"kind": "truncated_singular", "kernel_id": 1, "epsilon": 0.1}'):
            with self.assertRaises(ParameterError, msg=text):
                OperatorSpec.from_json(text)
        self.assertEqual(OperatorSpec.from_json('{"kind": "riesz", "alpha": "0.5"}').alpha, 0.5)

    def test_validate_against_grid(self):
        with self.assertRaises(ParameterError):
            OperatorSpec("riesz", alpha=1.0).validate(self.spec)
        with self.assertRaises(ParameterError):
            OperatorSpec("riesz", alpha=0.0).validate(self.spec)
        OperatorSpec("hardy_lower", alpha=0.0).validate(self.spec)
        with self.assertRaises(ParameterError):
            OperatorSpec("hybrid_k", beta=1.5).validate(self.spec)
        with self.assertRaises(ParameterError):
            OperatorSpec("truncated_singular", kernel_id="hilbert1d", epsilon=0.01).validate(self.spec)
        with self.assertRaises(ParameterError):
            OperatorSpec("truncated_singular", kernel_id="riesz2d_x1", epsilon=0.5).validate(self.spec)

    def test_apply_dispatch(self):
        f = synthesize(self.spec, FamilyDescriptor(Gaussian((0.0,), 1.0)))
        out = apply_operator(f, OperatorSpec("maximal"))
        np.testing.assert_array_equal(out.values, maximal(f, RadiusLadder.covering(self.spec)).values)
        out = apply_operator(f, OperatorSpec("hardy_upper", alpha=0.3))
        np.testing.assert_array_equal(out.values, hardy_upper(f, 0.3).values)

    def test_kernel_size_condition(self):
        self.assertAlmostEqual(check_size_condition(get_kernel("hilbert1d"), self.spec), 1.0)
        spec2 = make_grid(2, 2.0, 8)
        self.assertLessEqual(check_size_condition(get_kernel("riesz2d_x1"), spec2), 1.0 + 1e-12)
        with self.assertRaises(ParameterError):
            get_kernel("beurling")


if __name__ == '__main__':
    unittest.main()
