import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from morrey import config
from morrey.ball_modular import set_fast_path_threshold, uses_fast_path
from morrey.errors import OracleSizeError, ParameterError
from morrey.grid_core import (BallIndicator, FamilyDescriptor, Gaussian, GridFunction,
                              RandomTrain, make_grid, synthesize)
from morrey.operators import OperatorSpec
from morrey.oracle import (BallMass, Modular, OracleRequest, fast_eval, oracle_eval,
                           oracle_values, relative_error)

AGREEMENT = 1e-10

OPERATORS_1D = [
    OperatorSpec("maximal"),
    OperatorSpec("sharp_maximal"),
    OperatorSpec("frac_maximal", alpha=0.4),
    OperatorSpec("riesz", alpha=0.5),
    OperatorSpec("hardy_lower", alpha=0.3),
    OperatorSpec("hardy_upper", alpha=0.0),
    OperatorSpec("hybrid_k", beta=0.6),
    OperatorSpec("hybrid_calk", beta=0.6),
    OperatorSpec("truncated_singular", kernel_id="hilbert1d", epsilon=0.1),
]

OPERATORS_2D = [
    OperatorSpec("maximal"),
    OperatorSpec("sharp_maximal"),
    OperatorSpec("frac_maximal", alpha=1.0),
    OperatorSpec("riesz", alpha=1.5),
    OperatorSpec("hardy_lower", alpha=0.5),
    OperatorSpec("hardy_upper", alpha=1.0),
    OperatorSpec("hybrid_k", beta=1.2),
    OperatorSpec("hybrid_calk", beta=2.0),
    OperatorSpec("truncated_singular", kernel_id="riesz2d_x1", epsilon=0.5),
]


class TestOracleAgreement(unittest.TestCase):
    """Fast paths against direct summation on small grids."""

    def check(self, f, request):
        error = relative_error(fast_eval(f, request), oracle_eval(f, request))
        self.assertLessEqual(error, AGREEMENT, msg=str(request.op))

    def test_operators_1d(self):
        spec = make_grid(1, 4.0, 256)
        f = synthesize(spec, FamilyDescriptor(RandomTrain(count=6, seed=3, extent=3.0)))
        for op in OPERATORS_1D:
            self.check(f, OracleRequest(op))

    def test_operators_2d(self):
        spec = make_grid(2, 2.0, 16)
        f = synthesize(spec, FamilyDescriptor(Gaussian((0.3, -0.4), 0.7)))
        for op in OPERATORS_2D:
            self.check(f, OracleRequest(op))

    def check_targets(self, f, request, targets):
        full = fast_eval(f, request)
        picked = oracle_values(f, request, targets)
        scale = float(np.max(np.abs(full.values))) or 1.0
        error = float(np.max(np.abs(full.flat[targets] - picked))) / scale
        self.assertLessEqual(error, AGREEMENT, msg=str(request.op))

    def test_operators_1d_large(self):
        spec = make_grid(1, 8.0, 4096)
        f = synthesize(spec, FamilyDescriptor(RandomTrain(count=8, seed=5, extent=6.0)))
        targets = list(range(0, spec.size, 97)) + [spec.size // 2, spec.size - 1]
        for op in OPERATORS_1D:
            self.check_targets(f, OracleRequest(op), targets)

    def test_operators_2d_large(self):
        spec = make_grid(2, 4.0, 64)
        f = synthesize(spec, FamilyDescriptor(Gaussian((0.3, -0.4), 0.9)))
        targets = list(range(0, spec.size, 131)) + [spec.size // 2 + 32]
        for op in OPERATORS_2D:
            self.check_targets(f, OracleRequest(op), targets)

    def test_riesz_without_self_cell(self):
        spec = make_grid(1, 4.0, 256)
        f = synthesize(spec, FamilyDescriptor(Gaussian((0.0,), 1.0)))
        self.check(f, OracleRequest(OperatorSpec("riesz", alpha=0.5), self_cell="drop"))

    def test_ball_mass_and_modular(self):
        spec = make_grid(2, 2.0, 16)
        f = synthesize(spec, FamilyDescriptor(BallIndicator((0.5, 0.5), 0.8)))
        self.check(f, OracleRequest(BallMass(0.6)))
        self.check(f, OracleRequest(Modular(2.0, 0.5, 0.9)))


class TestFourierPath(unittest.TestCase):
    """Convolution-based sums against direct summation."""

    def setUp(self):
        set_fast_path_threshold(100)

    def tearDown(self):
        set_fast_path_threshold(config.FAST_PATH_THRESHOLD)

    def test_operators_on_fast_path(self):
        spec = make_grid(1, 4.0, 256)
        self.assertTrue(uses_fast_path(spec))
        f = synthesize(spec, FamilyDescriptor(RandomTrain(count=6, seed=3, extent=3.0)))
        for op in (OperatorSpec("maximal"), OperatorSpec("frac_maximal", alpha=0.4),
                   OperatorSpec("riesz", alpha=0.5),
                   OperatorSpec("truncated_singular", kernel_id="hilbert1d", epsilon=0.1)):
            request = OracleRequest(op)
            error = relative_error(fast_eval(f, request), oracle_eval(f, request))
            self.assertLessEqual(error, AGREEMENT, msg=str(op))

    def test_ball_mass_on_fast_path_2d(self):
        spec = make_grid(2, 2.0, 16)
        f = synthesize(spec, FamilyDescriptor(BallIndicator((0.5, 0.5), 0.8)))
        request = OracleRequest(BallMass(0.6))
        self.assertLessEqual(relative_error(fast_eval(f, request), oracle_eval(f, request)),
                             AGREEMENT)


class TestOracleRequests(unittest.TestCase):

    def setUp(self):
        self.spec = make_grid(1, 2.0, 64)
        self.f = GridFunction(self.spec, np.ones(64))

    def test_size_guard(self):
        request = OracleRequest(BallMass(0.5))
        with self.assertRaises(OracleSizeError):
            oracle_eval(self.f, request, size_guard=10)
        forced = OracleRequest(BallMass(0.5), override_guard=True)
        self.assertEqual(oracle_eval(self.f, forced, size_guard=10).spec, self.spec)

    def test_selected_targets(self):
        request = OracleRequest(BallMass(0.5))
        full = oracle_eval(self.f, request)
        picked = oracle_values(self.f, request, [0, 31, 63])
        np.testing.assert_array_equal(picked, full.flat[[0, 31, 63]])

    def test_refinement_repeats_coarse_values(self):
        coarse = oracle_eval(self.f, OracleRequest(BallMass(1.0)))
        fine = oracle_eval(self.f, OracleRequest(BallMass(1.0), refinement=4))
        np.testing.assert_allclose(fine.values, coarse.values, atol=2 * self.spec.spacing)

    def test_refinement_from_family(self):
        # odd refinement keeps coarse centres on fine centres, so the self cell is exact
        family = FamilyDescriptor(BallIndicator((0.0,), 1.0))
        f = synthesize(self.spec, family)
        request = OracleRequest(OperatorSpec("riesz", alpha=0.5), refinement=3, family=family)
        value = oracle_values(f, request, [32])[0]
        self.assertAlmostEqual(value, 4.0, delta=0.05)

    def test_radius_scan(self):
        request = OracleRequest(OperatorSpec("maximal"), radius_scan=[0.25, 0.5, 1.0])
        self.assertTrue(np.all(oracle_eval(self.f, request).values == 1.0))
        with self.assertRaises(ParameterError):
            fast_eval(self.f, request)
        with self.assertRaises(ParameterError):
            OracleRequest(OperatorSpec("maximal"), radius_scan=[1.0, 0.5])
        with self.assertRaises(ParameterError):
            OracleRequest(BallMass(0.5), refinement=0)

    def test_relative_error_needs_same_grid(self):
        other = GridFunction(make_grid(1, 2.0, 32), np.ones(32))
        with self.assertRaises(ParameterError):
            relative_error(self.f, other)


if __name__ == '__main__':
    unittest.main()
