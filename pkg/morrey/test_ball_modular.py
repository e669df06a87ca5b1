import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from morrey import config
from morrey.ball_modular import (MorreyParams, RadiusLadder, ball_count, ball_mass_field,
                                 ball_sum, modular_field, modular_profile, monotone_envelope,
                                 morrey_norm, set_fast_path_threshold, vstar_sequence)
from morrey.errors import ParameterError
from morrey.grid_core import (BumpTrain, FamilyDescriptor, Gaussian, GridFunction, PowerLaw,
                              SmoothBump, make_grid, synthesize)


def bump_train_spec():
    """Unit-mass bumps every 3 units out to the edge of [-16, 16]."""
    centers = [s * (1.5 + 3 * k) for k in range(5) for s in (-1, 1)]
    return BumpTrain(tuple(((c,), 0.5, 1.0) for c in centers))


class TestBallSums(unittest.TestCase):
    """Ball membership, counts and the two summation paths."""

    def tearDown(self):
        set_fast_path_threshold(config.FAST_PATH_THRESHOLD)

    def test_counts_1d(self):
        spec = make_grid(1, 4.0, 64)
        counts = ball_count(spec, 0.3)
        self.assertEqual(counts[32], 5)
        self.assertEqual(counts[0], 3)
        self.assertEqual(counts[63], 3)
        self.assertFalse(counts.flags.writeable)

    def test_counts_2d_lattice(self):
        spec = make_grid(2, 4.0, 32)
        counts = ball_count(spec, 0.6)
        self.assertEqual(counts[16, 16], 21)
        self.assertEqual(counts[0, 0], 8)

    def test_fourier_matches_direct(self):
        spec = make_grid(2, 4.0, 32)
        f = synthesize(spec, FamilyDescriptor(Gaussian((0.5, -0.5), 1.0)))
        direct = ball_sum(f.values, spec, 1.3)
        set_fast_path_threshold(1)
        fourier = ball_sum(f.values, spec, 1.3)
        np.testing.assert_allclose(fourier, direct, atol=1e-9)

    def test_covering_radius_sums_everything(self):
        spec = make_grid(1, 2.0, 16)
        values = np.arange(16, dtype=float)
        out = ball_sum(values, spec, 100.0)
        self.assertTrue(np.all(out == np.sum(values)))

    def test_mass_field(self):
        spec = make_grid(1, 4.0, 64)
        mass = ball_mass_field(GridFunction(spec, np.ones(64)), 0.3)
        self.assertAlmostEqual(float(mass.values[32]), 5 * 0.125)

    def test_bad_radius(self):
        spec = make_grid(1, 4.0, 64)
        with self.assertRaises(ParameterError):
            ball_sum(np.ones(64), spec, 0.0)
        with self.assertRaises(ParameterError):
            ball_sum(np.ones(64), spec, float("inf"))


class TestMorreyParams(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ParameterError):
            MorreyParams(0.5, 0.1)
        with self.assertRaises(ParameterError):
            MorreyParams(2.0, -0.1)
        with self.assertRaises(ParameterError):
            MorreyParams(2.0, 0.5, q=3.0)
        with self.assertRaises(ParameterError):
            MorreyParams(2.0, 1.5).check_dim(1)
        with self.assertRaises(ParameterError):
            MorreyParams(2.0, 0.5, 3.0, 1.0).check_dim(1)
        self.assertEqual(MorreyParams(2.0, 0.5, 3.0, 0.75).output, MorreyParams(3.0, 0.75))

    def test_ladder(self):
        spec = make_grid(1, 8.0, 4096)
        ladder = RadiusLadder.covering(spec)
        self.assertEqual(ladder.radii[0], spec.spacing)
        self.assertTrue(ladder.reaches(spec))
        self.assertFalse(RadiusLadder(spec.spacing, 2.0, 2).reaches(spec))
        with self.assertRaises(ParameterError):
            RadiusLadder(0.1, 1.0, 4)
        with self.assertRaises(ParameterError):
            RadiusLadder(0.1, 2.0, 0)


class TestModular(unittest.TestCase):

    def test_modular_field_of_constant(self):
        spec = make_grid(1, 4.0, 64)
        mp = MorreyParams(2.0, 0.5)
        field = modular_field(GridFunction(spec, np.ones(64)), mp, 0.3)
        self.assertAlmostEqual(float(field.values[32]), 5 * 0.125 * 0.3 ** -0.5)

    def test_norm_of_constant_without_lambda(self):
        spec = make_grid(1, 1.0, 16)
        f = GridFunction(spec, np.ones(16))
        ladder = RadiusLadder.covering(spec)
        self.assertAlmostEqual(morrey_norm(f, MorreyParams(1.0, 0.0), ladder), 2.0)

    def test_norm_needs_reaching_ladder(self):
        spec = make_grid(1, 1.0, 16)
        f = GridFunction(spec, np.ones(16))
        with self.assertRaises(ParameterError):
            morrey_norm(f, MorreyParams(1.0, 0.0), RadiusLadder(spec.spacing, 2.0, 2))

    def test_power_law_profile_is_flat(self):
        # |x|^{-1/2} with p = 1, lambda = 1/2: modular at the origin is 4 for every r
        spec = make_grid(1, 8.0, 4096)
        f = synthesize(spec, FamilyDescriptor(PowerLaw(0.5)))
        ladder = RadiusLadder.covering(spec)
        profile = modular_profile(f, MorreyParams(1.0, 0.5), ladder)
        mid = (profile.radii >= 0.5) & (profile.radii <= 4.0)
        self.assertGreater(int(np.sum(mid)), 8)
        for value in profile.sup_values[mid]:
            self.assertGreater(value, 3.7)
            self.assertLess(value, 4.05)
        norm = morrey_norm(f, MorreyParams(1.0, 0.5), ladder)
        self.assertLess(norm, 4.05)

    def test_profile_is_translation_invariant(self):
        spec = make_grid(1, 8.0, 512)
        f = synthesize(spec, FamilyDescriptor(SmoothBump((0.0,), 1.0)))
        shifted = f.with_values(np.roll(f.values, 40))
        self.assertAlmostEqual(float(np.sum(shifted.values)), float(np.sum(f.values)), places=12)
        ladder = RadiusLadder.covering(spec)
        mp = MorreyParams(2.0, 0.5)
        base, moved = modular_profile(f, mp, ladder), modular_profile(shifted, mp, ladder)
        np.testing.assert_allclose(moved.sup_values, base.sup_values, rtol=1e-12)
        self.assertEqual(moved.argmax[0] - base.argmax[0], 40)

    def test_profile_lookup(self):
        spec = make_grid(1, 4.0, 256)
        f = synthesize(spec, FamilyDescriptor(SmoothBump((0.0,), 1.0)))
        ladder = RadiusLadder.covering(spec)
        profile = modular_profile(f, MorreyParams(2.0, 0.5), ladder)
        self.assertEqual(len(profile.rows()), ladder.count)
        self.assertAlmostEqual(profile.value_at(20.0), profile.total_p_mass * 20.0 ** -0.5)
        self.assertAlmostEqual(profile.value_at(float(ladder.radii[3])), profile.sup_values[3])
        with self.assertRaises(ParameterError):
            profile.value_at(spec.spacing / 2)


class TestVStar(unittest.TestCase):

    def test_compact_support_reaches_zero(self):
        spec = make_grid(1, 4.0, 2048)
        f = synthesize(spec, FamilyDescriptor(SmoothBump((0.0,), 1.0)))
        seq = vstar_sequence(f, 2.0, 3)
        self.assertEqual(list(seq.n_values), [1, 2, 3])
        self.assertTrue(np.all(seq.a_values == 0.0))

    def test_bump_train_stays_put(self):
        spec = make_grid(1, 16.0, 4096)
        f = synthesize(spec, FamilyDescriptor(bump_train_spec()))
        seq = vstar_sequence(f, 2.0, 13)
        np.testing.assert_allclose(seq.a_values, 1.0)

    def test_non_increasing(self):
        spec = make_grid(1, 8.0, 512)
        f = synthesize(spec, FamilyDescriptor(Gaussian((0.0,), 2.0)))
        seq = vstar_sequence(f, 2.0, 7)
        self.assertTrue(np.all(np.diff(seq.envelope) <= 0))
        np.testing.assert_allclose(seq.a_values, seq.envelope, rtol=1e-12)
        self.assertGreater(seq.a_values[0], seq.a_values[-1])

    def test_envelope_clips_rounding(self):
        raw = np.array([2.0, 1.0, 1.0 + 1e-15, -1e-18])
        np.testing.assert_array_equal(monotone_envelope(raw), [2.0, 1.0, 1.0, 0.0])
        self.assertEqual(monotone_envelope([]).size, 0)

    def test_bad_n_max(self):
        spec = make_grid(1, 4.0, 64)
        f = GridFunction(spec, np.ones(64))
        with self.assertRaises(ParameterError):
            vstar_sequence(f, 2.0, 0)


if __name__ == '__main__':
    unittest.main()
