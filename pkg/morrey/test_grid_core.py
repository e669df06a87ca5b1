import os
import shutil
import struct
import sys
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from morrey import config
from morrey.errors import GridError, GridFileError, ParameterError
from morrey.grid_core import (BallIndicator, BumpTrain, FamilyDescriptor, Gaussian, GridFunction,
                              PowerLaw, RandomTrain, SmoothBump, dilate_family, make_grid,
                              pointwise_power, read_grid, synthesize, unit_ball_volume,
                              write_grid, write_grid_csv)
from morrey.reporting import read_rows_csv


class TestGridSpec(unittest.TestCase):
    """Grid construction and geometry."""

    def test_spacing_and_shape(self):
        spec = make_grid(1, 8.0, 4096)
        self.assertEqual(spec.spacing, 16.0 / 4096)
        self.assertEqual(spec.shape, (4096,))
        spec2 = make_grid(2, 4.0, 32)
        self.assertEqual(spec2.size, 1024)
        self.assertAlmostEqual(spec2.cell_volume, 0.0625)

    def test_rejects_bad_grids(self):
        with self.assertRaises(GridError):
            make_grid(1, 8.0, 4097)
        with self.assertRaises(GridError):
            make_grid(4, 8.0, 16)
        with self.assertRaises(GridError):
            make_grid(1, 0.0, 16)
        with self.assertRaises(GridError):
            make_grid(1, 8.0, 2)

    def test_no_centre_at_origin(self):
        spec = make_grid(2, 1.0, 8)
        self.assertTrue(np.all(spec.half_index_coords() % 2 == 1))
        self.assertGreater(spec.radial_half_norm2().min(), 0)

    def test_unit_ball_volumes(self):
        self.assertAlmostEqual(unit_ball_volume(1), 2.0)
        self.assertAlmostEqual(unit_ball_volume(2), np.pi)
        self.assertAlmostEqual(unit_ball_volume(3), 4.0 * np.pi / 3.0)

    def test_refined(self):
        spec = make_grid(1, 2.0, 16)
        fine = spec.refined(4)
        self.assertEqual(fine.cells_per_axis, 64)
        self.assertEqual(fine.half_width, 2.0)


class TestGridFunction(unittest.TestCase):

    def setUp(self):
        self.spec = make_grid(1, 4.0, 64)

    def test_immutable(self):
        f = GridFunction(self.spec, np.ones(64))
        self.assertFalse(f.values.flags.writeable)
        with self.assertRaises(AttributeError):
            f.values = np.zeros(64)

    def test_rejects_non_finite_and_wrong_size(self):
        values = np.ones(64)
        values[3] = np.nan
        with self.assertRaises(GridError):
            GridFunction(self.spec, values)
        with self.assertRaises(GridError):
            GridFunction(self.spec, np.ones(63))

    def test_value_lookup(self):
        f = synthesize(self.spec, FamilyDescriptor(BallIndicator((0.0,), 1.0)))
        self.assertEqual(f.value_at(0.3), 1.0)
        self.assertEqual(f.value_at(2.0), 0.0)
        index = f.nearest_index(0.01)
        self.assertAlmostEqual(float(f.center_of(index)[0]), 0.0625)

    def test_boundary_and_zero(self):
        self.assertTrue(GridFunction(self.spec, np.zeros(64)).is_zero())
        f = synthesize(self.spec, FamilyDescriptor(SmoothBump((0.0,), 1.0)))
        self.assertFalse(f.touches_boundary())
        self.assertTrue(GridFunction(self.spec, np.ones(64)).touches_boundary())


class TestFamilies(unittest.TestCase):

    def setUp(self):
        self.spec = make_grid(1, 4.0, 64)

    def test_ball_cell_count(self):
        f = synthesize(self.spec, FamilyDescriptor(BallIndicator((0.0,), 1.0)))
        self.assertEqual(int(np.sum(f.values)), 16)

    def test_dilation(self):
        family = FamilyDescriptor(BallIndicator((0.0,), 1.0))
        f2 = synthesize(self.spec, dilate_family(family, 2.0))
        self.assertEqual(int(np.sum(f2.values)), 8)
        twice = dilate_family(dilate_family(family, 2.0), 0.5)
        self.assertEqual(twice.dilation, 1.0)
        with self.assertRaises(GridError):
            dilate_family(family, 0.0)

    def test_power_law_cap(self):
        f = synthesize(self.spec, FamilyDescriptor(PowerLaw(0.5)))
        cap = (self.spec.spacing / 2.0) ** -0.5
        self.assertAlmostEqual(float(f.values.max()), cap)

    def test_smooth_bump_support(self):
        f = synthesize(self.spec, FamilyDescriptor(SmoothBump((0.0,), 1.0)))
        centers = self.spec.cell_centers()[:, 0]
        self.assertTrue(np.all(f.flat[np.abs(centers) >= 1.0] == 0.0))
        self.assertAlmostEqual(float(f.flat.max()), np.exp(1.0 - 1.0 / (1.0 - 0.0625 ** 2)))

    def test_bump_train(self):
        train = BumpTrain((((-2.0,), 0.5, 1.0), ((2.0,), 0.5, 3.0)))
        f = synthesize(self.spec, FamilyDescriptor(train))
        self.assertEqual(f.value_at(-2.0), 1.0)
        self.assertEqual(f.value_at(2.0), 3.0)
        with self.assertRaises(GridError):
            FamilyDescriptor(BumpTrain(()))

    def test_random_train_seeded(self):
        a = synthesize(self.spec, FamilyDescriptor(RandomTrain(count=5, seed=7, extent=3.0)))
        b = synthesize(self.spec, FamilyDescriptor(RandomTrain(count=5, seed=7, extent=3.0)))
        c = synthesize(self.spec, FamilyDescriptor(RandomTrain(count=5, seed=8, extent=3.0)))
        np.testing.assert_array_equal(a.values, b.values)
        self.assertFalse(np.array_equal(a.values, c.values))

    def test_pointwise_power(self):
        f = GridFunction(self.spec, np.linspace(-2.0, 2.0, 64))
        np.testing.assert_allclose(pointwise_power(f, 2).values, f.values ** 2)
        np.testing.assert_allclose(pointwise_power(f, 1).values, np.abs(f.values))
        with self.assertRaises(ParameterError):
            pointwise_power(f, 0.5)


class TestGridFiles(unittest.TestCase):
    """Binary and CSV grid files."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp(prefix="morrey_grid_")
        self.spec = make_grid(2, 2.0, 8)
        self.f = synthesize(self.spec, FamilyDescriptor(Gaussian((0.0, 0.5), 0.7)))
        self.path = os.path.join(self.test_dir, "f.mry")

    def tearDown(self):
        if os.path.exists(self.test_dir):
            shutil.rmtree(self.test_dir)

    def test_round_trip(self):
        write_grid(self.f, self.path)
        g = read_grid(self.path)
        self.assertEqual(g.spec, self.spec)
        np.testing.assert_array_equal(g.values, self.f.values)

    def _write_bytes(self, data: bytes):
        with open(self.path, "wb") as fh:
            fh.write(data)

    def test_truncated_header(self):
        self._write_bytes(b"MRY1\x01")
        with self.assertRaises(GridFileError):
            read_grid(self.path)

    def test_bad_magic_and_version(self):
        write_grid(self.f, self.path)
        with open(self.path, "rb") as fh:
            data = fh.read()
        self._write_bytes(b"XXXX" + data[4:])
        with self.assertRaisesRegex(GridFileError, "magic"):
            read_grid(self.path)
        self._write_bytes(b"MRY2" + data[4:])
        with self.assertRaisesRegex(GridFileError, "version"):
            read_grid(self.path)

    def test_truncated_and_trailing_payload(self):
        write_grid(self.f, self.path)
        with open(self.path, "rb") as fh:
            data = fh.read()
        self._write_bytes(data[:-8])
        with self.assertRaisesRegex(GridFileError, "truncated payload"):
            read_grid(self.path)
        self._write_bytes(data + b"\x00")
        with self.assertRaisesRegex(GridFileError, "trailing"):
            read_grid(self.path)

    def test_invalid_header_and_nan(self):
        header = struct.pack(config.GRID_FILE_HEADER, config.GRID_FILE_MAGIC, 1, 5, 1.0)
        self._write_bytes(header + b"\x00" * 40)
        with self.assertRaisesRegex(GridFileError, "invalid header"):
            read_grid(self.path)
        header = struct.pack(config.GRID_FILE_HEADER, config.GRID_FILE_MAGIC, 1, 4, 1.0)
        payload = np.array([0.0, np.nan, 1.0, 2.0], dtype="<f8").tobytes()
        self._write_bytes(header + payload)
        with self.assertRaisesRegex(GridFileError, "non-finite"):
            read_grid(self.path)

    def test_csv_export(self):
        csv_path = os.path.join(self.test_dir, "f.csv")
        count = write_grid_csv(self.f, csv_path)
        self.assertEqual(count, self.spec.size)
        rows = read_rows_csv(csv_path)
        self.assertEqual(rows[0], ["x1", "x2", "value"])
        self.assertEqual(len(rows), self.spec.size + 1)
        self.assertEqual(float(rows[1][2]), float(self.f.flat[0]))


if __name__ == '__main__':
    unittest.main()
