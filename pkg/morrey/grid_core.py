"""
Uniform-grid function representation for the Morrey toolkit.

Grids are cell-centred on the cube [-L, L]^n with an even number of cells per
axis, so no cell centre sits at the origin. Cell centre coordinates are kept
as odd integers in units of half a cell (L / cells), which makes every region
test (|y| < |x|, |x - y| < r) an exact integer comparison.

Functions are extended by zero outside the cube.
"""

import logging
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence, Tuple, Union

import numpy as np

from . import config
from .errors import GridError, GridFileError, ParameterError
from .parallel import map_ordered
from .reporting import write_rows_csv

logger = logging.getLogger(__name__)

Point = Union[float, Sequence[float]]


def unit_ball_volume(dim: int) -> float:
    """Measure of the unit ball in R^dim."""
    return math.pi ** (dim / 2.0) / math.gamma(dim / 2.0 + 1.0)


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_width: float
    cells_per_axis: int

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.cells_per_axis

    @property
    def unit(self) -> float:
        """Half a cell: the length unit of the integer centre coordinates."""
        return self.half_width / self.cells_per_axis

    @property
    def unit_ball_volume(self) -> float:
        return unit_ball_volume(self.dim)

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.cells_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.cells_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def diameter(self) -> float:
        return 2.0 * self.half_width * math.sqrt(self.dim)

    def axis_half_indices(self) -> np.ndarray:
        """Odd integers 2i - N + 1; the centre of cell i is this times `unit`."""
        n = self.cells_per_axis
        return 2 * np.arange(n, dtype=np.int64) - n + 1

    def half_index_coords(self) -> np.ndarray:
        """(size, dim) integer centre coordinates in row-major cell order."""
        axis = self.axis_half_indices()
        mesh = np.meshgrid(*([axis] * self.dim), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def cell_centers(self) -> np.ndarray:
        return self.half_index_coords().astype(np.float64) * self.unit

    def radial_half_norm2(self) -> np.ndarray:
        """Squared centre norms in half-cell units, exact integers, grid shaped."""
        coords = self.half_index_coords()
        return np.sum(coords * coords, axis=1).reshape(self.shape)

    def radial_norms(self) -> np.ndarray:
        return np.sqrt(self.radial_half_norm2().astype(np.float64)) * self.unit

    def refined(self, factor: int) -> "GridSpec":
        return make_grid(self.dim, self.half_width, self.cells_per_axis * factor)


def make_grid(dim: int, half_width: float, cells_per_axis: int) -> GridSpec:
    """Validated grid constructor."""
    if isinstance(dim, bool) or int(dim) != dim or int(dim) not in config.SUPPORTED_DIMS:
        raise GridError(f"dim must be one of {config.SUPPORTED_DIMS}, got {dim!r}")
    if int(cells_per_axis) != cells_per_axis:
        raise GridError(f"cells_per_axis must be an integer, got {cells_per_axis!r}")
    cells = int(cells_per_axis)
    if cells < config.MIN_CELLS_PER_AXIS:
        raise GridError(f"cells_per_axis must be at least {config.MIN_CELLS_PER_AXIS}, got {cells}")
    if cells % 2:
        raise GridError(f"cells_per_axis must be even so no centre hits the origin, got {cells}")
    half_width = float(half_width)
    if not math.isfinite(half_width) or half_width <= 0.0:
        raise GridError(f"half_width must be positive, got {half_width!r}")
    return GridSpec(int(dim), half_width, cells)


class GridFunction:
    """Sampled real function on a GridSpec; values are read-only."""

    __slots__ = ("spec", "values")

    def __init__(self, spec: GridSpec, values):
        array = np.array(values, dtype=np.float64, copy=True)
        if array.size != spec.size:
            raise GridError(f"expected {spec.size} values for {spec}, got {array.size}")
        array = array.reshape(spec.shape)
        if not np.all(np.isfinite(array)):
            raise GridError("grid function values must be finite")
        array.setflags(write=False)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "values", array)

    def __setattr__(self, name, value):
        raise AttributeError("GridFunction is immutable")

    def __repr__(self) -> str:
        return f"GridFunction({self.spec}, max|f|={float(np.max(np.abs(self.values))):.6g})"

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.spec, values)

    def nearest_index(self, point: Point) -> Tuple[int, ...]:
        """Index of the cell containing point (clipped to the grid)."""
        coords = np.atleast_1d(np.asarray(point, dtype=np.float64))
        if coords.size == 1 and self.spec.dim > 1:
            coords = np.repeat(coords, self.spec.dim)
        if coords.size != self.spec.dim:
            raise GridError(f"point {point!r} does not have {self.spec.dim} coordinates")
        idx = np.floor((coords + self.spec.half_width) / self.spec.spacing).astype(np.int64)
        idx = np.clip(idx, 0, self.spec.cells_per_axis - 1)
        return tuple(int(i) for i in idx)

    def center_of(self, index: Tuple[int, ...]) -> np.ndarray:
        axis = self.spec.axis_half_indices()
        return np.array([axis[i] for i in index], dtype=np.float64) * self.spec.unit

    def value_at(self, point: Point) -> float:
        return float(self.values[self.nearest_index(point)])

    def is_zero(self) -> bool:
        return not np.any(self.values)

    def touches_boundary(self) -> bool:
        """True when the outermost layer of cells carries non-zero values."""
        v = self.values
        for axis in range(v.ndim):
            if np.any(np.take(v, 0, axis=axis)) or np.any(np.take(v, -1, axis=axis)):
                return True
        return False


# --- analytic families -----------------------------------------------------

def _as_center(center, dim: int) -> np.ndarray:
    c = np.atleast_1d(np.asarray(center, dtype=np.float64))
    if c.size == 1:
        return np.repeat(c, dim)
    if c.size != dim:
        raise GridError(f"centre {center!r} does not match dimension {dim}")
    return c


def _distance(points: np.ndarray, center) -> np.ndarray:
    c = _as_center(center, points.shape[1])
    diff = points - c
    return np.sqrt(np.sum(diff * diff, axis=1))


@dataclass(frozen=True)
class BallIndicator:
    center: Tuple[float, ...] = (0.0,)
    radius: float = 1.0
    height: float = 1.0

    def validate(self) -> None:
        if not self.radius > 0:
            raise GridError(f"BallIndicator radius must be positive, got {self.radius}")

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        inside = _distance(points, self.center) < self.radius
        return np.where(inside, float(self.height), 0.0)


@dataclass(frozen=True)
class PowerLaw:
    gamma: float = 0.5
    height: float = 1.0
    cap: bool = True

    def validate(self) -> None:
        if not self.gamma > 0:
            raise GridError(f"PowerLaw exponent must be positive, got {self.gamma}")

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        norms = np.sqrt(np.sum(points * points, axis=1))
        values = norms ** (-self.gamma)
        if self.cap:
            values = np.minimum(values, (spec.spacing / 2.0) ** (-self.gamma))
        return self.height * values


@dataclass(frozen=True)
class Gaussian:
    center: Tuple[float, ...] = (0.0,)
    width: float = 1.0
    height: float = 1.0

    def validate(self) -> None:
        if not self.width > 0:
            raise GridError(f"Gaussian width must be positive, got {self.width}")

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        d = _distance(points, self.center) / self.width
        return self.height * np.exp(-d * d)


@dataclass(frozen=True)
class SmoothBump:
    """C0-infinity bump exp(1 - 1/(1 - s^2)), peak value `height`."""

    center: Tuple[float, ...] = (0.0,)
    radius: float = 1.0
    height: float = 1.0

    def validate(self) -> None:
        if not self.radius > 0:
            raise GridError(f"SmoothBump radius must be positive, got {self.radius}")

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        s = _distance(points, self.center) / self.radius
        out = np.zeros_like(s)
        inside = s < 1.0
        s2 = s[inside] ** 2
        out[inside] = self.height * np.exp(1.0 - 1.0 / (1.0 - s2))
        return out


@dataclass(frozen=True)
class BumpTrain:
    """Sum of ball indicators, one per (center, radius, height)."""

    bumps: Tuple[Tuple[Tuple[float, ...], float, float], ...] = ()

    def validate(self) -> None:
        if not self.bumps:
            raise GridError("BumpTrain needs at least one bump")
        for center, radius, height in self.bumps:
            if not radius > 0:
                raise GridError(f"BumpTrain radius must be positive, got {radius}")

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        out = np.zeros(points.shape[0])
        for center, radius, height in self.bumps:
            out += np.where(_distance(points, center) < radius, float(height), 0.0)
        return out


@dataclass(frozen=True)
class RandomTrain:
    """Seeded random bump train; centres uniform in [-extent, extent]^n."""

    count: int = 8
    seed: int = 0
    extent: float = 4.0
    radius_range: Tuple[float, float] = (0.2, 0.6)
    height_range: Tuple[float, float] = (0.5, 1.5)

    def validate(self) -> None:
        if self.count < 1:
            raise GridError(f"RandomTrain count must be positive, got {self.count}")
        if not (0 < self.radius_range[0] <= self.radius_range[1]):
            raise GridError(f"bad radius range {self.radius_range}")
        if not self.extent > 0:
            raise GridError(f"RandomTrain extent must be positive, got {self.extent}")

    def realize(self, dim: int) -> BumpTrain:
        rng = np.random.default_rng(int(self.seed))
        centers = rng.uniform(-self.extent, self.extent, size=(self.count, dim))
        radii = rng.uniform(*self.radius_range, size=self.count)
        heights = rng.uniform(*self.height_range, size=self.count)
        return BumpTrain(tuple((tuple(float(v) for v in c), float(r), float(h))
                               for c, r, h in zip(centers, radii, heights)))

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        return self.realize(points.shape[1]).evaluate(points, spec)


Variant = Union[BallIndicator, PowerLaw, Gaussian, SmoothBump, BumpTrain, RandomTrain]


@dataclass(frozen=True)
class FamilyDescriptor:
    variant: Variant
    dilation: float = 1.0

    def __post_init__(self):
        if not (isinstance(self.dilation, (int, float)) and self.dilation > 0
                and math.isfinite(self.dilation)):
            raise GridError(f"dilation must be positive, got {self.dilation!r}")
        self.variant.validate()

    def evaluate(self, points: np.ndarray, spec: GridSpec) -> np.ndarray:
        """f(t x) at the given points."""
        return self.variant.evaluate(self.dilation * points, spec)


def dilate_family(family: FamilyDescriptor, t: float) -> FamilyDescriptor:
    """Descriptor of f(t .); dilations compose multiplicatively."""
    if not t > 0:
        raise GridError(f"dilation factor must be positive, got {t!r}")
    return replace(family, dilation=family.dilation * float(t))


def synthesize(spec: GridSpec, family: FamilyDescriptor) -> GridFunction:
    """Sample a family at every cell centre, analytically (never by resampling)."""
    if not family.dilation > 0:
        raise GridError(f"dilation must be positive, got {family.dilation!r}")
    centers = spec.cell_centers()
    chunk = max(1, config.CHUNK_ELEMENTS // max(1, spec.dim * 8))
    pieces = [centers[i:i + chunk] for i in range(0, centers.shape[0], chunk)]
    values = np.concatenate(map_ordered(lambda pts: family.evaluate(pts, spec), pieces))
    return GridFunction(spec, values)


def pointwise_power(f: GridFunction, p: float) -> GridFunction:
    """|f|^p cell by cell."""
    if not p >= 1:
        raise ParameterError(f"p must be at least 1, got {p!r}")
    magnitude = np.abs(f.values)
    if p == 1:
        return f.with_values(magnitude)
    return f.with_values(magnitude ** p)


# --- file I/O --------------------------------------------------------------

def write_grid(f: GridFunction, path) -> None:
    """Binary grid file: magic, u32 dim, u32 cells, f64 L, then f64 values."""
    spec = f.spec
    header = struct.pack(config.GRID_FILE_HEADER, config.GRID_FILE_MAGIC,
                         spec.dim, spec.cells_per_axis, spec.half_width)
    payload = np.ascontiguousarray(f.values, dtype="<f8").tobytes(order="C")
    Path(path).write_bytes(header + payload)
    logger.debug("wrote grid %s (%d cells)", path, spec.size)


def read_grid(path) -> GridFunction:
    data = Path(path).read_bytes()
    header_size = struct.calcsize(config.GRID_FILE_HEADER)
    if len(data) < header_size:
        raise GridFileError(f"{path}: truncated header ({len(data)} bytes)")
    magic, dim, cells, half_width = struct.unpack(config.GRID_FILE_HEADER, data[:header_size])
    if magic != config.GRID_FILE_MAGIC:
        if magic[:3] == config.GRID_FILE_MAGIC[:3]:
            raise GridFileError(f"{path}: unsupported grid file version {magic[3:]!r}")
        raise GridFileError(f"{path}: bad magic {magic!r}")
    try:
        spec = make_grid(dim, half_width, cells)
    except GridError as e:
        raise GridFileError(f"{path}: invalid header: {e}")
    payload = data[header_size:]
    expected = spec.size * 8
    if len(payload) < expected:
        raise GridFileError(f"{path}: truncated payload ({len(payload)} of {expected} bytes)")
    if len(payload) > expected:
        raise GridFileError(f"{path}: {len(payload) - expected} trailing bytes after payload")
    values = np.frombuffer(payload, dtype="<f8")
    if not np.all(np.isfinite(values)):
        raise GridFileError(f"{path}: non-finite values in payload")
    return GridFunction(spec, values.astype(np.float64))


def write_grid_csv(f: GridFunction, path) -> int:
    """One row per cell: centre coordinates then value."""
    header = [f"x{i + 1}" for i in range(f.spec.dim)] + ["value"]
    centers = f.spec.cell_centers()
    rows = (list(c) + [v] for c, v in zip(centers, f.flat))
    return write_rows_csv(header, rows, str(path))
