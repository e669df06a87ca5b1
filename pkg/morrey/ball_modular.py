"""
Ball integrals, the Morrey modular and norm, modular profiles and the
(V*) sequence.

Ball membership follows the cell-centre rule: a cell belongs to B(x, r) when
its centre does. Distances are compared as exact integers in half-cell units,
see `in_ball`. Ball sums are raw (no h^n factor) so indicator sums and cell
counts are exact integers on the direct path.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import fftconvolve

from . import config
from .errors import ParameterError
from .grid_core import GridFunction, GridSpec, pointwise_power
from .parallel import map_ordered

logger = logging.getLogger(__name__)

_fast_path_threshold = config.FAST_PATH_THRESHOLD


def set_fast_path_threshold(cells: int) -> None:
    """Grids with more cells than this use Fourier convolution."""
    global _fast_path_threshold
    if int(cells) < 1:
        raise ParameterError(f"fast path threshold must be positive, got {cells}")
    _fast_path_threshold = int(cells)


def uses_fast_path(spec: GridSpec) -> bool:
    return spec.size > _fast_path_threshold


def in_ball(d2, unit: float, r: float):
    """Membership test for squared half-cell distance d2 (int or int array)."""
    return d2 * (unit * unit) < r * r


def _check_radius(r: float) -> float:
    r = float(r)
    if not (r > 0 and math.isfinite(r)):
        raise ParameterError(f"radius must be positive and finite, got {r!r}")
    return r


def _shifted(a: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """out[i] = a[i + k] along the leading axes, zero where i + k falls off the grid."""
    n = a.shape[0]
    out = np.zeros_like(a)
    dst, src = [], []
    for k in offsets:
        if abs(k) >= n:
            return out
        if k >= 0:
            dst.append(slice(0, n - k))
            src.append(slice(k, n))
        else:
            dst.append(slice(-k, n))
            src.append(slice(0, n + k))
    out[tuple(dst)] = a[tuple(src)]
    return out


def _row_half_width(lead2: int, unit: float, r: float, limit: int) -> int:
    """Largest w >= 0 with the offset (lead, w) inside the ball, or -1."""
    guess = (r * r) / (4.0 * unit * unit) - lead2
    w = int(math.floor(math.sqrt(guess))) if guess > 0 else 0
    while in_ball(4 * (lead2 + (w + 1) ** 2), unit, r):
        w += 1
    while w >= 0 and not in_ball(4 * (lead2 + w * w), unit, r):
        w -= 1
    return min(w, limit)


def _ball_sum_direct(values: np.ndarray, spec: GridSpec, r: float) -> np.ndarray:
    n_cells = spec.cells_per_axis
    unit = spec.unit
    reach = min(n_cells - 1, int(r / spec.spacing) + 1)

    prefix = np.zeros(values.shape[:-1] + (n_cells + 1,))
    np.cumsum(values, axis=-1, out=prefix[..., 1:])
    idx = np.arange(n_cells)

    out = np.zeros_like(values)
    for lead in itertools.product(range(-reach, reach + 1), repeat=spec.dim - 1):
        lead2 = sum(k * k for k in lead)
        if not in_ball(4 * lead2, unit, r):
            continue
        w = _row_half_width(lead2, unit, r, n_cells - 1)
        lo = np.clip(idx - w, 0, n_cells)
        hi = np.clip(idx + w + 1, 0, n_cells)
        window = prefix[..., hi] - prefix[..., lo]
        out += _shifted(window, lead) if lead else window
    return out


def ball_mask(spec: GridSpec, r: float) -> np.ndarray:
    """0/1 mask of cell offsets inside B(0, r), odd length per axis."""
    reach = min(spec.cells_per_axis - 1, int(r / spec.spacing) + 1)
    axis = np.arange(-reach, reach + 1, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * spec.dim), indexing="ij")
    d2 = 4 * sum(m * m for m in mesh)
    return in_ball(d2, spec.unit, r).astype(np.float64)


def _ball_sum_fourier(values: np.ndarray, spec: GridSpec, r: float) -> np.ndarray:
    return fftconvolve(values, ball_mask(spec, r), mode="same")


def covers_grid(spec: GridSpec, r: float) -> bool:
    """True when every ball of radius r around a centre contains every cell."""
    far = 4 * spec.dim * (spec.cells_per_axis - 1) ** 2
    return bool(in_ball(far, spec.unit, r))


def ball_sum(values: np.ndarray, spec: GridSpec, r: float) -> np.ndarray:
    """Raw sum of values over the cells of B(x, r), for every centre x."""
    r = _check_radius(r)
    values = np.asarray(values, dtype=np.float64).reshape(spec.shape)
    if covers_grid(spec, r):
        return np.full(spec.shape, np.sum(values))
    if uses_fast_path(spec):
        out = _ball_sum_fourier(values, spec, r)
        if np.all(values >= 0):
            np.maximum(out, 0.0, out=out)
        return out
    return _ball_sum_direct(values, spec, r)


@lru_cache(maxsize=128)
def _cached_count(spec: GridSpec, r: float) -> np.ndarray:
    counts = ball_sum(np.ones(spec.shape), spec, r)
    if uses_fast_path(spec):
        counts = np.rint(counts)
    counts.setflags(write=False)
    return counts


def ball_count(spec: GridSpec, r: float) -> np.ndarray:
    """Number of grid cells in B(x, r) for every centre x (read-only)."""
    return _cached_count(spec, _check_radius(r))


def ball_mass_field(g: GridFunction, r: float) -> GridFunction:
    """h^n times the ball sum of g: the integral of g over B(x, r)."""
    return g.with_values(g.spec.cell_volume * ball_sum(g.values, g.spec, r))


# --- Morrey exponents and radius ladders -----------------------------------

@dataclass(frozen=True)
class MorreyParams:
    p: float
    lam: float
    q: Optional[float] = None
    mu: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p >= 1):
            raise ParameterError(f"p must satisfy 1 <= p < inf, got {self.p!r}")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ParameterError(f"lambda must be non-negative, got {self.lam!r}")
        if (self.q is None) != (self.mu is None):
            raise ParameterError("q and mu must be given together")
        if self.q is not None:
            if not (math.isfinite(self.q) and self.q > 1):
                raise ParameterError(f"q must satisfy 1 < q < inf, got {self.q!r}")
            if not (math.isfinite(self.mu) and self.mu >= 0):
                raise ParameterError(f"mu must be non-negative, got {self.mu!r}")

    def check_dim(self, dim: int) -> "MorreyParams":
        if self.lam > dim:
            raise ParameterError(f"lambda must satisfy 0 <= lambda <= n = {dim}, got {self.lam}")
        if self.mu is not None and self.mu >= dim:
            raise ParameterError(f"mu must satisfy 0 <= mu < n = {dim}, got {self.mu}")
        return self

    @property
    def output(self) -> "MorreyParams":
        """The (q, mu) pair as a plain MorreyParams."""
        if self.q is None:
            raise ParameterError("no output pair (q, mu) set")
        return MorreyParams(self.q, self.mu)

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda": self.lam, "q": self.q, "mu": self.mu}


@dataclass(frozen=True)
class RadiusLadder:
    r_min: float
    ratio: float = config.DEFAULT_LADDER_RATIO
    count: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.r_min) and self.r_min > 0):
            raise ParameterError(f"ladder r_min must be positive, got {self.r_min!r}")
        if not (math.isfinite(self.ratio) and self.ratio > 1):
            raise ParameterError(f"ladder ratio must exceed 1, got {self.ratio!r}")
        if int(self.count) != self.count or self.count < 1:
            raise ParameterError(f"ladder count must be a positive integer, got {self.count!r}")

    @property
    def radii(self) -> np.ndarray:
        return self.r_min * self.ratio ** np.arange(int(self.count), dtype=np.float64)

    @property
    def top(self) -> float:
        return float(self.radii[-1])

    def slack(self, dim: int) -> float:
        """Ladder slack rho^n."""
        return self.ratio ** dim

    def reaches(self, spec: GridSpec) -> bool:
        return self.top >= spec.diameter

    @classmethod
    def covering(cls, spec: GridSpec, ratio: Optional[float] = None,
                 r_min: Optional[float] = None, reach: float = 1.0) -> "RadiusLadder":
        """Shortest ladder from r_min (default h) reaching reach x the grid diameter."""
        ratio = config.DEFAULT_LADDER_RATIO if ratio is None else float(ratio)
        r_min = spec.spacing if r_min is None else float(r_min)
        target = reach * spec.diameter
        count = max(1, int(math.ceil(math.log(target / r_min) / math.log(ratio))) + 1)
        ladder = cls(r_min, ratio, count)
        while ladder.top < target:
            ladder = cls(r_min, ratio, ladder.count + 1)
        return ladder

    def to_dict(self) -> dict:
        return {"r_min": self.r_min, "ratio": self.ratio, "count": int(self.count)}


# --- modulars --------------------------------------------------------------

def modular_field(f: GridFunction, mp: MorreyParams, r: float) -> GridFunction:
    """r^-lambda times the integral of |f|^p over B(x, r)."""
    mp.check_dim(f.spec.dim)
    r = _check_radius(r)
    mass = ball_mass_field(pointwise_power(f, mp.p), r)
    return mass.with_values(mass.values * r ** (-mp.lam))


@dataclass(frozen=True, eq=False)
class ModularProfile:
    params: MorreyParams
    radii: np.ndarray
    sup_values: np.ndarray
    argmax: Tuple[int, ...]
    total_p_mass: float
    diameter: float

    def tail(self, r: float) -> float:
        """Modular sup for balls containing the whole support."""
        return self.total_p_mass * float(r) ** (-self.params.lam)

    def value_at(self, r: float) -> float:
        r = float(r)
        if r >= self.diameter:
            return self.tail(r)
        if r < self.radii[0]:
            raise ParameterError(f"radius {r} is below the ladder (r_min = {self.radii[0]})")
        return float(np.interp(math.log(r), np.log(self.radii), self.sup_values))

    @property
    def peak(self) -> float:
        return float(np.max(self.sup_values)) if len(self.sup_values) else 0.0

    def rows(self) -> List[Tuple[float, float]]:
        return [(float(r), float(v)) for r, v in zip(self.radii, self.sup_values)]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "radii": self.radii,
            "sup_values": self.sup_values,
            "argmax": list(self.argmax),
            "total_p_mass": self.total_p_mass,
            "diameter": self.diameter,
        }


def _profile_point(g: GridFunction, lam: float, r: float) -> Tuple[float, int]:
    field_values = ball_sum(g.values, g.spec, r).ravel() * r ** (-lam)
    k = int(np.argmax(field_values))
    return g.spec.cell_volume * float(field_values[k]), k


def modular_profile(f: GridFunction, mp: MorreyParams, ladder: RadiusLadder) -> ModularProfile:
    """Per-radius sup over grid centres of the modular."""
    spec = f.spec
    mp.check_dim(spec.dim)
    g = pointwise_power(f, mp.p)
    radii = ladder.radii
    points = map_ordered(lambda r: _profile_point(g, mp.lam, float(r)), radii)
    sups = np.array([s for s, _ in points])
    total = spec.cell_volume * float(np.sum(g.values))
    logger.debug("profile over %d radii, total p-mass %.6g", len(radii), total)
    return ModularProfile(mp, radii, sups, tuple(k for _, k in points), total, spec.diameter)


def morrey_norm(f: GridFunction, mp: MorreyParams, ladder: RadiusLadder) -> float:
    """Sup of the modular over the ladder and the tail, to the power 1/p."""
    if not ladder.reaches(f.spec):
        raise ParameterError(
            f"ladder top {ladder.top:.6g} does not reach the grid diameter {f.spec.diameter:.6g}")
    profile = modular_profile(f, mp, ladder)
    return norm_from_profile(profile)


def norm_from_profile(profile: ModularProfile) -> float:
    top = max(profile.peak, profile.tail(profile.diameter))
    return top ** (1.0 / profile.params.p)


# --- (V*) ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class VStarSequence:
    p: float
    n_values: np.ndarray
    a_values: np.ndarray
    ball_radius: float = 1.0

    def rows(self) -> List[Tuple[int, float]]:
        return [(int(n), float(a)) for n, a in zip(self.n_values, self.a_values)]

    @property
    def envelope(self) -> np.ndarray:
        return monotone_envelope(self.a_values)

    def to_dict(self) -> dict:
        return {"p": self.p, "n_values": self.n_values, "a_values": self.a_values,
                "ball_radius": self.ball_radius}


def monotone_envelope(values) -> np.ndarray:
    """Running minimum of the clipped values: nonincreasing whatever the summation path."""
    values = np.asarray(values, dtype=np.float64)
    return np.minimum.accumulate(np.maximum(values, 0.0)) if values.size else values


def outside_mask(spec: GridSpec, radius: float) -> np.ndarray:
    """Cells whose centre satisfies |y| >= radius."""
    return ~in_ball(spec.radial_half_norm2(), spec.unit, float(radius))


def vstar_sequence(f: GridFunction, p: float, n_max: int,
                   ball_radius: float = 1.0) -> VStarSequence:
    """Sup over centres of the p-mass in B(x, ball_radius) outside B(0, N), N = 1..n_max."""
    if int(n_max) != n_max or n_max < 1:
        raise ParameterError(f"N_max must be a positive integer, got {n_max!r}")
    ball_radius = _check_radius(ball_radius)
    g = pointwise_power(f, p)
    spec = f.spec
    n_values = np.arange(1, int(n_max) + 1)

    def term(n: int) -> float:
        tail = np.where(outside_mask(spec, n), g.values, 0.0)
        if not np.any(tail):
            return 0.0
        return spec.cell_volume * float(np.max(ball_sum(tail, spec, ball_radius)))

    values = np.array(map_ordered(term, n_values))
    return VStarSequence(float(p), n_values, values, ball_radius)
