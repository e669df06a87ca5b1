"""
Operators acting on grid functions: maximal, sharp maximal and fractional
maximal functions, the Riesz potential, the Hardy operators and their
hybrids with the Riesz kernel, and truncated singular integrals.

Maximal-type operators take the max over a shared RadiusLadder and average
over the cells actually present in the clipped ball. Integral-type operators
treat everything outside the grid as zero. Hardy regions compare exact integer
squared norms, so cells with |y| = |x| belong to neither region.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.signal import convolve

from . import config
from .ball_modular import (RadiusLadder, ball_count, ball_mask, ball_sum,
                           uses_fast_path)
from .errors import ParameterError
from .grid_core import GridFunction, GridSpec
from .parallel import map_ordered

logger = logging.getLogger(__name__)

_riesz_self_cell = config.RIESZ_SELF_CELL


def set_riesz_self_cell(mode: str) -> None:
    global _riesz_self_cell
    if mode not in ("ball", "drop"):
        raise ParameterError(f"riesz self-cell rule must be 'ball' or 'drop', got {mode!r}")
    _riesz_self_cell = mode


def _check_alpha(alpha: float, dim: int, allow_zero: bool) -> float:
    alpha = float(alpha)
    low_ok = alpha >= 0 if allow_zero else alpha > 0
    if not (low_ok and alpha < dim):
        bound = "[0, n)" if allow_zero else "(0, n)"
        raise ParameterError(f"alpha must lie in {bound} with n = {dim}, got {alpha}")
    return alpha


def _check_beta(beta: float, dim: int) -> float:
    beta = float(beta)
    if not (0 < beta <= dim):
        raise ParameterError(f"beta must lie in (0, n] with n = {dim}, got {beta}")
    return beta


def _convolve(values: np.ndarray, kernel: np.ndarray, spec: GridSpec) -> np.ndarray:
    method = "fft" if uses_fast_path(spec) else "direct"
    return convolve(values, kernel, mode="same", method=method)


def _offset_half_norm2(spec: GridSpec) -> np.ndarray:
    """Squared half-cell lengths of all offsets -(N-1)..N-1 per axis."""
    n = spec.cells_per_axis
    axis = 2 * np.arange(-(n - 1), n, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * spec.dim), indexing="ij")
    return sum(m * m for m in mesh)


def _center_chunks(spec: GridSpec):
    """Row blocks of centre indices so a block times all cells stays under CHUNK_ELEMENTS."""
    rows = max(1, config.CHUNK_ELEMENTS // spec.size)
    return [np.arange(i, min(i + rows, spec.size)) for i in range(0, spec.size, rows)]


# --- maximal type ------------------------------------------------------------

def _maximal_core(f: GridFunction, ladder: RadiusLadder, alpha: float) -> GridFunction:
    spec = f.spec
    magnitude = np.abs(f.values)
    hn = spec.cell_volume

    def weighted(r: float) -> np.ndarray:
        sums = ball_sum(magnitude, spec, r)
        counts = ball_count(spec, r)
        if alpha == 0:
            return sums / counts
        return (counts * hn) ** (alpha / spec.dim - 1.0) * (sums * hn)

    fields = map_ordered(weighted, [float(r) for r in ladder.radii])
    out = fields[0]
    for values in fields[1:]:
        out = np.maximum(out, values)
    return f.with_values(out)


def maximal(f: GridFunction, ladder: RadiusLadder) -> GridFunction:
    """Max over the ladder of the counted-cell average of |f|."""
    return _maximal_core(f, ladder, 0.0)


def frac_maximal(f: GridFunction, alpha: float, ladder: RadiusLadder) -> GridFunction:
    """Max over the ladder of |B|^(alpha/n - 1) times the integral of |f| over B."""
    alpha = _check_alpha(alpha, f.spec.dim, allow_zero=True)
    return _maximal_core(f, ladder, alpha)


def _sharp_block(values: np.ndarray, coords: np.ndarray, offsets: np.ndarray,
                 centers: np.ndarray, n_cells: int) -> np.ndarray:
    """Mean oscillation over one radius for a block of centres."""
    dim = coords.shape[1]
    target = coords[centers][:, None, :] + offsets[None, :, :]
    valid = np.all((target >= 0) & (target < n_cells), axis=2)
    flat = np.zeros(valid.shape, dtype=np.int64)
    for axis in range(dim):
        flat = flat * n_cells + np.clip(target[:, :, axis], 0, n_cells - 1)
    gathered = np.where(valid, values[flat], 0.0)
    counts = np.sum(valid, axis=1)
    means = np.sum(gathered, axis=1) / counts
    deviation = np.where(valid, np.abs(gathered - means[:, None]), 0.0)
    return np.sum(deviation, axis=1) / counts


def sharp_maximal(f: GridFunction, ladder: RadiusLadder) -> GridFunction:
    """Max over the ladder of the counted-cell mean of |f - f_B| over B(x, t)."""
    spec = f.spec
    n_cells = spec.cells_per_axis
    values = f.flat
    coords = np.stack(np.unravel_index(np.arange(spec.size), spec.shape), axis=1)
    out = np.zeros(spec.size)
    for r in ladder.radii:
        mask = ball_mask(spec, float(r))
        reach = (mask.shape[0] - 1) // 2
        offsets = np.argwhere(mask > 0) - reach
        rows = max(1, config.CHUNK_ELEMENTS // len(offsets))
        blocks = [np.arange(i, min(i + rows, spec.size)) for i in range(0, spec.size, rows)]
        parts = map_ordered(lambda b: _sharp_block(values, coords, offsets, b, n_cells), blocks)
        out = np.maximum(out, np.concatenate(parts))
    return f.with_values(out)


# --- Riesz potential -----------------------------------------------------------

@lru_cache(maxsize=32)
def _riesz_kernel(spec: GridSpec, alpha: float, self_cell: str) -> np.ndarray:
    n = spec.dim
    d2 = _offset_half_norm2(spec)
    dist = np.sqrt(np.where(d2 > 0, d2, 1).astype(np.float64)) * spec.unit
    kernel = spec.cell_volume * dist ** (alpha - n)
    centre = (spec.cells_per_axis - 1,) * n
    if self_cell == "ball":
        vn = spec.unit_ball_volume
        rho = spec.spacing * vn ** (-1.0 / n)
        kernel[centre] = n * vn * rho ** alpha / alpha
    else:
        kernel[centre] = 0.0
    kernel.setflags(write=False)
    return kernel


def riesz(f: GridFunction, alpha: float, self_cell: Optional[str] = None) -> GridFunction:
    """Riesz potential: convolution with |x|^(alpha - n), self cell by equal-volume ball."""
    spec = f.spec
    alpha = _check_alpha(alpha, spec.dim, allow_zero=False)
    mode = _riesz_self_cell if self_cell is None else self_cell
    if mode not in ("ball", "drop"):
        raise ParameterError(f"riesz self-cell rule must be 'ball' or 'drop', got {mode!r}")
    return f.with_values(_convolve(f.values, _riesz_kernel(spec, alpha, mode), spec))


# --- Hardy operators -----------------------------------------------------------

def hardy_lower(f: GridFunction, alpha: float) -> GridFunction:
    """|x|^(alpha - n) times the integral of f over |y| < |x|."""
    spec = f.spec
    alpha = _check_alpha(alpha, spec.dim, allow_zero=True)
    norm2 = spec.radial_half_norm2().ravel()
    order = np.argsort(norm2, kind="stable")
    sorted_norm2 = norm2[order]
    prefix = np.concatenate(([0.0], np.cumsum(f.flat[order])))
    inner = prefix[np.searchsorted(sorted_norm2, norm2, side="left")]
    radius = np.sqrt(norm2.astype(np.float64)) * spec.unit
    return f.with_values(radius ** (alpha - spec.dim) * spec.cell_volume * inner)


def hardy_upper(f: GridFunction, alpha: float) -> GridFunction:
    """|x|^alpha times the integral of f(y) |y|^-n over |y| > |x|."""
    spec = f.spec
    alpha = _check_alpha(alpha, spec.dim, allow_zero=True)
    norm2 = spec.radial_half_norm2().ravel()
    radius = np.sqrt(norm2.astype(np.float64)) * spec.unit
    order = np.argsort(norm2, kind="stable")
    sorted_norm2 = norm2[order]
    weights = (f.flat * radius ** (-spec.dim))[order]
    suffix = np.concatenate((np.cumsum(weights[::-1])[::-1], [0.0]))
    outer = suffix[np.searchsorted(sorted_norm2, norm2, side="right")]
    return f.with_values(radius ** alpha * spec.cell_volume * outer)


# --- hybrids -------------------------------------------------------------------

def _hybrid(f: GridFunction, beta: float, lower: bool) -> GridFunction:
    spec = f.spec
    n = spec.dim
    beta = _check_beta(beta, n)
    coords = spec.half_index_coords()
    norm2 = np.sum(coords * coords, axis=1)
    radius = np.sqrt(norm2.astype(np.float64)) * spec.unit
    values = f.flat if lower else f.flat * radius ** (-beta)

    def block(rows: np.ndarray) -> np.ndarray:
        diff = coords[rows][:, None, :] - coords[None, :, :]
        d2 = np.sum(diff * diff, axis=2)
        if lower:
            region = norm2[None, :] < norm2[rows][:, None]
        else:
            region = norm2[None, :] > norm2[rows][:, None]
        # the self cell is never in a strict region, so d2 > 0 wherever region holds
        dist = np.sqrt(np.where(d2 > 0, d2, 1).astype(np.float64)) * spec.unit
        kernel = np.where(region, dist ** (beta - n), 0.0)
        return kernel @ values

    sums = np.concatenate(map_ordered(block, _center_chunks(spec)))
    out = spec.cell_volume * sums
    if lower:
        out = radius ** (-beta) * out
    return f.with_values(out)


def hybrid_K(f: GridFunction, beta: float) -> GridFunction:
    """|x|^-beta times the integral over |y| < |x| of f(y) |x - y|^(beta - n)."""
    return _hybrid(f, beta, lower=True)


def hybrid_calK(f: GridFunction, beta: float) -> GridFunction:
    """Integral over |y| > |x| of f(y) |y|^-beta |x - y|^(beta - n)."""
    return _hybrid(f, beta, lower=False)


# --- singular integrals ------------------------------------------------------------

KernelRule = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class KernelSpec:
    """Kernel K(x, y) with |K(x, y)| <= size_constant |x - y|^-n."""

    kernel_id: str
    dim: int
    size_constant: float
    rule: KernelRule
    translation_invariant: bool = True
    description: str = ""

    def evaluate(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.rule(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))


def _hilbert(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 1.0 / (x[..., 0] - y[..., 0])


def _riesz_transform_x1(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    d = x - y
    dist = np.sqrt(np.sum(d * d, axis=-1))
    return d[..., 0] / dist ** 3


KERNELS: Dict[str, KernelSpec] = {}


def register_kernel(kernel: KernelSpec) -> KernelSpec:
    if kernel.dim not in config.SUPPORTED_DIMS:
        raise ParameterError(f"kernel {kernel.kernel_id!r} has unsupported dim {kernel.dim}")
    if not (math.isfinite(kernel.size_constant) and kernel.size_constant > 0):
        raise ParameterError(f"kernel {kernel.kernel_id!r} needs a finite positive size constant")
    KERNELS[kernel.kernel_id] = kernel
    return kernel


def get_kernel(kernel_id: str) -> KernelSpec:
    try:
        return KERNELS[kernel_id]
    except KeyError:
        raise ParameterError(f"unknown kernel {kernel_id!r}; known: {sorted(KERNELS)}")


register_kernel(KernelSpec("hilbert1d", 1, 1.0, _hilbert, description="K(x,y) = 1/(x-y)"))
register_kernel(KernelSpec("riesz2d_x1", 2, 1.0, _riesz_transform_x1,
                           description="K(x,y) = (x1-y1)/|x-y|^3"))


def check_size_condition(kernel: KernelSpec, spec: GridSpec, samples: int = 1000,
                         seed: int = 0) -> float:
    """Largest sampled |K(x, y)| |x - y|^n over distinct cell centres."""
    if kernel.dim != spec.dim:
        raise ParameterError(f"kernel {kernel.kernel_id!r} is {kernel.dim}-D, grid is {spec.dim}-D")
    rng = np.random.default_rng(seed)
    centers = spec.cell_centers()
    i = rng.integers(0, spec.size, size=samples)
    j = rng.integers(0, spec.size, size=samples)
    keep = i != j
    x, y = centers[i[keep]], centers[j[keep]]
    dist = np.sqrt(np.sum((x - y) ** 2, axis=1))
    return float(np.max(np.abs(kernel.evaluate(x, y)) * dist ** spec.dim))


def _check_epsilon(epsilon: float, spec: GridSpec) -> float:
    epsilon = float(epsilon)
    if not (math.isfinite(epsilon) and epsilon >= spec.spacing):
        raise ParameterError(f"truncation epsilon must be at least h = {spec.spacing}, got {epsilon}")
    return epsilon


def _beyond(d2, unit: float, epsilon: float):
    return d2 * (unit * unit) > epsilon * epsilon


def truncated_singular(f: GridFunction, kernel: Union[KernelSpec, str],
                       epsilon: float) -> GridFunction:
    """h^n times the sum of K(x, y) f(y) over cells with |x - y| > epsilon."""
    spec = f.spec
    kernel = get_kernel(kernel) if isinstance(kernel, str) else kernel
    if kernel.dim != spec.dim:
        raise ParameterError(f"kernel {kernel.kernel_id!r} is {kernel.dim}-D, grid is {spec.dim}-D")
    epsilon = _check_epsilon(epsilon, spec)

    if kernel.translation_invariant:
        n_cells = spec.cells_per_axis
        axis = 2 * np.arange(-(n_cells - 1), n_cells, dtype=np.int64)
        mesh = np.meshgrid(*([axis] * spec.dim), indexing="ij")
        disp_half = np.stack(mesh, axis=-1)
        d2 = np.sum(disp_half * disp_half, axis=-1)
        far = _beyond(d2, spec.unit, epsilon)
        disp = np.where(far[..., None], disp_half, 1).astype(np.float64) * spec.unit
        table = np.where(far, kernel.evaluate(disp, np.zeros_like(disp)), 0.0)
        return f.with_values(spec.cell_volume * _convolve(f.values, table, spec))

    coords = spec.half_index_coords()
    centers = coords.astype(np.float64) * spec.unit
    values = f.flat

    def block(rows: np.ndarray) -> np.ndarray:
        diff = coords[rows][:, None, :] - coords[None, :, :]
        far = _beyond(np.sum(diff * diff, axis=2), spec.unit, epsilon)
        x = np.broadcast_to(centers[rows][:, None, :], diff.shape)
        y = np.broadcast_to(centers[None, :, :], diff.shape)
        safe_y = np.where(far[..., None], y, x + spec.spacing)
        table = np.where(far, kernel.evaluate(x, safe_y), 0.0)
        return table @ values

    sums = np.concatenate(map_ordered(block, _center_chunks(spec)))
    return f.with_values(spec.cell_volume * sums)


# --- operator selection --------------------------------------------------------

OPERATOR_LABELS = {
    "maximal": "M",
    "sharp_maximal": "M#",
    "frac_maximal": "M^a",
    "riesz": "I^a",
    "hardy_lower": "H^a",
    "hardy_upper": "calH^a",
    "hybrid_k": "K_b",
    "hybrid_calk": "calK_b",
    "truncated_singular": "S",
}
MAXIMAL_KINDS = ("maximal", "sharp_maximal", "frac_maximal")
ALPHA_KINDS = ("frac_maximal", "riesz", "hardy_lower", "hardy_upper")
BETA_KINDS = ("hybrid_k", "hybrid_calk")


@dataclass(frozen=True)
class OperatorSpec:
    kind: str
    alpha: Optional[float] = None
    beta: Optional[float] = None
    kernel_id: Optional[str] = None
    epsilon: Optional[float] = None

    def __post_init__(self):
        if self.kind not in OPERATOR_LABELS:
            raise ParameterError(f"unknown operator kind {self.kind!r}; known: {sorted(OPERATOR_LABELS)}")
        if self.kind in ALPHA_KINDS and self.alpha is None:
            raise ParameterError(f"operator {self.kind!r} needs alpha")
        if self.kind in BETA_KINDS and self.beta is None:
            raise ParameterError(f"operator {self.kind!r} needs beta")
        if self.kind == "truncated_singular" and (self.kernel_id is None or self.epsilon is None):
            raise ParameterError("operator 'truncated_singular' needs kernel_id and epsilon")

    @property
    def label(self) -> str:
        return OPERATOR_LABELS[self.kind]

    @property
    def is_linear(self) -> bool:
        return self.kind not in MAXIMAL_KINDS

    def validate(self, spec: GridSpec) -> "OperatorSpec":
        if self.kind in ("frac_maximal", "hardy_lower", "hardy_upper"):
            _check_alpha(self.alpha, spec.dim, allow_zero=True)
        elif self.kind == "riesz":
            _check_alpha(self.alpha, spec.dim, allow_zero=False)
        elif self.kind in BETA_KINDS:
            _check_beta(self.beta, spec.dim)
        elif self.kind == "truncated_singular":
            kernel = get_kernel(self.kernel_id)
            if kernel.dim != spec.dim:
                raise ParameterError(f"kernel {kernel.kernel_id!r} is {kernel.dim}-D, grid is {spec.dim}-D")
            _check_epsilon(self.epsilon, spec)
        return self

    def to_json(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "OperatorSpec":
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as e:
                raise ParameterError(f"operator spec is not valid JSON: {e}")
        if not isinstance(data, dict) or "kind" not in data:
            raise ParameterError("operator spec must be a JSON object with a 'kind'")
        unknown = set(data) - {"kind", "alpha", "beta", "kernel_id", "epsilon"}
        if unknown:
            raise ParameterError(f"unknown operator spec keys: {sorted(unknown)}")
        fields = dict(data)
        for key in ("alpha", "beta", "epsilon"):
            value = fields.get(key)
            if value is None:
                continue
            if isinstance(value, bool):
                raise ParameterError(f"operator spec {key} must be a number, got {value!r}")
            try:
                fields[key] = float(value)
            except (TypeError, ValueError):
                raise ParameterError(f"operator spec {key} must be a number, got {value!r}")
        if not isinstance(fields["kind"], str):
            raise ParameterError(f"operator kind must be a string, got {fields['kind']!r}")
        if fields.get("kernel_id") is not None and not isinstance(fields["kernel_id"], str):
            raise ParameterError(f"kernel_id must be a string, got {fields['kernel_id']!r}")
        return cls(**fields)


def apply_operator(f: GridFunction, op: OperatorSpec,
                   ladder: Optional[RadiusLadder] = None) -> GridFunction:
    """Evaluate op on f; maximal kinds default to the covering ladder of the grid."""
    op.validate(f.spec)
    if op.kind in MAXIMAL_KINDS and ladder is None:
        ladder = RadiusLadder.covering(f.spec)
    logger.debug("applying %s to %s", op.label, f.spec)
    if op.kind == "maximal":
        return maximal(f, ladder)
    if op.kind == "sharp_maximal":
        return sharp_maximal(f, ladder)
    if op.kind == "frac_maximal":
        return frac_maximal(f, op.alpha, ladder)
    if op.kind == "riesz":
        return riesz(f, op.alpha)
    if op.kind == "hardy_lower":
        return hardy_lower(f, op.alpha)
    if op.kind == "hardy_upper":
        return hardy_upper(f, op.alpha)
    if op.kind == "hybrid_k":
        return hybrid_K(f, op.beta)
    if op.kind == "hybrid_calk":
        return hybrid_calK(f, op.beta)
    return truncated_singular(f, op.kernel_id, op.epsilon)
