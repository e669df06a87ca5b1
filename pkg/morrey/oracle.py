"""
Brute-force reference evaluation.

Every target cell is handled on its own with a plain sum over all source
cells: no prefix sums, no convolution. The quadrature rules are the same as
in ball_modular and operators (cell-centre ball membership, strict Hardy
regions, equal-volume self cell), so a disagreement points at a summation
bug. With refinement > 1 the sources come from a finer grid, which measures
modelling error against analytic values instead.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from . import config
from .ball_modular import (MorreyParams, RadiusLadder, ball_mass_field, in_ball,
                           modular_field)
from .errors import OracleSizeError, ParameterError
from .grid_core import FamilyDescriptor, GridFunction, GridSpec, synthesize
from .operators import OperatorSpec, apply_operator, get_kernel, riesz

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BallMass:
    r: float


@dataclass(frozen=True)
class Modular:
    p: float
    lam: float
    r: float


Request = Union[OperatorSpec, BallMass, Modular]


@dataclass(frozen=True, eq=False)
class OracleRequest:
    """What to evaluate and how.

    radius_scan replaces the ladder for maximal-type kinds. family, when
    given, is re-synthesized on the refined grid; otherwise the coarse
    values are repeated piecewise constant.
    """

    op: Request
    refinement: int = 1
    radius_scan: Optional[Sequence[float]] = None
    ladder: Optional[RadiusLadder] = None
    family: Optional[FamilyDescriptor] = None
    self_cell: str = config.RIESZ_SELF_CELL
    override_guard: bool = False

    def __post_init__(self):
        if int(self.refinement) != self.refinement or self.refinement < 1:
            raise ParameterError(f"refinement must be an integer >= 1, got {self.refinement!r}")
        if self.radius_scan is not None:
            scan = np.asarray(self.radius_scan, dtype=np.float64)
            if scan.size == 0 or np.any(scan <= 0) or np.any(np.diff(scan) <= 0):
                raise ParameterError("radius scan must be positive and strictly increasing")
        if self.self_cell not in ("ball", "drop"):
            raise ParameterError(f"self-cell rule must be 'ball' or 'drop', got {self.self_cell!r}")

    def radii(self, spec: GridSpec) -> np.ndarray:
        if self.radius_scan is not None:
            return np.asarray(self.radius_scan, dtype=np.float64)
        ladder = self.ladder or RadiusLadder.covering(spec)
        return ladder.radii


def _sources(f: GridFunction, req: OracleRequest):
    """Fine grid, its values and its integer coordinates."""
    factor = int(req.refinement)
    if factor == 1:
        return f.spec, f.flat
    fine = f.spec.refined(factor)
    if req.family is not None:
        return fine, synthesize(fine, req.family).flat
    values = f.values
    for axis in range(f.spec.dim):
        values = np.repeat(values, factor, axis=axis)
    return fine, values.ravel()


class _Evaluator:
    """Direct sums at one coarse target at a time."""

    def __init__(self, f: GridFunction, req: OracleRequest):
        self.spec = f.spec
        self.req = req
        self.factor = int(req.refinement)
        self.fine, self.values = _sources(f, req)
        self.src = self.fine.half_index_coords()
        self.src_norm2 = np.sum(self.src * self.src, axis=1)
        self.targets = self.spec.half_index_coords() * self.factor
        self.unit = self.fine.unit
        self.hn = self.fine.cell_volume
        self.dim = self.spec.dim
        if isinstance(req.op, OperatorSpec):
            req.op.validate(self.spec)
            if req.op.kind in ("maximal", "sharp_maximal", "frac_maximal"):
                self.radii = req.radii(self.spec)

    def value(self, index: int) -> float:
        x = self.targets[index]
        diff = self.src - x
        d2 = np.sum(diff * diff, axis=1)
        x_norm2 = int(np.sum(x * x))
        op = self.req.op
        v = self.values

        if isinstance(op, BallMass):
            return self.hn * float(np.sum(v[in_ball(d2, self.unit, op.r)]))
        if isinstance(op, Modular):
            inside = in_ball(d2, self.unit, op.r)
            return op.r ** (-op.lam) * self.hn * float(np.sum(np.abs(v[inside]) ** op.p))

        kind = op.kind
        if kind in ("maximal", "frac_maximal"):
            alpha = op.alpha or 0.0
            best = 0.0
            for r in self.radii:
                inside = in_ball(d2, self.unit, float(r))
                count = int(np.count_nonzero(inside))
                total = float(np.sum(np.abs(v[inside])))
                if alpha == 0:
                    value = total / count
                else:
                    value = (count * self.hn) ** (alpha / self.dim - 1.0) * (total * self.hn)
                best = max(best, value)
            return best
        if kind == "sharp_maximal":
            best = 0.0
            for r in self.radii:
                ball = v[in_ball(d2, self.unit, float(r))]
                mean = float(np.sum(ball)) / ball.size
                best = max(best, float(np.sum(np.abs(ball - mean))) / ball.size)
            return best

        dist = np.sqrt(np.where(d2 > 0, d2, 1).astype(np.float64)) * self.unit
        x_radius = math.sqrt(x_norm2) * self.unit
        src_radius = np.sqrt(self.src_norm2.astype(np.float64)) * self.unit

        if kind == "riesz":
            alpha = op.alpha
            far = d2 > 0
            total = self.hn * float(np.sum(v[far] * dist[far] ** (alpha - self.dim)))
            if self.req.self_cell == "ball" and not np.all(far):
                vn = self.fine.unit_ball_volume
                rho = self.fine.spacing * vn ** (-1.0 / self.dim)
                total += float(np.sum(v[~far])) * self.dim * vn * rho ** alpha / alpha
            return total
        if kind == "hardy_lower":
            region = self.src_norm2 < x_norm2
            return x_radius ** (op.alpha - self.dim) * self.hn * float(np.sum(v[region]))
        if kind == "hardy_upper":
            region = self.src_norm2 > x_norm2
            inner = float(np.sum(v[region] * src_radius[region] ** (-self.dim)))
            return x_radius ** op.alpha * self.hn * inner
        if kind == "hybrid_k":
            region = self.src_norm2 < x_norm2
            inner = float(np.sum(v[region] * dist[region] ** (op.beta - self.dim)))
            return x_radius ** (-op.beta) * self.hn * inner
        if kind == "hybrid_calk":
            region = self.src_norm2 > x_norm2
            weight = src_radius[region] ** (-op.beta) * dist[region] ** (op.beta - self.dim)
            return self.hn * float(np.sum(v[region] * weight))
        # truncated_singular
        kernel = get_kernel(op.kernel_id)
        far = d2 * (self.unit * self.unit) > op.epsilon * op.epsilon
        x_real = np.broadcast_to(x.astype(np.float64) * self.unit, (int(np.sum(far)), self.dim))
        y_real = self.src[far].astype(np.float64) * self.unit
        return self.hn * float(np.sum(kernel.evaluate(x_real, y_real) * v[far]))


def oracle_values(f: GridFunction, req: OracleRequest, targets: Sequence[int]) -> np.ndarray:
    """Direct evaluation at selected flat cell indices only."""
    evaluator = _Evaluator(f, req)
    return np.array([evaluator.value(int(i)) for i in targets], dtype=np.float64)


def oracle_eval(f: GridFunction, req: OracleRequest,
                size_guard: Optional[int] = None) -> GridFunction:
    """Direct evaluation at every coarse cell centre."""
    guard = config.ORACLE_SIZE_GUARD if size_guard is None else int(size_guard)
    if f.spec.size > guard and not req.override_guard:
        raise OracleSizeError(
            f"oracle refuses {f.spec.size} cells (guard {guard}); set override_guard to force")
    logger.debug("oracle over %d targets, refinement %d", f.spec.size, req.refinement)
    evaluator = _Evaluator(f, req)
    values = [evaluator.value(i) for i in range(f.spec.size)]
    return f.with_values(np.array(values, dtype=np.float64))


def fast_eval(f: GridFunction, req: OracleRequest) -> GridFunction:
    """The library's fast-path result for the same request."""
    op = req.op
    if isinstance(op, BallMass):
        return ball_mass_field(f, op.r)
    if isinstance(op, Modular):
        return modular_field(f, MorreyParams(op.p, op.lam), op.r)
    if op.kind in ("maximal", "sharp_maximal", "frac_maximal"):
        if req.radius_scan is not None:
            raise ParameterError("the fast path evaluates maximal kinds on a ladder, not a radius scan")
        return apply_operator(f, op, req.ladder or RadiusLadder.covering(f.spec))
    if op.kind == "riesz":
        return riesz(f, op.alpha, self_cell=req.self_cell)
    return apply_operator(f, op)


def relative_error(fast: GridFunction, reference: GridFunction) -> float:
    """max |fast - reference| / max |reference| (absolute when the reference is zero)."""
    if fast.spec != reference.spec:
        raise ParameterError("relative error needs two functions on the same grid")
    diff = float(np.max(np.abs(fast.values - reference.values)))
    scale = float(np.max(np.abs(reference.values)))
    return diff / scale if scale > 0 else diff
