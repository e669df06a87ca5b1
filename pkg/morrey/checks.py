"""
Report builders for the pointwise inequalities, modular estimates, scaling
law and preservation-of-vanishing statements.

Every report is a plain dataclass with a `to_dict()` carrying "kind",
"statement", "pass" and "tolerances" so the command line can write it as
JSON. Verdicts on vanishing properties are heuristics over finite data and
come with an explicit "inconclusive" band.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import config
from .ball_modular import (ModularProfile, MorreyParams, RadiusLadder, VStarSequence,
                           ball_sum, modular_profile, monotone_envelope,
                           morrey_norm, vstar_sequence)
from .errors import ExponentRelationError, GridError, ParameterError
from .grid_core import (FamilyDescriptor, GridFunction, GridSpec, dilate_family,
                        pointwise_power, synthesize)
from .operators import (OperatorSpec, apply_operator, frac_maximal, get_kernel,
                        hardy_lower, hardy_upper, maximal, riesz, sharp_maximal,
                        truncated_singular)

logger = logging.getLogger(__name__)

RELATION_TOLERANCE = 1e-9


# --- pointwise dominance -----------------------------------------------------------

@dataclass
class DominanceReport:
    lhs_label: str
    rhs_label: str
    constant: float
    slack: float
    tolerance: float
    max_ratio: float
    violation_count: int
    cells_evaluated: int
    argmax: int
    statement: str = ""

    @property
    def threshold(self) -> float:
        return self.slack * (1.0 + self.tolerance)

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.threshold and self.violation_count == 0

    def to_dict(self) -> dict:
        return {
            "kind": "dominance",
            "statement": self.statement,
            "lhs": self.lhs_label,
            "rhs": self.rhs_label,
            "constant": self.constant,
            "slack": self.slack,
            "max_ratio": self.max_ratio,
            "violation_count": self.violation_count,
            "cells_evaluated": self.cells_evaluated,
            "argmax": self.argmax,
            "pass": self.passed,
            "tolerances": {"relative": self.tolerance, "threshold": self.threshold},
        }


def dominance_ratios(lhs: np.ndarray, rhs: np.ndarray, constant: float) -> np.ndarray:
    """lhs / (constant rhs) per cell with 0/0 := 0 and positive/0 := inf."""
    denom = constant * np.asarray(rhs, dtype=np.float64)
    lhs = np.asarray(lhs, dtype=np.float64)
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, lhs / safe, np.where(lhs > 0, np.inf, 0.0))


def check_dominance(a: GridFunction, b: GridFunction, constant: float, slack: float = 1.0,
                    lhs_label: str = "A", rhs_label: str = "B",
                    tolerance: Optional[float] = None, region: Optional[np.ndarray] = None,
                    statement: str = "") -> DominanceReport:
    """Check a <= constant * slack * b cell by cell (optionally on a region only)."""
    if a.spec != b.spec:
        raise GridError(f"grid mismatch: {a.spec} vs {b.spec}")
    if not constant > 0:
        raise ParameterError(f"constant must be positive, got {constant}")
    if not slack >= 1:
        raise ParameterError(f"slack must be at least 1, got {slack}")
    tolerance = config.DOMINANCE_TOLERANCE if tolerance is None else float(tolerance)
    ratios = dominance_ratios(a.flat, b.flat, constant)
    cells = np.arange(a.spec.size)
    if region is not None:
        keep = np.asarray(region, dtype=bool).ravel()
        ratios, cells = ratios[keep], cells[keep]
    if ratios.size == 0:
        max_ratio, argmax = 0.0, -1
    else:
        k = int(np.argmax(ratios))
        max_ratio, argmax = float(ratios[k]), int(cells[k])
    violations = int(np.count_nonzero(ratios > slack * (1.0 + tolerance)))
    report = DominanceReport(lhs_label, rhs_label, float(constant), float(slack), tolerance,
                             max_ratio, violations, int(ratios.size), argmax, statement)
    logger.debug("%s <= %.6g %s: max ratio %.6g, %d violations", lhs_label, constant,
                 rhs_label, max_ratio, violations)
    return report


def interior_region(spec: GridSpec) -> np.ndarray:
    """Cells with every coordinate inside [-L/2, L/2]."""
    centers = spec.cell_centers()
    return np.all(np.abs(centers) <= spec.half_width / 2.0, axis=1).reshape(spec.shape)


DOMINANCE_NAMES = ("sharp-vs-max", "hardy-vs-max", "hardyalpha-chain", "calhardy-vs-riesz",
                   "hedberg")


def dominance_suite(name: str, f: GridFunction, ladder: RadiusLadder,
                    alpha: Optional[float] = None, delta: Optional[float] = None,
                    constant: Optional[float] = None,
                    tolerance: Optional[float] = None) -> List[DominanceReport]:
    """Named pointwise checks; `constant` replaces the claimed constant of single-link checks."""
    spec = f.spec
    n = spec.dim
    vn = spec.unit_ball_volume
    delta = config.DOMINANCE_DELTA if delta is None else float(delta)
    magnitude = f.with_values(np.abs(f.values))

    if name == "sharp-vs-max":
        return [check_dominance(sharp_maximal(f, ladder), maximal(f, ladder),
                                2.0 if constant is None else constant, 1.0, "M#f", "Mf",
                                tolerance, statement="M#f <= 2 Mf")]
    if name == "hardy-vs-max":
        slack = ladder.slack(n) * (1.0 + delta)
        return [check_dominance(hardy_lower(magnitude, 0.0), maximal(f, ladder),
                                2 ** n * vn if constant is None else constant, slack,
                                "H|f|", "Mf", tolerance, statement="H|f| <= 2^n v_n Mf")]
    if alpha is None:
        raise ParameterError(f"dominance check {name!r} needs alpha")
    if name == "calhardy-vs-riesz":
        hardy = hardy_upper(f, alpha)
        return [check_dominance(hardy.with_values(np.abs(hardy.values)), riesz(magnitude, alpha),
                                2 ** (n - alpha) if constant is None else constant,
                                1.0, "|calH^a f|", "I^a|f|", tolerance,
                                statement="|calH^a f| <= 2^(n-a) I^a|f|")]
    if name == "hardyalpha-chain":
        region = interior_region(spec)
        hardy = hardy_lower(f, alpha)
        hardy = hardy.with_values(np.abs(hardy.values))
        frac = frac_maximal(f, alpha, ladder)
        potential = riesz(magnitude, alpha)
        # clipped balls only raise M^a f, so the first link holds up to the edge
        first = check_dominance(hardy, frac, vn * 2 ** (n - alpha),
                                ladder.ratio ** (n - alpha) * (1.0 + delta), "|H^a f|", "M^a f",
                                tolerance, statement="|H^a f| <= v_n 2^(n-a) M^a f")
        middle = check_dominance(frac, potential, vn ** (alpha / n - 1.0), 1.0 + delta,
                                 "M^a f", "I^a|f|", tolerance, region,
                                 "M^a f <= v_n^(a/n-1) I^a|f|")
        # holds term by term on the whole grid
        end = check_dominance(hardy, potential, 2 ** (n - alpha), 1.0,
                              "|H^a f|", "I^a|f|", tolerance,
                              statement="|H^a f| <= 2^(n-a) I^a|f|")
        return [first, middle, end]
    raise ParameterError(f"unknown dominance check {name!r}; known: {list(DOMINANCE_NAMES)}")


# --- scaling law -------------------------------------------------------------------

@dataclass
class ScalingReport:
    t: float
    params: MorreyParams
    norm: float
    dilated_norm: float
    measured_ratio: float
    predicted_ratio: float
    deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.deviation <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "kind": "scaling",
            "statement": "||f(t.)|| = t^((lambda-n)/p) ||f||",
            "t": self.t,
            "params": self.params.to_dict(),
            "norm": self.norm,
            "dilated_norm": self.dilated_norm,
            "measured_ratio": self.measured_ratio,
            "predicted_ratio": self.predicted_ratio,
            "deviation": self.deviation,
            "pass": self.passed,
            "tolerances": {"deviation": self.tolerance},
        }


def check_scaling(family: FamilyDescriptor, t: float, mp: MorreyParams, ladder: RadiusLadder,
                  spec: GridSpec, tolerance: float = 0.02) -> ScalingReport:
    """Measured norm ratio of f(t.) to f against t^((lambda - n)/p)."""
    if not t > 0:
        raise ParameterError(f"dilation must be positive, got {t}")
    mp.check_dim(spec.dim)
    base = morrey_norm(synthesize(spec, family), mp, ladder)
    if t == 1:
        dilated = base
    else:
        dilated = morrey_norm(synthesize(spec, dilate_family(family, t)), mp, ladder)
    measured = dilated / base if base > 0 else 1.0
    predicted = t ** ((mp.lam - spec.dim) / mp.p)
    deviation = abs(measured / predicted - 1.0)
    return ScalingReport(float(t), mp, base, dilated, measured, predicted, deviation, tolerance)


# --- exponent relations ---------------------------------------------------------------

def _close(a: float, b: float) -> bool:
    return abs(a - b) <= RELATION_TOLERANCE * max(1.0, abs(a), abs(b))


def spanne_exponents(mp: MorreyParams, alpha: float, dim: int) -> MorreyParams:
    """(p, lambda) -> (p, lambda, q, mu) with 1/q = 1/p - a/n and lambda/p = mu/q."""
    p, lam = mp.p, mp.lam
    if not 0 < alpha < dim:
        raise ExponentRelationError("0 < alpha < n", f"alpha = {alpha}, n = {dim}")
    if not 1 < p < dim / alpha:
        raise ExponentRelationError("1 < p < n/alpha", f"p = {p}, n/alpha = {dim / alpha}")
    if not 0 <= lam < dim - alpha * p:
        raise ExponentRelationError("0 <= lambda < n - alpha p",
                                    f"lambda = {lam}, n - alpha p = {dim - alpha * p}")
    q = 1.0 / (1.0 / p - alpha / dim)
    mu = lam * q / p
    if mp.q is not None:
        if not _close(1.0 / mp.q, 1.0 / p - alpha / dim):
            raise ExponentRelationError("1/q = 1/p - alpha/n", f"q = {mp.q}, expected {q}")
        if not _close(lam / p, mp.mu / mp.q):
            raise ExponentRelationError("lambda/p = mu/q", f"mu = {mp.mu}, expected {mu}")
        q, mu = mp.q, mp.mu
    return MorreyParams(p, lam, q, mu)


def adams_exponents(mp: MorreyParams, alpha: float, dim: int) -> MorreyParams:
    """(p, lambda) -> (p, lambda, q, lambda) with 1/q = 1/p - a/(n - lambda)."""
    p, lam = mp.p, mp.lam
    if not 0 < alpha < dim:
        raise ExponentRelationError("0 < alpha < n", f"alpha = {alpha}, n = {dim}")
    if not 0 <= lam < dim:
        raise ExponentRelationError("0 <= lambda < n", f"lambda = {lam}")
    if not 1 < p < (dim - lam) / alpha:
        raise ExponentRelationError("1 < p < (n - lambda)/alpha",
                                    f"p = {p}, (n - lambda)/alpha = {(dim - lam) / alpha}")
    q = 1.0 / (1.0 / p - alpha / (dim - lam))
    if mp.q is not None:
        if not _close(mp.mu, lam):
            raise ExponentRelationError("mu = lambda", f"mu = {mp.mu}, lambda = {lam}")
        if not _close(1.0 / mp.q, 1.0 / p - alpha / (dim - lam)):
            raise ExponentRelationError("1/q = 1/p - alpha/(n - lambda)", f"q = {mp.q}, expected {q}")
        q = mp.q
    return MorreyParams(p, lam, q, lam)


def regime_exponents(regime: str, mp: MorreyParams, alpha: float, dim: int) -> MorreyParams:
    if regime == "spanne":
        return spanne_exponents(mp, alpha, dim)
    if regime == "adams":
        return adams_exponents(mp, alpha, dim)
    raise ParameterError(f"regime must be 'spanne' or 'adams', got {regime!r}")


# --- Hedberg-type constant ------------------------------------------------------------

@dataclass
class FittedConstantReport:
    label: str
    constant: Optional[float]
    valid_cells: int
    excluded_cells: int
    argmax: int
    details: Dict[str, float] = field(default_factory=dict)
    statement: str = ""

    def to_dict(self) -> dict:
        return {
            "kind": "fitted-constant",
            "statement": self.statement,
            "label": self.label,
            "constant": self.constant,
            "valid_cells": self.valid_cells,
            "excluded_cells": self.excluded_cells,
            "argmax": self.argmax,
            "details": dict(self.details),
            "pass": self.constant is None or math.isfinite(self.constant),
            "tolerances": {},
        }


def hedberg_report(f: GridFunction, alpha: float, mp: MorreyParams,
                   ladder: Optional[RadiusLadder] = None, label: str = "") -> FittedConstantReport:
    """c = max |I^a f| / ((Mf)^(p/q) ||f||^(1 - p/q)) over cells with Mf > 0 (Adams q)."""
    spec = f.spec
    full = adams_exponents(mp, alpha, spec.dim)
    ladder = ladder or RadiusLadder.covering(spec)
    norm = morrey_norm(f, MorreyParams(full.p, full.lam), ladder)
    mf = maximal(f, ladder).flat
    potential = np.abs(riesz(f, alpha).flat)
    theta = full.p / full.q
    valid = mf > 0
    statement = "|I^a f| <= c (Mf)^(p/q) ||f||^(1-p/q)"
    if not np.any(valid):
        return FittedConstantReport(label, None, 0, spec.size, -1,
                                    {"q": full.q, "norm": norm}, statement)
    denom = mf[valid] ** theta * norm ** (1.0 - theta)
    ratios = potential[valid] / denom
    k = int(np.argmax(ratios))
    cells = np.flatnonzero(valid)
    return FittedConstantReport(label, float(ratios[k]), int(valid.sum()),
                                int(spec.size - valid.sum()), int(cells[k]),
                                {"q": full.q, "norm": norm}, statement)


def constant_spread(reports: Iterable[FittedConstantReport]) -> dict:
    """max / min of the fitted constants (reports without a constant are skipped)."""
    values = [r.constant for r in reports if r.constant is not None and r.constant > 0]
    if not values:
        return {"min": None, "max": None, "spread": None}
    low, high = min(values), max(values)
    return {"min": low, "max": high, "spread": high / low}


# --- exponent sweeps -------------------------------------------------------------------

@dataclass
class RatioReport:
    regime: str
    alpha: float
    params: MorreyParams
    t_values: List[float]
    ratios: List[float]
    spread: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.spread <= self.tolerance

    def to_dict(self) -> dict:
        return {
            "kind": "exponent-ratio",
            "statement": "||I^a f_t||_(q,mu) / ||f_t||_(p,lambda) independent of t",
            "regime": self.regime,
            "alpha": self.alpha,
            "params": self.params.to_dict(),
            "t_values": self.t_values,
            "ratios": self.ratios,
            "spread": self.spread,
            "pass": self.passed,
            "tolerances": {"spread": self.tolerance},
        }


def exponent_ratio_report(family: FamilyDescriptor, t_list: Sequence[float], alpha: float,
                          regime: str, mp: MorreyParams, spec: GridSpec,
                          ladder: Optional[RadiusLadder] = None,
                          tolerance: float = 1.10) -> RatioReport:
    """R(t) = ||I^a f_t||_(q,mu) / ||f_t||_(p,lambda) over a dilation sweep."""
    full = regime_exponents(regime, mp, alpha, spec.dim)
    t_list = [float(t) for t in t_list]
    if not t_list or any(t <= 0 for t in t_list):
        raise ParameterError("dilations must be positive")
    ladder = ladder or RadiusLadder.covering(spec)
    ratios = []
    for t in t_list:
        f_t = synthesize(spec, dilate_family(family, t))
        denom = morrey_norm(f_t, MorreyParams(full.p, full.lam), ladder)
        numer = morrey_norm(riesz(f_t, alpha), full.output, ladder)
        ratios.append(numer / denom if denom > 0 else 0.0)
    positive = [r for r in ratios if r > 0]
    spread = max(positive) / min(positive) if positive else 1.0
    return RatioReport(regime, float(alpha), full, t_list, ratios, spread, tolerance)


# --- modular estimates ---------------------------------------------------------------

@dataclass
class BoundReport:
    lemma: str
    params: MorreyParams
    eval_radii: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    max_ratio: float
    argmax: Tuple[int, int]
    valid_count: int
    excluded_count: int
    tail_included: bool

    @property
    def fitted_constant(self) -> float:
        return self.max_ratio

    def rows(self, spec: GridSpec):
        """(r, centre coordinates..., lhs, rhs) for every evaluated pair."""
        centers = spec.cell_centers()
        for i, r in enumerate(self.eval_radii):
            for j in range(spec.size):
                yield [float(r)] + [float(c) for c in centers[j]] + [
                    float(self.lhs[i, j]), float(self.rhs[i, j])]

    def to_dict(self) -> dict:
        return {
            "kind": "modular-bound",
            "statement": ("M_(p,l)(Tf;x,r) <~ r^(n-l) (int_r^inf t^((l-n)/p-1) M_(p,l)(f;x,t)^(1/p) dt)^p"
                          if self.lemma == "A" else
                          "M_(q,mu)(I^a f;x,r) <~ r^(n-mu) (int_r^inf t^(l/p-n/q-1) M_(p,l)(f;x,t)^(1/p) dt)^q"),
            "lemma": self.lemma,
            "params": self.params.to_dict(),
            "eval_radii": self.eval_radii,
            "max_ratio": self.max_ratio,
            "fitted_constant": self.fitted_constant,
            "argmax": {"radius_index": self.argmax[0], "cell": self.argmax[1]},
            "valid_count": self.valid_count,
            "excluded_count": self.excluded_count,
            "tail_included": self.tail_included,
            "pass": math.isfinite(self.max_ratio),
            "tolerances": {},
        }


def modular_bound_report(f: GridFunction, tf: GridFunction, mp: MorreyParams,
                         ladder: RadiusLadder, lemma: str = "A",
                         eval_radii: Optional[Sequence[float]] = None) -> BoundReport:
    """Ratio of the modular of Tf to the t-integral bound, per (r, x).

    Lemma "A" uses (p, lambda) on both sides; lemma "B" needs the output pair
    (q, mu) in mp and compares the (q, mu) modular of Tf.
    """
    spec = f.spec
    if f.spec != tf.spec:
        raise GridError(f"grid mismatch: {f.spec} vs {tf.spec}")
    n = spec.dim
    p, lam = mp.p, mp.lam
    if not p > 1:
        raise ParameterError(f"modular estimates need p > 1, got {p}")
    if lam >= n:
        raise ParameterError(f"lambda = {lam} >= n makes the t-integral diverge")
    if lemma == "A":
        out_p, out_lam, power = p, lam, p
        exponent = (lam - n) / p - 1.0
    elif lemma == "B":
        if mp.q is None:
            raise ParameterError("lemma B needs the output pair (q, mu)")
        out_p, out_lam, power = mp.q, mp.mu, mp.q
        exponent = lam / p - n / mp.q - 1.0
    else:
        raise ParameterError(f"lemma must be 'A' or 'B', got {lemma!r}")

    radii = ladder.radii
    diameter = spec.diameter
    reaches = ladder.top >= diameter
    stop = int(np.searchsorted(radii, diameter, side="left")) if reaches else len(radii) - 1
    nodes = radii[:stop + 1]

    if eval_radii is None:
        eval_idx = np.flatnonzero(radii <= diameter)
    else:
        eval_idx = []
        for r in eval_radii:
            hits = np.flatnonzero(np.isclose(radii, r, rtol=1e-12, atol=0.0))
            if hits.size == 0:
                raise ParameterError(f"evaluation radius {r} is not a ladder radius")
            eval_idx.append(int(hits[0]))
        eval_idx = np.array(sorted(set(eval_idx)), dtype=np.int64)
    eval_idx = eval_idx[eval_idx <= stop]

    g = pointwise_power(f, p)
    hn = spec.cell_volume
    # modular of f at every node, rows = radii
    mod_f = np.stack([hn * ball_sum(g.values, spec, float(t)).ravel() * t ** (-lam) for t in nodes])
    integrand = nodes[:, None] ** (exponent + 1.0) * np.maximum(mod_f, 0.0) ** (1.0 / p)
    logs = np.log(nodes)
    # cumulative trapezoid in log t, accumulated from the top node down
    pieces = 0.5 * (integrand[1:] + integrand[:-1]) * np.diff(logs)[:, None]
    upper = np.zeros_like(integrand)
    upper[:-1] = np.cumsum(pieces[::-1], axis=0)[::-1]
    if reaches:
        mass = hn * float(np.sum(g.values))
        top = nodes[-1]
        if lemma == "A":
            upper += mass ** (1.0 / p) * (p / n) * top ** (-n / p)
        else:
            upper += mass ** (1.0 / p) * (mp.q / n) * top ** (-n / mp.q)

    tg = pointwise_power(tf, out_p)
    lhs_rows, rhs_rows = [], []
    for k in eval_idx:
        r = float(radii[k])
        lhs_rows.append(hn * ball_sum(tg.values, spec, r).ravel() * r ** (-out_lam))
        rhs_rows.append(r ** (n - out_lam) * upper[k] ** power)
    lhs = np.array(lhs_rows).reshape(len(eval_idx), spec.size)
    rhs = np.array(rhs_rows).reshape(len(eval_idx), spec.size)

    valid = rhs > 0
    ratios = np.where(valid, np.maximum(lhs, 0.0) / np.where(valid, rhs, 1.0), 0.0)
    if np.any(valid):
        flat = int(np.argmax(np.where(valid, ratios, -np.inf)))
        i, j = divmod(flat, spec.size)
        max_ratio, argmax = float(ratios[i, j]), (int(eval_idx[i]), j)
    else:
        max_ratio, argmax = 0.0, (-1, -1)
    return BoundReport(lemma, mp, radii[eval_idx], lhs, rhs, max_ratio, argmax,
                       int(valid.sum()), int((~valid).sum()), reaches)


def bound_stability(coarse: BoundReport, fine: BoundReport, limit: float = 2.0) -> dict:
    """Factor between the fitted constants at two resolutions."""
    a, b = coarse.max_ratio, fine.max_ratio
    if a > 0 and b > 0:
        factor = max(a, b) / min(a, b)
    else:
        factor = 1.0 if a == b else math.inf
    return {"coarse_max_ratio": a, "fine_max_ratio": b, "factor": factor,
            "pass": bool(factor <= limit), "tolerances": {"factor": limit}}


# --- vanishing diagnostics ---------------------------------------------------------------

VERDICTS = ("vanishing", "non-vanishing", "inconclusive")


@dataclass
class PropertyDiagnosis:
    name: str
    terminal_ratio: float
    slope: float
    extrapolated_ratio: float
    verdict: str
    endpoint: float

    def to_dict(self) -> dict:
        return {"terminal_ratio": self.terminal_ratio, "slope": self.slope,
                "extrapolated_ratio": self.extrapolated_ratio, "verdict": self.verdict,
                "endpoint": self.endpoint}


@dataclass
class VanishingDiagnosis:
    v0: PropertyDiagnosis
    vinf: PropertyDiagnosis
    vstar: PropertyDiagnosis
    thresholds: Dict[str, float]
    profile: Optional[ModularProfile] = None
    sequence: Optional[VStarSequence] = None

    @property
    def properties(self) -> Dict[str, PropertyDiagnosis]:
        return {"V0": self.v0, "Vinf": self.vinf, "Vstar": self.vstar}

    def verdicts(self) -> Dict[str, str]:
        return {k: d.verdict for k, d in self.properties.items()}

    def to_dict(self) -> dict:
        out = {
            "kind": "vanishing",
            "statement": "V0: r->0, Vinf: r->inf, Vstar: N->inf",
            "properties": {k: d.to_dict() for k, d in self.properties.items()},
            "subspace": classify_subspace(self),
            "thresholds": dict(self.thresholds),
            "pass": True,
            "tolerances": dict(self.thresholds),
        }
        if self.profile is not None:
            out["profile"] = self.profile.to_dict()
        if self.sequence is not None:
            out["vstar_sequence"] = self.sequence.to_dict()
        return out


def resolve_thresholds(thresholds: Optional[Dict[str, float]] = None) -> Dict[str, float]:
    merged = dict(config.VANISHING_THRESHOLDS)
    if thresholds:
        unknown = set(thresholds) - set(merged)
        if unknown:
            raise ParameterError(f"unknown threshold keys: {sorted(unknown)}")
        merged.update({k: v for k, v in thresholds.items() if v is not None})
    return merged


def _log_slope(x0: float, v0: float, x1: float, v1: float) -> float:
    """Slope of log v against log x from (x0, v0) to (x1, v1)."""
    if x1 == x0:
        return 0.0
    if v0 <= 0 and v1 <= 0:
        return 0.0
    direction = 1.0 if x1 > x0 else -1.0
    if v0 <= 0:
        return math.inf * direction
    if v1 <= 0:
        return -math.inf * direction
    return (math.log(v1) - math.log(v0)) / (math.log(x1) - math.log(x0))


def _verdict(extrapolated: float, slope: float, slope_ok: bool, terminal: float,
             th: Dict[str, float]) -> str:
    if extrapolated < th["vanishing_ratio"] and slope_ok:
        return "vanishing"
    # a positive limit shows as a plateau at the end of the statistic
    if terminal > th["nonvanishing_ratio"] and abs(slope) < th["min_slope"]:
        return "non-vanishing"
    return "inconclusive"


def _trivial(name: str, endpoint: float) -> PropertyDiagnosis:
    return PropertyDiagnosis(name, 0.0, 0.0, 0.0, "vanishing", endpoint)


def diagnose_small_radii(radii: np.ndarray, sups: np.ndarray, spacing: float,
                         th: Dict[str, float]) -> PropertyDiagnosis:
    peak = float(np.max(sups)) if len(sups) else 0.0
    start_radius = th["v0_min_cells"] * spacing
    candidates = np.flatnonzero(radii >= start_radius)
    if peak <= 0:
        return _trivial("V0", float(radii[0]))
    if candidates.size == 0:
        return PropertyDiagnosis("V0", math.nan, math.nan, math.nan, "inconclusive", math.nan)
    i0 = int(candidates[0])
    j = min(len(radii) - 1, i0 + int(th["slope_span"]))
    terminal = float(sups[i0]) / peak
    slope = _log_slope(radii[i0], sups[i0], radii[j], sups[j])
    extrapolated = terminal * th["extrapolation_factor"] ** (-slope) if slope > 0 else terminal
    verdict = _verdict(extrapolated, slope, slope >= th["min_slope"], terminal, th)
    return PropertyDiagnosis("V0", terminal, slope, extrapolated, verdict, float(radii[i0]))


def diagnose_large_radii(radii: np.ndarray, sups: np.ndarray, half_width: float,
                         th: Dict[str, float]) -> PropertyDiagnosis:
    peak = float(np.max(sups)) if len(sups) else 0.0
    candidates = np.flatnonzero(radii <= half_width)
    if peak <= 0:
        return _trivial("Vinf", float(radii[-1]))
    if candidates.size == 0:
        return PropertyDiagnosis("Vinf", math.nan, math.nan, math.nan, "inconclusive", math.nan)
    i1 = int(candidates[-1])
    j = max(0, i1 - int(th["slope_span"]))
    terminal = float(sups[i1]) / peak
    slope = _log_slope(radii[j], sups[j], radii[i1], sups[i1])
    extrapolated = terminal * th["extrapolation_factor"] ** slope if slope < 0 else terminal
    verdict = _verdict(extrapolated, slope, slope <= -th["min_slope"], terminal, th)
    return PropertyDiagnosis("Vinf", terminal, slope, extrapolated, verdict, float(radii[i1]))


def diagnose_sequence(n_values: np.ndarray, a_values: np.ndarray,
                      th: Dict[str, float]) -> PropertyDiagnosis:
    a_values = monotone_envelope(a_values)
    peak = float(np.max(a_values)) if len(a_values) else 0.0
    n_max = int(n_values[-1])
    if peak <= 0:
        return _trivial("Vstar", float(n_max))
    mid = int(math.ceil(n_max / 2.0))
    a_mid = float(a_values[mid - 1])
    a_end = float(a_values[-1])
    terminal = a_end / peak
    if a_end == 0:
        return PropertyDiagnosis("Vstar", 0.0, -math.inf, 0.0, "vanishing", float(n_max))
    slope = _log_slope(mid, a_mid, n_max, a_end) if n_max > mid else 0.0
    extrapolated = terminal * th["extrapolation_factor"] ** slope if slope < 0 else terminal
    verdict = _verdict(extrapolated, slope, slope <= -th["min_slope"], terminal, th)
    return PropertyDiagnosis("Vstar", terminal, slope, extrapolated, verdict, float(n_max))


def diagnose(profile: ModularProfile, sequence: VStarSequence, spacing: float,
             half_width: float, thresholds: Optional[Dict[str, float]] = None) -> VanishingDiagnosis:
    """Verdicts from stored statistics only."""
    th = resolve_thresholds(thresholds)
    return VanishingDiagnosis(
        diagnose_small_radii(profile.radii, profile.sup_values, spacing, th),
        diagnose_large_radii(profile.radii, profile.sup_values, half_width, th),
        diagnose_sequence(sequence.n_values, sequence.a_values, th),
        th, profile, sequence)


def rediagnose(report: dict, spacing: float, half_width: float) -> Dict[str, str]:
    """Recompute verdicts from a serialized vanishing report."""
    th = resolve_thresholds(report["thresholds"])
    prof = report["profile"]
    seq = report["vstar_sequence"]
    radii = np.array([float(r) for r in prof["radii"]])
    sups = np.array([float(v) for v in prof["sup_values"]])
    a_values = np.array([float(v) for v in seq["a_values"]])
    n_values = np.array([int(v) for v in seq["n_values"]])
    return {
        "V0": diagnose_small_radii(radii, sups, spacing, th).verdict,
        "Vinf": diagnose_large_radii(radii, sups, half_width, th).verdict,
        "Vstar": diagnose_sequence(n_values, a_values, th).verdict,
    }


def classify_vanishing(f: GridFunction, mp: MorreyParams, ladder: RadiusLadder, n_max: int,
                       thresholds: Optional[Dict[str, float]] = None,
                       ball_radius: float = 1.0) -> VanishingDiagnosis:
    """Profile and (V*) sequence of f, then heuristic verdicts for V0, Vinf, Vstar."""
    spec = f.spec
    profile = modular_profile(f, mp, ladder)
    sequence = vstar_sequence(f, mp.p, n_max, ball_radius)
    return diagnose(profile, sequence, spec.spacing, spec.half_width, thresholds)


def classify_subspace(diagnosis: VanishingDiagnosis) -> str:
    """Smallest class of the chain V(*)_0,inf < V0 n Vinf < V0 < L^(p,lambda) holding."""
    v = {k: verdict == "vanishing" for k, verdict in diagnosis.verdicts().items()}
    if v["V0"] and v["Vinf"] and v["Vstar"]:
        return "V(*)_0,inf"
    if v["V0"] and v["Vinf"]:
        return "V0 n Vinf"
    if v["V0"]:
        return "V0"
    return "L^(p,lambda)"


# --- preservation ------------------------------------------------------------------------

ALPHA_OPERATORS = ("riesz", "frac_maximal", "hardy_lower", "hardy_upper")
SINGULAR_TYPE = ("maximal", "sharp_maximal", "truncated_singular")


def is_fractional(op: OperatorSpec) -> bool:
    """T^a: Riesz, fractional maximal, or a Hardy operator of positive order."""
    return op.kind in ALPHA_OPERATORS and bool(op.alpha) and op.alpha > 0


def claimed_properties(op: OperatorSpec, regime: Optional[str] = None) -> Dict[str, str]:
    """'claimed', 'unclaimed' or 'exploratory' for each property."""
    if is_fractional(op):
        if regime == "adams":
            return {"V0": "claimed", "Vinf": "claimed", "Vstar": "claimed"}
        v0 = "claimed" if op.kind in ("riesz", "frac_maximal") else "unclaimed"
        return {"V0": v0, "Vinf": "claimed", "Vstar": "unclaimed"}
    if op.kind in ("hybrid_k", "hybrid_calk"):
        return {"V0": "unclaimed", "Vinf": "claimed", "Vstar": "unclaimed"}
    if op.kind == "truncated_singular":
        return {"V0": "claimed", "Vinf": "claimed", "Vstar": "exploratory"}
    # M, M#, H, calH
    return {"V0": "claimed", "Vinf": "claimed", "Vstar": "claimed"}


def _unconditional(op: OperatorSpec) -> Tuple[str, ...]:
    """Properties the output has for every Morrey input."""
    if op.kind == "hardy_upper" and not op.alpha:
        return ("Vstar",)
    return ()


@dataclass
class PreservationReport:
    operator: OperatorSpec
    regime: Optional[str]
    in_params: MorreyParams
    out_params: MorreyParams
    before: VanishingDiagnosis
    after: VanishingDiagnosis
    claims: Dict[str, str]
    outcomes: Dict[str, str]
    extras: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        """Inconclusive outcomes are listed but only a violation fails the report."""
        return all(v != "violated" for v in self.outcomes.values())

    @property
    def inconclusive(self) -> List[str]:
        return [k for k, v in self.outcomes.items() if v == "inconclusive"]

    def to_dict(self) -> dict:
        return {
            "kind": "preservation",
            "statement": f"{self.operator.label} preserves the claimed vanishing properties",
            "operator": self.operator.to_json(),
            "regime": self.regime,
            "in_params": self.in_params.to_dict(),
            "out_params": self.out_params.to_dict(),
            "before": self.before.to_dict(),
            "after": self.after.to_dict(),
            "claims": dict(self.claims),
            "outcomes": dict(self.outcomes),
            "inconclusive": self.inconclusive,
            "extras": dict(self.extras),
            "pass": self.passed,
            "tolerances": dict(self.after.thresholds),
        }


def _outcome(claim: str, unconditional: bool, before: str, after: str,
             resolved: bool = True) -> str:
    if claim == "unclaimed":
        return "not-applicable"
    if claim == "exploratory":
        return "exploratory"
    if not unconditional and before != "vanishing":
        return "not-applicable"
    if after == "vanishing":
        return "preserved"
    if after == "non-vanishing":
        return "violated" if resolved else "inconclusive"
    return "inconclusive"


def support_radius(f: GridFunction) -> float:
    """Radius of the smallest origin-centred ball holding every nonzero cell, 0 for f = 0."""
    spec = f.spec
    support = np.flatnonzero(f.flat != 0)
    if support.size == 0:
        return 0.0
    radius = spec.radial_norms().ravel()
    return float(np.max(radius[support])) + spec.spacing * math.sqrt(spec.dim) / 2.0


def domain_ratio(f: GridFunction) -> float:
    """Half-width of the grid over the support radius of f (inf for f = 0)."""
    reach = support_radius(f)
    return f.spec.half_width / reach if reach > 0 else math.inf


def preservation_report(f: GridFunction, op: OperatorSpec, in_params: MorreyParams,
                        out_params: Optional[MorreyParams], ladder: RadiusLadder, n_max: int,
                        regime: Optional[str] = None,
                        thresholds: Optional[Dict[str, float]] = None) -> PreservationReport:
    """Diagnose f and op(f) and compare against the claimed preservation results."""
    spec = f.spec
    op.validate(spec)
    in_params = MorreyParams(in_params.p, in_params.lam).check_dim(spec.dim)
    if is_fractional(op):
        if regime is None:
            raise ParameterError(f"operator {op.label} needs a regime ('spanne' or 'adams')")
        full = regime_exponents(regime, MorreyParams(
            in_params.p, in_params.lam,
            out_params.p if out_params else None,
            out_params.lam if out_params else None), op.alpha, spec.dim)
        out_params = full.output
    else:
        if out_params is not None and not (_close(out_params.p, in_params.p)
                                           and _close(out_params.lam, in_params.lam)):
            raise ExponentRelationError("(q, mu) = (p, lambda)",
                                        f"{op.label} acts within one Morrey space")
        out_params = in_params
        regime = None

    tf = apply_operator(f, op, ladder)
    before = classify_vanishing(f, in_params, ladder, n_max, thresholds)
    after = classify_vanishing(tf, out_params, ladder, n_max, thresholds)
    claims = claimed_properties(op, regime)
    unconditional = _unconditional(op)
    before_v, after_v = before.verdicts(), after.verdicts()
    # a far-field plateau counts against a claim only on a grid much wider than the support
    ratio = domain_ratio(f)
    resolved = {"V0": True, "Vstar": True, "Vinf": ratio >= before.thresholds["vinf_domain_ratio"]}
    outcomes = {k: _outcome(claims[k], k in unconditional, before_v[k], after_v[k], resolved[k])
                for k in claims}

    extras: Dict[str, object] = {"support_radius": support_radius(f),
                                 "domain_ratio": ratio if math.isfinite(ratio) else None}
    if op.kind == "riesz" and regime == "adams":
        mf = maximal(f, ladder)
        extras["hedberg_modular_constant"] = _hedberg_modular_constant(
            f, tf, mf, in_params, out_params.p, ladder)
        extras["adams_vstar"] = adams_vstar_report(f, op.alpha, in_params, n_max,
                                                   ladder).to_dict()
    if op.kind == "truncated_singular":
        extras["singular_decay"] = singular_decay_report(f, op.kernel_id, op.epsilon).to_dict()
    logger.info("%s: %s", op.label, outcomes)
    return PreservationReport(op, regime, in_params, out_params, before, after, claims,
                              outcomes, extras)


def _hedberg_modular_constant(f: GridFunction, tf: GridFunction, mf: GridFunction,
                              mp: MorreyParams, q: float, ladder: RadiusLadder) -> Optional[float]:
    """max over (x, r) of M_(q,l)(I^a f) / (||f||^(q-p) M_(p,l)(Mf))."""
    spec = f.spec
    norm = morrey_norm(f, mp, ladder) if ladder.reaches(spec) else None
    if not norm:
        return None
    numer_g = pointwise_power(tf, q).values
    denom_g = pointwise_power(mf, mp.p).values
    scale = norm ** (q - mp.p)
    best = None
    for r in ladder.radii[ladder.radii <= spec.diameter]:
        numer = ball_sum(numer_g, spec, float(r))
        denom = scale * ball_sum(denom_g, spec, float(r))
        valid = denom > 0
        if np.any(valid):
            value = float(np.max(numer[valid] / denom[valid]))
            best = value if best is None else max(best, value)
    return best


@dataclass
class SequenceConstantReport:
    label: str
    n_values: np.ndarray
    ratios: np.ndarray
    constant: Optional[float]
    statement: str

    def to_dict(self) -> dict:
        return {
            "kind": "sequence-constant",
            "statement": self.statement,
            "label": self.label,
            "n_values": self.n_values,
            "ratios": self.ratios,
            "constant": self.constant,
            "pass": self.constant is None or math.isfinite(self.constant),
            "tolerances": {},
        }


def adams_vstar_report(f: GridFunction, alpha: float, mp: MorreyParams, n_max: int,
                       ladder: Optional[RadiusLadder] = None) -> SequenceConstantReport:
    """Fitted c in A_(N,q)(I^a f) <= c ||f||^(q-p) A_(N,p)(Mf), per N."""
    spec = f.spec
    full = adams_exponents(mp, alpha, spec.dim)
    ladder = ladder or RadiusLadder.covering(spec)
    norm = morrey_norm(f, MorreyParams(full.p, full.lam), ladder)
    lhs = vstar_sequence(riesz(f, alpha), full.q, n_max).a_values
    rhs = norm ** (full.q - full.p) * vstar_sequence(maximal(f, ladder), full.p, n_max).a_values
    ratios = np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)
    valid = rhs > 0
    constant = float(np.max(ratios[valid])) if np.any(valid) else None
    return SequenceConstantReport("I^a", np.arange(1, int(n_max) + 1), ratios, constant,
                                  "A_(N,q)(I^a f) <= c ||f||^(q-p) A_(N,p)(Mf)")


def singular_decay_report(f: GridFunction, kernel, epsilon: float) -> FittedConstantReport:
    """Fitted c in |Sf(y)| <= c |y|^-n for |y| >= 2 (support radius)."""
    spec = f.spec
    kernel = get_kernel(kernel) if isinstance(kernel, str) else kernel
    sf = truncated_singular(f, kernel, epsilon)
    radius = spec.radial_norms().ravel()
    reach = support_radius(f)
    statement = "|Sf(y)| <= c |y|^-n outside twice the support"
    if reach == 0:
        return FittedConstantReport(kernel.kernel_id, None, 0, spec.size, -1, {}, statement)
    region = radius >= 2.0 * reach
    l1 = spec.cell_volume * float(np.sum(np.abs(f.flat)))
    bound = kernel.size_constant * 2 ** spec.dim * l1
    details = {"support_radius": reach, "l1_norm": l1, "expected_bound": bound}
    if not np.any(region):
        return FittedConstantReport(kernel.kernel_id, None, 0, spec.size, -1, details, statement)
    weighted = np.abs(sf.flat[region]) * radius[region] ** spec.dim
    k = int(np.argmax(weighted))
    cells = np.flatnonzero(region)
    return FittedConstantReport(kernel.kernel_id, float(weighted[k]), int(region.sum()),
                                int(spec.size - region.sum()), int(cells[k]), details, statement)
