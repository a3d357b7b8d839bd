"""Top-level spectral norm estimator.

Either iterates directly on A or first shrinks A to a row-sampled sketch and
iterates on that, whichever the cost model says is cheaper. With probability
at least 1 - delta the result satisfies

    (1 - eps)||A||^2 <= estimate_sq <= (1 + eps)||A||^2.

The sketch path spends (eps/2, delta/2) on the sketch and (eps/3, delta/2) on
the power stage: (1 - eps/3)(1 - eps/2) >= 1 - eps and 1 + eps/2 <= 1 + eps.
The direct path has no sketch error, so its power stage gets the whole
(eps, delta) and the result never exceeds ||A||^2.

A is first rescaled by the power of two that brings its largest entry into
[0.5, 1), and the result is scaled back. Both steps are exact.

Usage:
    from sketchnorm.estimate.estimator import EstimateRequest, estimate

    report = estimate(m, EstimateRequest(epsilon=0.1, delta=0.05, seed=7))
    report.estimate_sq, report.effective_rank
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from sketchnorm.errors import NumericalError, ParameterError, require_open_unit
from sketchnorm.estimate.power import PowerParams, estimate_norm_sq
from sketchnorm.estimate.sketch import SketchParams, draw_sketch, make_plan, required_samples
from sketchnorm.linalg import oracle
from sketchnorm.linalg.matrix import (
    Matrix,
    frobenius_sq,
    max_abs,
    nnz,
    scale_pow2,
    transpose_if_wide,
)

logger = logging.getLogger(__name__)

SKETCH_EPSILON_SHARE = 1.0 / 2.0
POWER_EPSILON_SHARE = 1.0 / 3.0
DELTA_SHARE = 1.0 / 2.0


class Method(str, Enum):
    AUTO = "auto"
    SKETCH = "sketch"
    DIRECT = "direct"
    EXACT = "exact"


@dataclass(frozen=True)
class EstimateRequest:
    epsilon: float = 0.1
    delta: float = 0.05
    method: Method = Method.AUTO
    seed: int = 0
    sampler: str = "cumulative"
    adaptive_stop: bool = False

    def __post_init__(self):
        require_open_unit("epsilon", self.epsilon)
        require_open_unit("delta", self.delta)
        try:
            object.__setattr__(self, "method", Method(self.method))
        except ValueError:
            raise ParameterError(f"unknown method {self.method!r}") from None
        if not 0 <= int(self.seed) < 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class CostModel:
    nnz: int
    direct_cost: float
    sketch_cost: float


@dataclass(frozen=True)
class EstimateReport:
    estimate_sq: float
    estimate: float  # ||A||, kept separately since it can be representable when its square is not
    effective_rank: float
    method_used: Method
    r_used: int | None
    iterations_used: int
    seed: int
    epsilon: float
    delta: float
    cost_model: CostModel | None = None
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["method_used"] = self.method_used.value
        return out


def _log_term(d: int, epsilon: float, delta: float) -> float:
    return math.log(d / (epsilon * delta))


def cost_model(nnz_count: int, n: int, d: int, epsilon: float, delta: float) -> CostModel:
    """Unit-constant versions of the two running-time terms.

    direct: (nnz/eps) ln(d/(eps delta))
    sketch: (d^2/eps^3) ln^2(d/(eps delta)) + n + r ln r, the last two for
    building the sampling plan and drawing r rows.
    """
    log_term = _log_term(d, epsilon, delta)
    direct = nnz_count / epsilon * log_term
    r = required_samples(d, epsilon * SKETCH_EPSILON_SHARE, delta * DELTA_SHARE)
    sketch = d * d / epsilon**3 * log_term**2 + n + r * math.log(max(r, 2))
    return CostModel(nnz=nnz_count, direct_cost=direct, sketch_cost=sketch)


def choose_method(nnz_count: int, n: int, d: int, epsilon: float, delta: float) -> Method:
    """DIRECT when its cost is no larger than the sketch path's, else SKETCH."""
    costs = cost_model(nnz_count, n, d, epsilon, delta)
    return Method.DIRECT if costs.direct_cost <= costs.sketch_cost else Method.SKETCH


def effective_rank(m: Matrix, norm_sq: float) -> float:
    """||A||_F^2 / ||A||^2, clamped to [1, min(n, d)].

    The true ratio always lies in that range; one computed from an estimate
    of ||A||^2 can fall slightly outside it.
    """
    if not norm_sq > 0:
        raise ParameterError(f"norm_sq must be positive, got {norm_sq}")
    return float(np.clip(frobenius_sq(m) / norm_sq, 1.0, min(m.shape)))


def _child_seeds(seed: int) -> tuple[int, int]:
    sketch_seed, power_seed = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
    return int(sketch_seed), int(power_seed)


def _unscale(value: float, exponent: int) -> tuple[float, float]:
    """Map the squared norm of 2**-exponent * A back to (||A||^2, ||A||)."""
    with np.errstate(over="ignore", under="ignore"):
        value_sq = float(np.ldexp(value, 2 * exponent))
        norm = float(np.ldexp(math.sqrt(value), exponent))
    if math.isinf(value_sq):
        raise NumericalError(f"||A||^2 overflows float64 (||A|| is about {norm:.6e})")
    return value_sq, norm


def estimate(m: Matrix, req: EstimateRequest) -> EstimateReport:
    """Estimate ||A||^2 to relative error eps with failure probability delta."""
    a = transpose_if_wide(m)
    n, d = a.shape
    costs = cost_model(nnz(a), n, d, req.epsilon, req.delta)
    base = dict(seed=int(req.seed), epsilon=req.epsilon, delta=req.delta, cost_model=costs)

    if costs.nnz == 0:
        logger.info("Zero matrix: estimate is 0")
        return EstimateReport(
            estimate_sq=0.0, estimate=0.0, effective_rank=0.0, method_used=req.method,
            r_used=None, iterations_used=0, degenerate=True, **base,
        )

    exponent = math.frexp(max_abs(a))[1]
    a = scale_pow2(a, -exponent)

    method = req.method
    notes = []
    if method is Method.AUTO:
        method = choose_method(costs.nnz, n, d, req.epsilon, req.delta)
        notes.append("sketch_cost includes plan build n and sampling r ln r")
        logger.info(
            "Auto method: %s (direct %.3e vs sketch %.3e)",
            method.value, costs.direct_cost, costs.sketch_cost,
        )

    if method is Method.EXACT:
        value = oracle.exact_norm_sq(a)
        value_sq, norm = _unscale(value, exponent)
        return EstimateReport(
            estimate_sq=value_sq, estimate=norm, effective_rank=effective_rank(a, value),
            method_used=method, r_used=None, iterations_used=0, notes=notes, **base,
        )

    sketch_seed, power_seed = _child_seeds(req.seed)
    if method is Method.SKETCH:
        sketch_params = SketchParams.from_tolerance(
            d, req.epsilon * SKETCH_EPSILON_SHARE, req.delta * DELTA_SHARE, seed=sketch_seed,
        )
        target = draw_sketch(a, make_plan(a, sampler=req.sampler), sketch_params)
        power_params = PowerParams(
            epsilon=req.epsilon * POWER_EPSILON_SHARE, delta=req.delta * DELTA_SHARE,
            seed=power_seed, adaptive_stop=req.adaptive_stop,
        )
        r_used = sketch_params.r
    else:
        target = a
        power_params = PowerParams(
            epsilon=req.epsilon, delta=req.delta, seed=power_seed,
            adaptive_stop=req.adaptive_stop,
        )
        r_used = None

    value, state = estimate_norm_sq(target, power_params)
    value_sq, norm = _unscale(value, exponent)
    logger.info(
        "Estimate %.6e via %s (%d steps of %d planned, r=%s)",
        value_sq, method.value, state.iteration, power_params.iterations_for(d), r_used,
    )
    return EstimateReport(
        estimate_sq=value_sq, estimate=norm, effective_rank=effective_rank(a, value),
        method_used=method, r_used=r_used, iterations_used=state.iteration,
        notes=notes, **base,
    )
