"""Row-sampling sketch that preserves the spectral norm.

Rows are drawn i.i.d. with replacement, row i with probability
p_i = ||a_i||^2 / ||A||_F^2, and rescaled by 1/sqrt(r p_i). With
r >= (4d/eps^2) ln(2d/delta) the sketch satisfies
||ÃᵀÃ - AᵀA|| <= eps ||A||^2 with probability at least 1 - delta, hence
(1 - eps)||A||^2 <= ||Ã||^2 <= (1 + eps)||A||^2.

Usage:
    plan = make_plan(m)
    params = SketchParams.from_tolerance(m.n_cols, 0.5, 0.1, seed=7)
    sketch = draw_sketch(m, plan, params)
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sketchnorm.errors import ParameterError, require_open_unit
from sketchnorm.linalg import oracle
from sketchnorm.linalg.matrix import Matrix, frobenius_sq, row_norms_squared, take_rows

logger = logging.getLogger(__name__)

SAMPLERS = ("cumulative", "alias")


def _build_alias(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table: O(n) build, two uniforms per draw."""
    n = len(p)
    scaled = p * n
    accept = np.zeros(n)
    alias = np.arange(n)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        accept[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    # Leftovers are roundoff; zero rows must still never be returned.
    fallback = int(np.argmax(p))
    for i in small + large:
        if p[i] > 0.0:
            accept[i] = 1.0
        else:
            alias[i] = fallback
    return accept, alias


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    """Row-norm sampling distribution over the rows of one matrix."""

    probabilities: np.ndarray
    source_frobenius_sq: float
    sampler: str = "cumulative"
    _cumulative: np.ndarray | None = field(default=None, repr=False)
    _alias: tuple[np.ndarray, np.ndarray] | None = field(default=None, repr=False)

    @property
    def n_rows(self) -> int:
        return len(self.probabilities)

    def draw_indices(self, r: int, rng: np.random.Generator) -> np.ndarray:
        """Draw r row indices i.i.d. from the plan (with replacement)."""
        if self.sampler == "alias":
            accept, alias = self._alias
            u = rng.random((2, r))
            slots = np.minimum((u[0] * self.n_rows).astype(np.int64), self.n_rows - 1)
            return np.where(u[1] < accept[slots], slots, alias[slots])
        u = rng.random(r) * self._cumulative[-1]
        idx = np.searchsorted(self._cumulative, u, side="right")
        return np.minimum(idx, self.n_rows - 1)


def make_plan(m: Matrix, sampler: str = "cumulative") -> SamplingPlan:
    """Compute p_i = ||a_i||^2 / ||A||_F^2 in O(nnz + n).

    Raises:
        ParameterError: zero matrix, or unknown sampler.
    """
    if sampler not in SAMPLERS:
        raise ParameterError(f"unknown sampler {sampler!r}; expected one of {SAMPLERS}")
    norms = row_norms_squared(m)
    fro = frobenius_sq(m)
    if fro <= 0.0:
        raise ParameterError("zero matrix has no sampling distribution")
    p = norms / fro
    p.flags.writeable = False

    cumulative = None
    alias = None
    if sampler == "alias":
        alias = _build_alias(p)
    else:
        cumulative = np.cumsum(p)
    return SamplingPlan(
        probabilities=p,
        source_frobenius_sq=fro,
        sampler=sampler,
        _cumulative=cumulative,
        _alias=alias,
    )


def required_samples(d: int, epsilon: float, delta: float) -> int:
    """Rows needed for the concentration bound: ceil((4d/eps^2) ln(2d/delta))."""
    epsilon = require_open_unit("epsilon", epsilon)
    delta = require_open_unit("delta", delta)
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    return max(1, math.ceil(4.0 * d / epsilon**2 * math.log(2.0 * d / delta)))


@dataclass(frozen=True)
class SketchParams:
    r: int
    seed: int
    epsilon: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if int(self.r) < 1:
            raise ParameterError(f"sample count r must be >= 1, got {self.r}")
        if self.epsilon is not None:
            require_open_unit("epsilon", self.epsilon)
        if self.delta is not None:
            require_open_unit("delta", self.delta)

    @classmethod
    def from_tolerance(
        cls, d: int, epsilon: float, delta: float, seed: int, oversample: float = 1.0
    ) -> "SketchParams":
        """Size the sketch from (epsilon, delta); oversample > 1 inflates r."""
        if oversample <= 0:
            raise ParameterError(f"oversample must be positive, got {oversample}")
        r = required_samples(d, epsilon, delta)
        if oversample != 1.0:
            r = max(1, math.ceil(r * oversample))
        return cls(r=r, seed=seed, epsilon=epsilon, delta=delta)


def draw_sketch(m: Matrix, plan: SamplingPlan, params: SketchParams) -> Matrix:
    """Return Ã (r x d) with rows a_i / sqrt(r p_i), i drawn from plan.

    Deterministic for a fixed params.seed. E[ÃᵀÃ] = AᵀA.
    """
    if plan.n_rows != m.n_rows:
        raise ParameterError(
            f"plan covers {plan.n_rows} rows but matrix has {m.n_rows}"
        )
    rng = np.random.default_rng(params.seed)
    idx = plan.draw_indices(params.r, rng)
    weights = 1.0 / np.sqrt(params.r * plan.probabilities[idx])
    logger.debug(
        "Sketch: %d draws over %d rows (%d distinct)",
        params.r, m.n_rows, len(np.unique(idx)),
    )
    return take_rows(m, idx, weights)


def sketch_error(m: Matrix, sketch: Matrix, source_gram: np.ndarray | None = None) -> float:
    """||ÃᵀÃ - AᵀA|| via the Jacobi oracle (desk scale only).

    Pass source_gram = oracle.gram_matrix(m) to reuse it across many sketches.
    """
    if sketch.n_cols != m.n_cols:
        raise ParameterError("sketch and source must have the same column count")
    if source_gram is None:
        source_gram = oracle.gram_matrix(m)
    return oracle.symmetric_norm(oracle.gram_matrix(sketch) - source_gram)
