"""Power iteration on the Gram operator XᵀX from an isotropic random start.

After n steps the estimate is lambda_n^2 = ||XᵀX x_n||. It never exceeds
||X||^2 and never decreases from one step to the next. Run for
iteration_count(d, eps, delta) steps it is at least (1 - eps)||X||^2 with
probability at least 1 - delta over the start vector.
"""
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from sketchnorm.errors import NumericalError, ParameterError, require_open_unit
from sketchnorm.linalg.matrix import Matrix, Vector, frobenius_sq, gram_apply

logger = logging.getLogger(__name__)

# Constant of the start-vector overlap bound, (2/pi + 2)^3 ~ 18.329.
OVERLAP_CONSTANT = (2.0 / math.pi + 2.0) ** 3
ADAPTIVE_WINDOW = 5


def isotropic_starts(d: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Return a (count, d) array of independent uniformly random unit vectors.

    Each row is d standard normals divided by their norm. A row of exact
    zeros (probability zero) is redrawn.
    """
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    z = rng.standard_normal((count, d))
    norms = np.linalg.norm(z, axis=1)
    while np.any(norms == 0.0):
        bad = norms == 0.0
        logger.warning("Redrawing %d all-zero Gaussian start vectors", int(bad.sum()))
        z[bad] = rng.standard_normal((int(bad.sum()), d))
        norms = np.linalg.norm(z, axis=1)
    return z / norms[:, None]


def isotropic_start(d: int, seed) -> Vector:
    """One random isotropic unit vector, deterministic given seed."""
    return isotropic_starts(d, 1, np.random.default_rng(seed))[0]


def iteration_count(d: int, epsilon: float, delta: float) -> int:
    """Power steps that guarantee lambda_n^2 >= (1 - eps)||X||^2 w.p. >= 1 - delta.

    Chosen so (c d / delta^3)(1 - eps/2)^(2(n+1)) <= kappa with
    kappa = (1 - eps/2)^-2 - 1; the lower bound of guaranteed_fraction is
    then at least (1 - eps/2)^2 >= 1 - eps:

        n = ceil((ln(c d) + 3 ln(1/delta) + ln(1/kappa)) / (2 ln(1/(1 - eps/2))))
    """
    epsilon = require_open_unit("epsilon", epsilon)
    delta = require_open_unit("delta", delta)
    if d < 1:
        raise ParameterError(f"d must be >= 1, got {d}")
    half = epsilon / 2.0
    kappa = (1.0 - half) ** -2 - 1.0
    numerator = math.log(OVERLAP_CONSTANT * d) + 3.0 * math.log(1.0 / delta) + math.log(1.0 / kappa)
    denominator = -2.0 * math.log1p(-half)
    return max(1, math.ceil(numerator / denominator))


def guaranteed_fraction(d: int, epsilon: float, delta: float, n: int) -> float:
    """Lower bound on lambda_n^2 / ||X||^2 holding w.p. >= 1 - delta.

    Evaluates (1 - e)/sqrt(1 + (c d/delta^3)(1 - e)^(2(n+1))) with e = eps/2,
    the power term taken in log space so large n cannot underflow.
    """
    epsilon = require_open_unit("epsilon", epsilon)
    delta = require_open_unit("delta", delta)
    half = epsilon / 2.0
    log_term = (
        math.log(OVERLAP_CONSTANT * d)
        - 3.0 * math.log(delta)
        + 2.0 * (n + 1) * math.log1p(-half)
    )
    # log(1 + e^x), stable for both signs of x
    log_denominator = 0.5 * (max(log_term, 0.0) + math.log1p(math.exp(-abs(log_term))))
    return (1.0 - half) * math.exp(-log_denominator)


@dataclass(frozen=True)
class PowerParams:
    epsilon: float
    delta: float
    seed: int
    max_iterations: int | None = None  # None -> iteration_count(d, eps, delta)
    adaptive_stop: bool = False
    adaptive_tol: float = 1e-10

    def __post_init__(self):
        require_open_unit("epsilon", self.epsilon)
        require_open_unit("delta", self.delta)
        if self.max_iterations is not None and self.max_iterations < 1:
            raise ParameterError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.adaptive_stop and not self.adaptive_tol > 0:
            raise ParameterError(f"adaptive_tol must be positive, got {self.adaptive_tol}")

    def iterations_for(self, d: int) -> int:
        if self.max_iterations is not None:
            return self.max_iterations
        return iteration_count(d, self.epsilon, self.delta)


@dataclass(frozen=True, eq=False)
class PowerState:
    iterate: Vector  # x_n, unit norm
    iteration: int
    estimate_sq: float  # lambda_n^2 = ||XᵀX x_n||
    annihilated: bool = False
    # XᵀX x_n, reused by the next step
    image: Vector | None = field(default=None, repr=False)


def initial_state(m: Matrix, x0: Vector) -> PowerState:
    """State at n = 0 for a given unit start vector."""
    image = gram_apply(m, x0)
    return PowerState(iterate=x0, iteration=0, estimate_sq=float(np.linalg.norm(image)), image=image)


def power_step(m: Matrix, s: PowerState) -> PowerState:
    """x_n = XᵀX x_{n-1} / ||XᵀX x_{n-1}||, then lambda_n^2 = ||XᵀX x_n||.

    Raises:
        NumericalError: XᵀX x_{n-1} is the zero vector.
    """
    y = s.image if s.image is not None else gram_apply(m, s.iterate)
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        raise NumericalError("iterate annihilated")
    x = y / y_norm
    image = gram_apply(m, x)
    return PowerState(
        iterate=x,
        iteration=s.iteration + 1,
        estimate_sq=float(np.linalg.norm(image)),
        image=image,
    )


def estimate_norm_sq(m: Matrix, params: PowerParams) -> tuple[float, PowerState]:
    """Estimate ||m||^2 by power iteration from isotropic_start(d, params.seed).

    A zero matrix returns 0.0 with state.annihilated set and no steps run.
    """
    x0 = isotropic_start(m.n_cols, params.seed)
    if frobenius_sq(m) == 0.0:
        state = PowerState(iterate=x0, iteration=0, estimate_sq=0.0, annihilated=True)
        return 0.0, state

    n_steps = params.iterations_for(m.n_cols)
    state = initial_state(m, x0)
    history = [state.estimate_sq]
    for _ in range(n_steps):
        state = power_step(m, state)
        history.append(state.estimate_sq)
        if params.adaptive_stop and len(history) > ADAPTIVE_WINDOW:
            previous = history[-1 - ADAPTIVE_WINDOW]
            change = (state.estimate_sq - previous) / state.estimate_sq
            if change < params.adaptive_tol:
                logger.info(
                    "Adaptive stop after %d of %d steps (relative change %.2e)",
                    state.iteration, n_steps, change,
                )
                break

    logger.debug("Power iteration: %d steps, estimate %.6e", state.iteration, state.estimate_sq)
    return state.estimate_sq, replace(state, image=None)
