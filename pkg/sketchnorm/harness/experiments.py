"""Monte Carlo checks of every probabilistic guarantee the estimator relies on.

Each experiment counts how often a guaranteed event happens over seeded
trials and passes when the empirical rate clears the proven lower bound
minus `slack` binomial standard errors:

    sketch      ||ÃᵀÃ - AᵀA|| <= eps ||A||^2 for a row-sampled sketch, bound 1 - delta
    power       power stage alone, lambda_n^2 >= (1 - eps)||A||^2, bound 1 - delta
    overlap     isotropic start, alpha_1^2 >= delta'/d, bound 1 - (2/pi + 2) delta'^(1/3)
    end_to_end  full estimate in [(1 - eps), (1 + eps)] ||A||^2, bound 1 - delta
    audit       iteration_count really drives the power bound to >= 1 - eps

Every experiment is reproducible bit for bit from (parameters, seed). Trial
seeds are spawned from the experiment seed, so trials are independent of
each other and of the order they run in.

Usage:
    sketchnorm harness --experiment overlap --seed 1
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from sketchnorm.data import families
from sketchnorm.errors import ParameterError, require_open_unit
from sketchnorm.estimate.estimator import EstimateRequest, Method, estimate
from sketchnorm.estimate.power import (
    PowerParams,
    estimate_norm_sq,
    guaranteed_fraction,
    isotropic_starts,
    iteration_count,
)
from sketchnorm.estimate.sketch import SketchParams, draw_sketch, make_plan, sketch_error
from sketchnorm.linalg import oracle

logger = logging.getLogger(__name__)

SLACK_STD_ERRORS = 3.0
OVERLAP_FACTOR = 2.0 / math.pi + 2.0
OVERLAP_BATCH = 10_000

EXPERIMENTS = ("sketch", "power", "overlap", "end_to_end", "audit")
# Names the command line also accepts for the same experiments.
EXPERIMENT_ALIASES = {"lemma1": "sketch", "lemma3": "overlap", "theorem1": "end_to_end"}

# Defaults mirror the desk-scale acceptance runs.
DEFAULT_SETTINGS = {
    "sketch": {"family": "gaussian", "n": 100, "d": 10, "epsilon": 0.5, "delta": 0.2, "trials": 200},
    "power": {"family": "gaussian", "n": 200, "d": 30, "epsilon": 0.1, "delta": 0.05, "trials": 400},
    "end_to_end": {"family": "gaussian", "n": 200, "d": 30, "epsilon": 0.1, "delta": 0.05, "trials": 400},
    "overlap": {"dims": (5, 50, 500), "delta_primes": (1e-3, 1e-2), "trials": 100_000},
}


@dataclass(frozen=True)
class TrialStats:
    name: str
    trials: int
    successes: int
    bound: float
    slack: float = SLACK_STD_ERRORS
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if not 0 <= self.successes <= self.trials:
            raise ParameterError(f"successes {self.successes} outside [0, {self.trials}]")

    @property
    def empirical_rate(self) -> float:
        return self.successes / self.trials

    @property
    def threshold(self) -> float:
        """bound - slack * sqrt(bound (1 - bound) / trials)."""
        b = min(max(self.bound, 0.0), 1.0)
        return self.bound - self.slack * math.sqrt(b * (1.0 - b) / self.trials)

    @property
    def passed(self) -> bool:
        return self.empirical_rate >= self.threshold

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "successes": self.successes,
            "empirical_rate": self.empirical_rate,
            "bound": self.bound,
            "slack": self.slack,
            "threshold": self.threshold,
            "passed": self.passed,
            "params": self.params,
        }


def merge(a: TrialStats, b: TrialStats) -> TrialStats:
    """Pool two tallies of the same experiment."""
    if (a.name, a.bound, a.slack) != (b.name, b.bound, b.slack):
        raise ParameterError("can only merge tallies of the same experiment")
    return TrialStats(a.name, a.trials + b.trials, a.successes + b.successes, a.bound, a.slack, a.params)


def _trial_seeds(seed: int, trials: int) -> tuple[np.random.Generator, list[int]]:
    """One generator for the test matrix plus one 64-bit seed per trial."""
    matrix_seq, *trial_seqs = np.random.SeedSequence(seed).spawn(trials + 1)
    seeds = [int(s.generate_state(1, dtype=np.uint64)[0]) for s in trial_seqs]
    return np.random.default_rng(matrix_seq), seeds


def _require_trials(trials: int, minimum: int, name: str):
    if trials < minimum:
        raise ParameterError(f"{name} needs at least {minimum} trials, got {trials}")


def sketch_experiment(
    family: str,
    d: int,
    epsilon: float,
    delta: float,
    trials: int,
    seed: int,
    n: int | None = None,
    oversample: float = 1.0,
    slack: float = SLACK_STD_ERRORS,
) -> TrialStats:
    """Frequency of ||ÃᵀÃ - AᵀA|| <= eps ||A||^2 with r = required_samples * oversample."""
    require_open_unit("epsilon", epsilon)
    require_open_unit("delta", delta)
    _require_trials(trials, 100, "sketch")
    n = n or 10 * d
    rng, seeds = _trial_seeds(seed, trials)
    a = families.make(family, n, d, rng, epsilon=epsilon)
    gram = oracle.gram_matrix(a)
    norm_sq = oracle.exact_norm_sq(a)
    plan = make_plan(a)

    successes = 0
    r = None
    for trial_seed in seeds:
        params = SketchParams.from_tolerance(d, epsilon, delta, seed=trial_seed, oversample=oversample)
        r = params.r
        sketch = draw_sketch(a, plan, params)
        error = sketch_error(a, sketch, source_gram=gram)
        successes += int(error <= epsilon * norm_sq)

    stats = TrialStats(
        "sketch", trials, successes, bound=1.0 - delta, slack=slack,
        params={"family": family, "n": n, "d": d, "epsilon": epsilon, "delta": delta,
                "r": r, "oversample": oversample, "seed": seed},
    )
    logger.info("sketch %s %dx%d r=%d: rate %.4f vs bound %.4f", family, n, d, r, stats.empirical_rate, stats.bound)
    return stats


def power_experiment(
    family: str,
    n: int,
    d: int,
    epsilon: float,
    delta: float,
    trials: int,
    seed: int,
    slack: float = SLACK_STD_ERRORS,
) -> TrialStats:
    """Frequency of lambda_n^2 >= (1 - eps)||A||^2 for the power stage alone."""
    rng, seeds = _trial_seeds(seed, trials)
    a = families.make(family, n, d, rng, epsilon=epsilon)
    norm_sq = oracle.exact_norm_sq(a)
    successes = 0
    for trial_seed in seeds:
        value, _ = estimate_norm_sq(a, PowerParams(epsilon=epsilon, delta=delta, seed=trial_seed))
        successes += int(value >= (1.0 - epsilon) * norm_sq)

    stats = TrialStats(
        "power", trials, successes, bound=1.0 - delta, slack=slack,
        params={"family": family, "n": n, "d": d, "epsilon": epsilon, "delta": delta,
                "iterations": iteration_count(d, epsilon, delta), "seed": seed},
    )
    logger.info("power %s %dx%d: rate %.4f vs bound %.4f", family, n, d, stats.empirical_rate, stats.bound)
    return stats


def overlap_experiment(
    d: int,
    delta_prime: float,
    trials: int,
    seed: int,
    slack: float = SLACK_STD_ERRORS,
) -> TrialStats:
    """Frequency of alpha_1^2 = (x_0 . e_1)^2 >= delta'/d for isotropic x_0."""
    require_open_unit("delta_prime", delta_prime)
    _require_trials(trials, 10_000, "overlap")
    rng = np.random.default_rng(seed)
    successes = 0
    remaining = trials
    while remaining:
        batch = min(remaining, OVERLAP_BATCH)
        starts = isotropic_starts(d, batch, rng)
        successes += int(np.count_nonzero(starts[:, 0] ** 2 >= delta_prime / d))
        remaining -= batch

    stats = TrialStats(
        "overlap", trials, successes,
        bound=1.0 - OVERLAP_FACTOR * delta_prime ** (1.0 / 3.0), slack=slack,
        params={"d": d, "delta_prime": delta_prime, "seed": seed},
    )
    logger.info("overlap d=%d delta'=%g: rate %.4f vs bound %.4f", d, delta_prime, stats.empirical_rate, stats.bound)
    return stats


def end_to_end_experiment(
    family: str,
    n: int,
    d: int,
    epsilon: float,
    delta: float,
    trials: int,
    seed: int,
    method: Method | str = Method.AUTO,
    slack: float = SLACK_STD_ERRORS,
) -> TrialStats:
    """Frequency of the full estimate landing in [(1 - eps), (1 + eps)] ||A||^2."""
    rng, seeds = _trial_seeds(seed, trials)
    a = families.make(family, n, d, rng, epsilon=epsilon)
    norm_sq = oracle.exact_norm_sq(a)
    low, high = (1.0 - epsilon) * norm_sq, (1.0 + epsilon) * norm_sq

    successes = 0
    methods_used = set()
    for trial_seed in seeds:
        report = estimate(a, EstimateRequest(epsilon=epsilon, delta=delta, method=method, seed=trial_seed))
        methods_used.add(report.method_used.value)
        successes += int(low <= report.estimate_sq <= high)

    stats = TrialStats(
        "end_to_end", trials, successes, bound=1.0 - delta, slack=slack,
        params={"family": family, "n": n, "d": d, "epsilon": epsilon, "delta": delta,
                "method": Method(method).value, "methods_used": sorted(methods_used), "seed": seed},
    )
    logger.info("end_to_end %s %dx%d: rate %.4f vs bound %.4f", family, n, d, stats.empirical_rate, stats.bound)
    return stats


def default_audit_triples() -> list[tuple[int, float, float]]:
    dims = (1, 10, 100, 1000, 10_000)
    tolerances = ((0.5, 0.2), (0.1, 0.05), (0.01, 0.01), (0.001, 0.001))
    return [(d, eps, delta) for d in dims for eps, delta in tolerances]


def iteration_audit(triples: list[tuple[int, float, float]] | None = None) -> TrialStats:
    """Plug iteration_count into the power bound; each triple must reach 1 - eps."""
    triples = triples or default_audit_triples()
    failures = []
    for d, eps, delta in triples:
        n = iteration_count(d, eps, delta)
        fraction = guaranteed_fraction(d, eps, delta, n)
        if fraction < 1.0 - eps:
            failures.append({"d": d, "epsilon": eps, "delta": delta, "n": n, "fraction": fraction})
    if failures:
        logger.warning("Iteration audit failed for %d triples: %s", len(failures), failures)
    return TrialStats(
        "audit", len(triples), len(triples) - len(failures), bound=1.0, slack=0.0,
        params={"triples": len(triples), "failures": failures},
    )


@dataclass
class HarnessConfig:
    experiment: str = "all"
    seed: int = 0
    trials: int | None = None  # overrides sketch/power/end_to_end defaults
    overlap_trials: int | None = None
    slack: float = SLACK_STD_ERRORS

    def __post_init__(self):
        self.experiment = EXPERIMENT_ALIASES.get(self.experiment, self.experiment)
        for name, value in (("trials", self.trials), ("overlap_trials", self.overlap_trials)):
            if value is not None and value < 1:
                raise ParameterError(f"{name} must be at least 1, got {value}")
        if self.experiment != "all" and self.experiment not in EXPERIMENTS:
            raise ParameterError(
                f"unknown experiment {self.experiment!r}; expected 'all' or one of {EXPERIMENTS}"
            )


def _matrix_experiment(name: str, config: HarnessConfig, seed: int) -> TrialStats:
    settings = dict(DEFAULT_SETTINGS[name])
    default_trials = settings.pop("trials")
    trials = default_trials if config.trials is None else config.trials
    if name == "sketch":
        return sketch_experiment(
            settings["family"], settings["d"], settings["epsilon"], settings["delta"],
            trials, seed, n=settings["n"], slack=config.slack,
        )
    runner = power_experiment if name == "power" else end_to_end_experiment
    return runner(
        settings["family"], settings["n"], settings["d"], settings["epsilon"], settings["delta"],
        trials, seed, slack=config.slack,
    )


def run_harness(config: HarnessConfig) -> dict:
    """Run the selected experiments and return a JSON-ready report.

    Returns:
        {"seed": ..., "experiments": [TrialStats.to_dict(), ...], "passed": bool}
    """
    names = EXPERIMENTS if config.experiment == "all" else (config.experiment,)
    # Distinct, order-independent seeds per experiment.
    states = np.random.SeedSequence(config.seed).generate_state(len(EXPERIMENTS), dtype=np.uint64)
    experiment_seeds = dict(zip(EXPERIMENTS, states))
    results = []
    for name in names:
        seed = int(experiment_seeds[name])
        if name == "audit":
            results.append(iteration_audit())
        elif name == "overlap":
            settings = DEFAULT_SETTINGS["overlap"]
            trials = settings["trials"] if config.overlap_trials is None else config.overlap_trials
            cells = [(d, dp) for d in settings["dims"] for dp in settings["delta_primes"]]
            for k, (d, delta_prime) in enumerate(cells):
                results.append(overlap_experiment(d, delta_prime, trials, seed + k, slack=config.slack))
        else:
            results.append(_matrix_experiment(name, config, seed))

    passed = all(r.passed for r in results)
    logger.info("Harness: %d/%d experiments passed", sum(r.passed for r in results), len(results))
    return {
        "seed": config.seed,
        "experiments": [r.to_dict() for r in results],
        "passed": passed,
    }
