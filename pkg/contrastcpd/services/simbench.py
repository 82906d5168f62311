# contrastcpd/services/simbench.py
"""
Synthetic scenarios, the Jensen-Shannon oracle and the detection-delay benchmark.

Scenarios (sigma = 0.1, change after sample 50):
  example 1  N(0, s^2) -> N(mu, s^2), mu = 0.1, length 100    (mean shift)
  example 2  N(0, s^2) -> N(0, (2s)^2), length 80             (variance change)
  example 3  N(0, s^2) -> U(-s*sqrt(3), s*sqrt(3)), length 100 (same mean and variance)
"""
import logging
import math
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate

from ..errors import InadmissibleShift, QuadratureFailure
from ..schemas.calibration import CalibrationConfig, CalibrationReport, GaussianReference
from ..schemas.detector import DetectionResult, DetectorConfig
from ..schemas.discriminators import DiscriminatorSpec, parse_family
from ..schemas.simbench import (
    BenchmarkRow,
    Distribution,
    Gaussian,
    GaussianVector,
    Lemma1Report,
    ScenarioSpec,
    Uniform,
)
from ..shared import derive_rng, derive_seed, ordered_map
from . import calibration, detector
from .contrast_core import LN2, batch_value_and_gradient

log = logging.getLogger("simbench")

SIGMA = 0.1
JS_TOL = 1e-8

TABLE1_FAMILIES: Dict[int, List[str]] = {
    1: ["poly:1", "fourier:2", "mlp:1,2,3,1"],
    2: ["poly:2", "fourier:3", "mlp:1,2,3,1"],
    3: ["poly:5", "fourier:6", "mlp:1,2,3,1"],
}

# published (threshold, mean delay, delay std) per example and family label
PUBLISHED_TABLE: Dict[Tuple[int, str], Tuple[float, float, float]] = {
    (1, "poly:1"): (1.74, 9.1, 2.2),
    (1, "fourier:2"): (1.80, 9.4, 2.2),
    (1, "mlp:1,2,3,1"): (3.27, 11.8, 2.6),
    (2, "poly:2"): (3.11, 15.9, 6.4),
    (2, "fourier:3"): (3.00, 17.6, 8.1),
    (2, "mlp:1,2,3,1"): (3.27, 14.9, 5.6),
    (3, "poly:5"): (3.48, 6.3, 3.1),
    (3, "fourier:6"): (5.09, 29.5, 11.6),
    (3, "mlp:1,2,3,1"): (3.27, 6.3, 3.8),
}


# ---------- scenarios ----------

def example_scenario(
    number: int,
    *,
    seed: int = 0,
    reps: int = 10,
    mu: Optional[float] = None,
    uniform_support: str = "moment",
) -> ScenarioSpec:
    """
    uniform_support="moment" gives U(-s*sqrt(3), s*sqrt(3)), whose variance equals s^2;
    "literal" gives the narrower U(-s/sqrt(3), s/sqrt(3)).
    """
    pre = Gaussian(mean=0.0, std=SIGMA)
    if number == 1:
        post: Distribution = Gaussian(mean=0.1 if mu is None else mu, std=SIGMA)
        length = 100
    elif number == 2:
        post = Gaussian(mean=0.0, std=2 * SIGMA)
        length = 80
    elif number == 3:
        if uniform_support == "moment":
            half = SIGMA * math.sqrt(3.0)
        elif uniform_support == "literal":
            half = SIGMA / math.sqrt(3.0)
        else:
            raise ValueError(f"uniform_support must be 'moment' or 'literal', got {uniform_support!r}")
        post = Uniform.centered(half)
        length = 100
    else:
        raise ValueError(f"unknown example {number} (expected 1, 2 or 3)")
    return ScenarioSpec(
        id=f"example{number}", example=number, pre=pre, post=post,
        change_time=50, length=length, reps=reps, seed=seed,
    )


def generate(scenario: ScenarioSpec, rep: int) -> np.ndarray:
    """Deterministic stream for (scenario.seed, rep): change_time draws from pre, the rest from post."""
    rng = derive_rng(scenario.seed, rep)
    head = scenario.pre.sample(rng, scenario.change_time)
    tail = scenario.post.sample(rng, scenario.length - scenario.change_time)
    return np.concatenate([head, tail], axis=0)


# ---------- Jensen-Shannon ----------

def _kl_to_mixture(p: Distribution, q: Distribution, lo: float, hi: float, points: List[float]) -> Tuple[float, float]:
    def integrand(x: float) -> float:
        lp = float(p.logpdf(x))
        if lp == -math.inf:
            return 0.0
        lm = float(np.logaddexp(lp, float(q.logpdf(x)))) - LN2
        return math.exp(lp) * (lp - lm)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(
            integrand, lo, hi, points=points or None, epsabs=JS_TOL / 10, epsrel=1e-10, limit=500
        )
    return value, abserr


def js_divergence(p: Distribution, q: Distribution) -> float:
    """JS(p, q) = KL(p, m)/2 + KL(q, m)/2, m = (p + q)/2, by adaptive quadrature."""
    if isinstance(p, GaussianVector) or isinstance(q, GaussianVector):
        return _js_gaussian_vectors(p, q)
    spread = max(p.spread, q.spread)
    lo = min(p.bounds[0], q.bounds[0]) - 10.0 * spread
    hi = max(p.bounds[1], q.bounds[1]) + 10.0 * spread
    points = sorted({b for d in (p, q) for b in d.bounds if lo < b < hi})
    kl_p, err_p = _kl_to_mixture(p, q, lo, hi, points)
    kl_q, err_q = _kl_to_mixture(q, p, lo, hi, points)
    err = 0.5 * (err_p + err_q)
    if not (math.isfinite(kl_p) and math.isfinite(kl_q)) or err > JS_TOL:
        raise QuadratureFailure(f"JS quadrature missed tolerance {JS_TOL:g} (error estimate {err:.3g})")
    return min(max(0.5 * (kl_p + kl_q), 0.0), LN2)


def mahalanobis_shift(mu, sigma_matrix) -> float:
    """||Sigma^{-1/2} mu||; a scalar sigma_matrix is read as the variance."""
    mu = np.atleast_1d(np.asarray(mu, dtype=np.float64))
    S = np.atleast_2d(np.asarray(sigma_matrix, dtype=np.float64))
    if S.shape != (mu.size, mu.size):
        raise ValueError(f"sigma_matrix must be {mu.size}x{mu.size}")
    return float(math.sqrt(max(float(mu @ np.linalg.solve(S, mu)), 0.0)))


def _js_gaussian_vectors(p: Distribution, q: Distribution) -> float:
    # equal-covariance Gaussians: JS depends on the Mahalanobis distance only
    if not (isinstance(p, GaussianVector) and isinstance(q, GaussianVector)) or not np.allclose(p.cov, q.cov):
        raise ValueError("vector JS is only available for Gaussian pairs with a shared covariance")
    delta = mahalanobis_shift(np.subtract(q.mean, p.mean), p.cov)
    return js_divergence(Gaussian(mean=0.0, std=1.0), Gaussian(mean=delta, std=1.0))


def js_divergence_mc(p: Distribution, q: Distribution, draws: int, rng: np.random.Generator) -> Tuple[float, float]:
    """Monte-Carlo JS estimate and its standard error."""
    xp = p.sample(rng, draws)
    xq = q.sample(rng, draws)
    lp_p, lq_p = p.logpdf(xp), q.logpdf(xp)
    lp_q, lq_q = p.logpdf(xq), q.logpdf(xq)
    a = LN2 + lp_p - np.logaddexp(lp_p, lq_p)
    b = LN2 + lq_q - np.logaddexp(lp_q, lq_q)
    terms = 0.5 * (a + b)
    return float(terms.mean()), float(terms.std(ddof=1) / math.sqrt(draws))


def js_lower_bound_check(mu, sigma_matrix) -> bool:
    """JS(N(0, Sigma), N(mu, Sigma)) >= mu' Sigma^{-1} mu / 24, for ||Sigma^{-1/2} mu|| <= ln(4/3)."""
    delta = mahalanobis_shift(mu, sigma_matrix)
    if delta > math.log(4.0 / 3.0) + 1e-12:
        raise InadmissibleShift(f"||Sigma^(-1/2) mu|| = {delta:.4f} exceeds ln(4/3)")
    js = js_divergence(Gaussian(mean=0.0, std=1.0), Gaussian(mean=delta, std=1.0))
    return js >= delta * delta / 24.0


# ---------- contrastive functional at the true log density ratio ----------

def verify_lemma1(
    p: Gaussian,
    q: Gaussian,
    tau: int,
    t: int,
    mc_reps: int,
    *,
    seed: int = 0,
    scale: float = 1.0,
) -> Lemma1Report:
    """
    Monte-Carlo mean of T_{tau,t}(scale * ln(p/q)) over mc_reps streams (tau draws from p,
    t - tau from q) against 2 tau (t - tau) JS(p, q) / t, which it equals at scale 1 and
    bounds from above otherwise.
    """
    if not 1 <= tau <= t - 1:
        raise ValueError(f"tau={tau} outside 1..{t - 1}")
    if mc_reps < 2:
        raise ValueError("mc_reps must be >= 2")
    rng = derive_rng(seed, tau, t)
    x = np.concatenate([p.sample(rng, (mc_reps, tau)), q.sample(rng, (mc_reps, t - tau))], axis=1)
    f = scale * (p.logpdf(x) - q.logpdf(x))
    values, _ = batch_value_and_gradient(f, np.full(mc_reps, tau))
    js = js_divergence(p, q)
    target = 2.0 * tau * (t - tau) / t * js
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(mc_reps))
    if stderr > 0:
        z = (mean - target) / stderr
    else:
        z = 0.0 if abs(mean - target) <= 1e-12 else math.copysign(math.inf, mean - target)
    return Lemma1Report(
        tau=tau, t=t, mc_reps=mc_reps, scale=scale, js=js, target=target, mc_mean=mean, mc_stderr=stderr, z=z
    )


# ---------- benchmark ----------

def published(example: int, spec: DiscriminatorSpec) -> Optional[Tuple[float, float, float]]:
    """Published cell for this example and exact family, None when the table has no such cell."""
    return PUBLISHED_TABLE.get((example, spec.label))


def table1(seed: int = 0, reps: int = 10, uniform_support: str = "moment") -> List[Tuple[ScenarioSpec, DiscriminatorSpec]]:
    rows = []
    for number, families in TABLE1_FAMILIES.items():
        scenario = example_scenario(number, seed=seed, reps=reps, uniform_support=uniform_support)
        rows.extend((scenario, parse_family(fam)) for fam in families)
    return rows


def _reference_of(scenario: ScenarioSpec) -> GaussianReference:
    pre = scenario.pre
    if isinstance(pre, Gaussian):
        return GaussianReference(mean=pre.mean, std=pre.std)
    if isinstance(pre, GaussianVector):
        # per-component reference: calibration streams are iid per coordinate
        return GaussianReference(mean=float(np.mean(pre.mean)), std=float(math.sqrt(np.mean(np.diag(pre.cov)))))
    return GaussianReference(mean=pre.mean, std=pre.spread)


def run_scenario(
    scenario: ScenarioSpec,
    spec: DiscriminatorSpec,
    *,
    threshold: Optional[float] = None,
    calibration_n: int = 150,
    calibration_reps: int = 10,
    rank: int = 2,
    warmup: int = 20,
    margin: int = 10,
    workers: int = 1,
    fit_workers: int = 1,
) -> Tuple[BenchmarkRow, Optional[CalibrationReport], List[DetectionResult]]:
    """Calibrate (unless a threshold is given), then run the detector on every replication."""
    report: Optional[CalibrationReport] = None
    if threshold is None:
        report = calibration.run_calibration(CalibrationConfig(
            reference=_reference_of(scenario),
            spec=spec,
            n=calibration_n,
            reps=calibration_reps,
            rank=rank,
            margin=margin,
            warmup=warmup,
            seed=scenario.seed,
            workers=workers,
            fit_workers=fit_workers,
        ))
        threshold = report.threshold

    def one_rep(rep: int) -> DetectionResult:
        config = DetectorConfig(
            threshold=threshold,
            spec=spec,
            warmup=warmup,
            margin=margin,
            seed=derive_seed(scenario.seed, rep),
            fit_workers=fit_workers,
        )
        return detector.run(generate(scenario, rep), config)

    results = ordered_map(one_rep, range(scenario.reps), workers=workers)
    row = BenchmarkRow.from_stopping_times(
        scenario=scenario.id,
        family=spec.label,
        threshold=threshold,
        change_time=scenario.change_time,
        stopping_times=[r.stopping_time for r in results],
    )
    log.info(
        "%s / %s: threshold=%.3f mean_delay=%s misses=%d false_alarms=%d",
        scenario.id, spec.label, threshold,
        "-" if row.mean_delay is None else f"{row.mean_delay:.2f}", row.misses, row.false_alarms,
    )
    return row, report, results


def run_benchmark(
    table: Sequence[Tuple[ScenarioSpec, DiscriminatorSpec]],
    reps: int,
    seed: int,
    *,
    workers: int = 1,
    fit_workers: int = 1,
) -> List[BenchmarkRow]:
    if reps < 2:
        raise ValueError("benchmark needs reps >= 2")

    def one_row(item: Tuple[ScenarioSpec, DiscriminatorSpec]) -> BenchmarkRow:
        scenario, spec = item
        scenario = scenario.copy(update={"reps": reps, "seed": seed})
        row, _, _ = run_scenario(scenario, spec, workers=workers, fit_workers=fit_workers)
        return row

    return ordered_map(one_row, table, workers=workers)
