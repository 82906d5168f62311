import math

import numpy as np
import pytest
from pydantic import ValidationError

from contrastcpd.errors import InadmissibleShift, QuadratureFailure
from contrastcpd.schemas.discriminators import OptimizerSettings, parse_family
from contrastcpd.schemas.simbench import BenchmarkRow, Gaussian, GaussianVector, ScenarioSpec, Uniform
from contrastcpd.services import discriminators as D
from contrastcpd.services import simbench
from contrastcpd.shared import derive_rng

LN2 = math.log(2.0)


# ---------- Jensen-Shannon ----------

def test_js_of_identical_laws_is_zero():
    p = Gaussian(mean=0.0, std=0.1)
    assert simbench.js_divergence(p, p) == pytest.approx(0.0, abs=1e-10)


def test_js_of_disjoint_laws_is_ln2():
    p, q = Uniform(low=0.0, high=1.0), Uniform(low=2.0, high=3.0)
    assert simbench.js_divergence(p, q) == pytest.approx(LN2, abs=1e-8)


@pytest.mark.parametrize(
    "p,q",
    [
        (Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.1, std=0.1)),
        (Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.0, std=0.2)),
        (Gaussian(mean=0.0, std=0.1), Uniform.centered(0.1 * math.sqrt(3.0))),
    ],
)
def test_js_is_symmetric_and_bounded(p, q):
    pq, qp = simbench.js_divergence(p, q), simbench.js_divergence(q, p)
    assert pq == pytest.approx(qp, abs=1e-8)
    assert 0.0 < pq <= LN2


def test_js_grows_with_the_shift():
    p = Gaussian(mean=0.0, std=1.0)
    values = [simbench.js_divergence(p, Gaussian(mean=m, std=1.0)) for m in (0.1, 0.5, 1.0, 3.0)]
    assert values == sorted(values)


@pytest.mark.parametrize(
    "p,q",
    [
        (Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.1, std=0.1)),
        (Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.0, std=0.2)),
        (Gaussian(mean=0.0, std=0.1), Uniform.centered(0.1 * math.sqrt(3.0))),
    ],
)
def test_js_quadrature_agrees_with_monte_carlo(p, q):
    exact = simbench.js_divergence(p, q)
    estimate, stderr = simbench.js_divergence_mc(p, q, 40_000, derive_rng(5))
    assert abs(estimate - exact) <= 4.0 * stderr


def test_vector_js_reduces_to_mahalanobis_distance():
    cov = [[4.0, 0.0], [0.0, 1.0]]
    p = GaussianVector(mean=[0.0, 0.0], cov=cov)
    q = GaussianVector(mean=[1.0, 0.0], cov=cov)
    scalar = simbench.js_divergence(Gaussian(mean=0.0, std=2.0), Gaussian(mean=1.0, std=2.0))
    assert simbench.js_divergence(p, q) == pytest.approx(scalar, abs=1e-8)


def test_mahalanobis_shift():
    assert simbench.mahalanobis_shift([3.0, 4.0], np.eye(2)) == pytest.approx(5.0)
    assert simbench.mahalanobis_shift(0.2, 0.04) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        simbench.mahalanobis_shift([1.0, 2.0], np.eye(3))


def test_js_lower_bound_holds_on_admissible_shifts():
    for delta in np.linspace(0.0, math.log(4.0 / 3.0), 20):
        assert simbench.js_lower_bound_check(delta, 1.0)


def test_js_lower_bound_vector_case():
    cov = np.array([[2.0, 0.3], [0.3, 1.0]])
    assert simbench.js_lower_bound_check([0.1, -0.2], cov)


def test_js_lower_bound_rejects_large_shift():
    with pytest.raises(InadmissibleShift):
        simbench.js_lower_bound_check(0.5, 1.0)


# ---------- functional at the true log-density ratio ----------

@pytest.mark.parametrize("tau,t", [(25, 50), (10, 60), (59, 60)])
def test_expected_functional_equals_scaled_js(tau, t):
    p, q = Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.1, std=0.1)
    report = simbench.verify_lemma1(p, q, tau, t, 2000, seed=1)
    assert report.target == pytest.approx(2 * tau * (t - tau) / t * report.js)
    assert report.within


def test_variance_change_functional():
    p, q = Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.0, std=0.2)
    assert simbench.verify_lemma1(p, q, 20, 40, 2000, seed=2).within


def test_scaled_ratio_stays_below_the_target():
    p, q = Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.1, std=0.1)
    report = simbench.verify_lemma1(p, q, 25, 50, 2000, seed=3, scale=0.5)
    assert report.below_bound


def test_verify_lemma1_argument_checks():
    p = Gaussian(mean=0.0, std=1.0)
    with pytest.raises(ValueError):
        simbench.verify_lemma1(p, p, 0, 10, 100)
    with pytest.raises(ValueError):
        simbench.verify_lemma1(p, p, 5, 10, 1)


# ---------- scenarios ----------

def test_example_scenarios():
    one, two, three = (simbench.example_scenario(n) for n in (1, 2, 3))
    assert (one.length, two.length, three.length) == (100, 80, 100)
    assert one.change_time == two.change_time == three.change_time == 50
    assert one.post.mean == pytest.approx(0.1)
    assert two.post.std == pytest.approx(0.2)
    assert three.post.high == pytest.approx(0.1 * math.sqrt(3.0))
    assert three.post.spread == pytest.approx(0.1)
    assert simbench.example_scenario(1, mu=0.3).post.mean == pytest.approx(0.3)


def test_literal_uniform_support():
    three = simbench.example_scenario(3, uniform_support="literal")
    assert three.post.low == pytest.approx(-0.1 / math.sqrt(3.0))
    assert three.post.spread == pytest.approx(0.1 / 3.0)
    with pytest.raises(ValueError):
        simbench.example_scenario(3, uniform_support="wide")
    with pytest.raises(ValueError):
        simbench.example_scenario(4)


def test_generate_is_deterministic():
    scenario = simbench.example_scenario(3, seed=4)
    a, b = simbench.generate(scenario, 2), simbench.generate(scenario, 2)
    assert np.array_equal(a, b)
    assert a.shape == (100,)
    assert not np.array_equal(a, simbench.generate(scenario, 3))
    # post-change samples lie inside the uniform support
    assert np.all(np.abs(a[50:]) <= 0.1 * math.sqrt(3.0))


def test_generate_change_at_last_sample():
    scenario = ScenarioSpec(
        id="edge", pre=Gaussian(mean=0.0, std=0.1), post=Gaussian(mean=5.0, std=0.1), change_time=99, length=100
    )
    x = simbench.generate(scenario, 0)
    assert np.all(x[:99] < 2.0)
    assert x[99] > 2.0


def test_scenario_rejects_change_outside_stream():
    with pytest.raises(ValidationError):
        ScenarioSpec(id="bad", pre=Gaussian(), post=Gaussian(mean=1.0), change_time=100, length=100)


def test_table1_layout():
    table = simbench.table1(seed=1, reps=3)
    assert len(table) == 9
    assert [spec.label for _, spec in table[:3]] == ["poly:1", "fourier:2", "mlp:1,2,3,1"]
    assert {scenario.id for scenario, _ in table} == {"example1", "example2", "example3"}
    assert simbench.published(1, table[0][1]) == (1.74, 9.1, 2.2)
    assert simbench.published(3, parse_family("poly:5")) == (3.48, 6.3, 3.1)
    # only the exact family of a published cell has one
    assert simbench.published(1, parse_family("poly:3")) is None
    assert simbench.published(3, parse_family("poly:1")) is None


# ---------- benchmark rows ----------

def test_benchmark_row_aggregation():
    row = BenchmarkRow.from_stopping_times("s", "poly:1", 1.0, 50, [55, None, 45, 60])
    assert row.delays == [5, 10]
    assert row.mean_delay == pytest.approx(7.5)
    assert row.std_delay == pytest.approx(math.sqrt(12.5))
    assert (row.misses, row.false_alarms) == (1, 1)
    assert row.rep_outcomes == ["5", "miss", "fa", "10"]


def test_benchmark_row_without_delays():
    row = BenchmarkRow.from_stopping_times("s", "poly:1", 1.0, 50, [None, 30])
    assert row.mean_delay is None and row.std_delay is None
    assert row.delays == []


def test_run_scenario_with_fixed_threshold():
    scenario = simbench.example_scenario(1, seed=2, reps=2, mu=1.0)
    spec = parse_family("poly:1", optimizer=OptimizerSettings(epochs=10))
    row, report, results = simbench.run_scenario(scenario, spec, threshold=math.inf)
    assert report is None
    assert row.misses == 2
    assert [r.stopping_time for r in results] == [None, None]
    assert len(results[0].trace) == 80


def test_benchmark_needs_two_reps():
    with pytest.raises(ValueError):
        simbench.run_benchmark(simbench.table1(reps=1), reps=1, seed=0)


def test_js_symmetry_on_random_gaussian_pairs():
    rng = np.random.default_rng(8)
    for _ in range(20):
        p = Gaussian(mean=float(rng.normal()), std=float(rng.uniform(0.2, 2.0)))
        q = Gaussian(mean=float(rng.normal()), std=float(rng.uniform(0.2, 2.0)))
        assert simbench.js_divergence(p, q) == pytest.approx(simbench.js_divergence(q, p), abs=1e-8)


def test_js_quadrature_failure_is_reported(monkeypatch):
    monkeypatch.setattr(simbench.integrate, "quad", lambda *args, **kwargs: (0.01, 1e-3))
    with pytest.raises(QuadratureFailure):
        simbench.js_divergence(Gaussian(mean=0.0, std=0.1), Gaussian(mean=0.1, std=0.1))


# ---------- generated streams ----------

def test_mean_shift_stream_segment_means():
    scenario = simbench.example_scenario(1, seed=11)
    bound = 4 * 0.1 / math.sqrt(50)
    for rep in range(5):
        x = simbench.generate(scenario, rep)
        assert abs(x[:50].mean() - 0.0) <= bound
        assert abs(x[50:].mean() - 0.1) <= bound


def test_variance_change_keeps_the_expectation():
    scenario = simbench.example_scenario(2, seed=11)
    for rep in range(5):
        x = simbench.generate(scenario, rep)
        assert abs(x[:50].mean()) <= 4 * 0.1 / math.sqrt(50)
        assert abs(x[50:].mean()) <= 4 * 0.2 / math.sqrt(30)
        assert x[50:].std() > x[:50].std()


# ---------- Gaussian vectors ----------

COV = np.array([[0.02, 0.004], [0.004, 0.01]])
MU = np.array([0.08, -0.05])


def vector_scenario(**kw):
    return ScenarioSpec(
        id="vector",
        pre=GaussianVector(mean=[0.0, 0.0], cov=COV.tolist()),
        post=GaussianVector(mean=MU.tolist(), cov=COV.tolist()),
        change_time=40,
        length=80,
        **kw,
    )


def test_constrained_linear_class_oracle():
    x = simbench.generate(vector_scenario(seed=3), 0)
    assert x.shape == (80, 2)
    evals, evecs = np.linalg.eigh(COV)
    S = evecs @ np.diag(np.sqrt(evals)) @ evecs.T          # Sigma^{1/2}
    precision = np.linalg.inv(COV)
    delta2 = float(MU @ precision @ MU)
    spec = parse_family("linear:2", weight_radius=math.sqrt(delta2), bias_radius=delta2, sigma_sqrt=S.tolist())

    fitted = D.fit(spec, x[:40], x[40:], seed=0)
    assert np.linalg.norm(S @ fitted.params[:2]) <= math.sqrt(delta2) + 1e-9
    assert abs(fitted.params[2]) <= delta2 + 1e-12

    # log p/q = -mu' Sigma^-1 x + delta^2 / 2 sits on the boundary of the class
    log_ratio = np.concatenate([-(precision @ MU), [0.5 * delta2]])
    assert np.linalg.norm(S @ log_ratio[:2]) == pytest.approx(math.sqrt(delta2))
    value, _ = D.objective_and_gradient(spec, log_ratio, x, 40)
    assert fitted.achieved_value >= value - 1e-6


def test_vector_scenario_calibrates_and_runs():
    scenario = vector_scenario(seed=5, reps=2)
    spec = parse_family("linear:2")
    row, report, results = simbench.run_scenario(
        scenario, spec, calibration_n=30, calibration_reps=2, rank=1, warmup=15, margin=4
    )
    assert report is not None
    assert math.isfinite(report.threshold) and report.threshold >= 0.0
    assert row.threshold == report.threshold
    assert len(results) == 2
    for result in results:
        assert result.trace[0].t == 16
