import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.testing import assert_allclose

from contrastcpd.errors import EmptyRange
from contrastcpd.services.contrast_core import (
    SplitView,
    batch_value_and_gradient,
    contrastive_gradient,
    contrastive_value,
    max_statistic,
    softplus_half,
)

OUTPUT = st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)


@st.composite
def split_views(draw, min_t=2, max_t=40):
    t = draw(st.integers(min_value=min_t, max_value=max_t))
    tau = draw(st.integers(min_value=1, max_value=t - 1))
    f = draw(arrays(np.float64, (t,), elements=OUTPUT))
    return SplitView.from_outputs(f, tau)


def finite_difference(view: SplitView, h: float = 1e-6) -> np.ndarray:
    f = np.concatenate([view.pre, view.post])
    out = np.empty_like(f)
    for i in range(f.size):
        up, down = f.copy(), f.copy()
        up[i] += h
        down[i] -= h
        out[i] = (contrastive_value(SplitView.from_outputs(up, view.tau))
                  - contrastive_value(SplitView.from_outputs(down, view.tau))) / (2 * h)
    return out


def test_softplus_half_zero_is_exact():
    assert softplus_half(0.0) == 0.0


def test_softplus_half_large_positive():
    assert abs(softplus_half(50.0) - (50.0 - math.log(2.0))) < 1e-12


def test_softplus_half_large_negative():
    v = softplus_half(-50.0)
    # ln((1 + e^-50)/2) = -ln 2 + log1p(e^-50)
    assert abs(v - (-math.log(2.0) + math.log1p(math.exp(-50.0)))) < 1e-15


def test_softplus_half_no_overflow():
    assert math.isfinite(softplus_half(700.0))
    assert math.isfinite(softplus_half(-700.0))
    assert_allclose(softplus_half(np.array([700.0, -700.0])), [700.0 - math.log(2.0), -math.log(2.0)])


def test_value_all_zero_outputs_is_exactly_zero():
    for t in (2, 5, 37):
        for tau in range(1, t):
            assert contrastive_value(SplitView.from_outputs(np.zeros(t), tau)) == 0.0


def test_value_small_example():
    view = SplitView.from_outputs([math.log(3.0), math.log(3.0)], 1)
    assert contrastive_value(view) == pytest.approx(0.5 * (math.log(3.0) - 2 * math.log(2.0)), abs=1e-12)
    assert contrastive_value(view) == pytest.approx(-0.14384, abs=1e-5)


def test_value_constant_outputs_maximized_at_zero():
    grid = np.linspace(-3, 3, 61)
    vals = [contrastive_value(SplitView.from_outputs([c, c], 1)) for c in grid]
    expected = [0.5 * (c - 2 * math.log((1 + math.exp(c)) / 2)) for c in grid]
    assert_allclose(vals, expected, atol=1e-12)
    assert grid[int(np.argmax(vals))] == pytest.approx(0.0, abs=1e-12)
    assert max(vals) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("t", [2, 7, 20])
def test_constant_outputs_non_positive(t):
    for c in np.linspace(-5, 5, 21):
        for tau in range(1, t):
            v = contrastive_value(SplitView.from_outputs(np.full(t, c), tau))
            if c == 0:
                assert v == 0.0
            else:
                assert v < 0.0


def test_gradient_small_example():
    g = contrastive_gradient(SplitView.from_outputs([0.0, 0.0], 1))
    assert_allclose(g, [0.25, -0.25])
    assert_allclose(g, finite_difference(SplitView.from_outputs([0.0, 0.0], 1)), rtol=1e-6)


def test_gradient_saturates():
    g = contrastive_gradient(SplitView.from_outputs([40.0, 0.0], 1))
    assert 0.0 <= g[0] < 1e-15


def test_gradient_four_samples():
    view = SplitView.from_outputs([1.0, -1.0, 0.5, -0.5], 2)
    assert_allclose(contrastive_gradient(view), finite_difference(view), rtol=1e-6)


@settings(max_examples=60, deadline=None)
@given(split_views())
def test_gradient_matches_finite_differences(view):
    g = contrastive_gradient(view)
    fd = finite_difference(view)
    # absolute slack covers cancellation in the difference quotient
    assert_allclose(g, fd, rtol=1e-6, atol=1e-7)


@settings(max_examples=60, deadline=None)
@given(split_views(), st.randoms(use_true_random=False))
def test_permutation_invariance_within_segments(view, rnd):
    pre, post = list(view.pre), list(view.post)
    rnd.shuffle(pre)
    rnd.shuffle(post)
    shuffled = SplitView.from_outputs(pre + post, view.tau)
    assert contrastive_value(shuffled) == pytest.approx(contrastive_value(view), rel=1e-12, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_concavity(data):
    t = data.draw(st.integers(min_value=2, max_value=30))
    tau = data.draw(st.integers(min_value=1, max_value=t - 1))
    u = data.draw(arrays(np.float64, (t,), elements=OUTPUT))
    v = data.draw(arrays(np.float64, (t,), elements=OUTPUT))
    lam = data.draw(st.floats(min_value=0.0, max_value=1.0))
    mix = contrastive_value(SplitView.from_outputs(lam * u + (1 - lam) * v, tau))
    ends = lam * contrastive_value(SplitView.from_outputs(u, tau)) + (1 - lam) * contrastive_value(
        SplitView.from_outputs(v, tau)
    )
    assert mix >= ends - 1e-12 * max(1.0, abs(ends))


@settings(max_examples=40, deadline=None)
@given(split_views(max_t=25))
def test_batch_agrees_with_single_view(view):
    f = np.concatenate([view.pre, view.post])
    values, grads = batch_value_and_gradient(f[None, :], np.array([view.tau]))
    assert values[0] == pytest.approx(contrastive_value(view), rel=1e-12, abs=1e-12)
    assert_allclose(grads[0], contrastive_gradient(view), rtol=1e-12, atol=1e-15)


def test_split_view_rejects_bad_tau():
    with pytest.raises(ValueError):
        SplitView.from_outputs([0.0, 0.0, 0.0], 3)
    with pytest.raises(ValueError):
        SplitView.from_outputs([0.0], 1)


def test_max_statistic_picks_max():
    best = max_statistic([(10, -1.0), (11, 0.5), (12, 0.2)], margin=10, t=22)
    assert (best.value, best.tau) == (0.5, 11)


def test_max_statistic_tie_goes_to_smallest_tau():
    best = max_statistic([(11, 0.3), (10, 0.3)], margin=10, t=22)
    assert (best.value, best.tau) == (0.3, 10)


def test_max_statistic_ignores_out_of_range():
    best = max_statistic([(3, 9.0), (10, 0.1), (13, 5.0)], margin=10, t=22)
    assert best.tau == 10


def test_max_statistic_empty_range():
    with pytest.raises(EmptyRange):
        max_statistic([(10, 1.0)], margin=10, t=15)


def test_max_statistic_margin_one_is_unrestricted():
    best = max_statistic([(1, 2.0), (2, 1.0)], margin=1, t=3)
    assert best.tau == 1
