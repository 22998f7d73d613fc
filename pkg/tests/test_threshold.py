import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nalm_bench.data import STANDARD_RANGES, RangeSpec
from nalm_bench.threshold import eps_perfect_prediction, pre_regularization_threshold, simulate_threshold

# Monte-Carlo value pinned before the build: add on [2,6), I=2, eps=1e-5, 1e6 samples, seed 0
GOLDEN_ADD_2_6 = 6.668473590587282e-09


def test_eps_perfect_examples():
    assert eps_perfect_prediction([[1.0, 1.0]], "add", 1e-5)[0, 0] == pytest.approx(2 - 2e-5, rel=1e-15)
    assert eps_perfect_prediction([[2.0, 3.0]], "mul", 0.0)[0, 0] == 6.0
    div = eps_perfect_prediction([[1.0, 2.0]], "div", 1e-5)[0, 0]
    assert div == pytest.approx((1 - 1e-5) / (2 * (1 + 1e-5)), rel=1e-15)
    assert eps_perfect_prediction([[5.0, -3.0]], "sub", 0.1)[0, 0] == pytest.approx(8 - 0.8)
    with pytest.raises(ValueError):
        eps_perfect_prediction([[1.0, 0.0]], "div")


def test_irrelevant_inputs_add_error_terms():
    x = [[2.0, 3.0, 4.0]]
    assert eps_perfect_prediction(x, "add", 0.01)[0, 0] == pytest.approx(5 - 0.09)
    assert eps_perfect_prediction(x, "mul", 0.01)[0, 0] == pytest.approx(6 * 0.99 ** 2 * 0.96)


def test_golden_threshold():
    thr = simulate_threshold("add", RangeSpec.parse("[2,6)"))
    assert thr.mse == GOLDEN_ADD_2_6
    assert thr.samples == 1_000_000 and thr.seed == 0 and thr.extrap == "U[2,6)"


def test_golden_threshold_agrees_with_closed_form():
    # E[(eps*(|x1|+|x2|))^2] for x uniform on [2,6): eps^2 * (2*Var + (2*mean)^2)
    closed = 1e-10 * (2 * 16 / 12 + 64)
    assert GOLDEN_ADD_2_6 == pytest.approx(closed, rel=2e-3)


def test_zero_eps_gives_zero_threshold():
    for op in ("add", "sub", "mul", "div"):
        for _, extrap in STANDARD_RANGES[:3]:
            assert simulate_threshold(op, extrap, eps=0.0, samples=2000).mse == 0.0


@settings(max_examples=15, deadline=None)
@given(op=st.sampled_from(["add", "sub", "mul", "div"]), idx=st.integers(0, 8))
def test_threshold_is_monotone_in_eps_and_width(op, idx):
    extrap = STANDARD_RANGES[idx][1]
    small = simulate_threshold(op, extrap, eps=1e-5, samples=5000).mse
    assert simulate_threshold(op, extrap, eps=1e-4, samples=5000).mse > small
    assert simulate_threshold(op, extrap, input_size=4, eps=1e-5, samples=5000).mse > small


def test_threshold_is_deterministic_and_positive():
    a = simulate_threshold("mul", RangeSpec.parse("[-2,-1)"), samples=3000, seed=5)
    b = simulate_threshold("mul", RangeSpec.parse("[-2,-1)"), samples=3000, seed=5)
    assert a == b and a.mse > 0
    assert a.to_dict()["operation"] == "mul"


def test_pre_regularization_threshold_is_looser():
    extrap = RangeSpec.parse("[2,6)")
    loose = pre_regularization_threshold("add", extrap, samples=5000)
    assert loose.eps < 0.5
    assert loose.mse > simulate_threshold("add", extrap, samples=5000).mse
    assert np.isfinite(loose.mse)
