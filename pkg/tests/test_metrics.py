import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nalm_bench.metrics import binomial_summary, solved_at_ci, sparsity_ci, success_rate_ci, summarize


def runs(flags, solved=None, sparsity=None):
    out = []
    for i, ok in enumerate(flags):
        out.append({"success": ok, "seed": i,
                    "solved_at": (solved[i] if solved else (5000 if ok else None)),
                    "sparsity_error": (sparsity[i] if sparsity else 1e-16)})
    return out


def test_clopper_pearson_brackets():
    full = success_rate_ci(runs([True] * 25))
    assert full.estimate == 1.0 and full.ci_high == 1.0
    assert full.ci_low == pytest.approx(0.863, abs=5e-4)
    none = success_rate_ci(runs([False] * 25))
    assert none.estimate == 0.0 and none.ci_low == 0.0
    assert none.ci_high == pytest.approx(0.137, abs=5e-4)
    one = binomial_summary(1, 1)
    assert one.ci_low == pytest.approx(0.025, abs=1e-12)


def test_empty_success_input_is_an_error():
    with pytest.raises(ValueError):
        success_rate_ci([])


@given(st.integers(1, 40), st.data())
def test_adding_a_success_never_lowers_the_rate(n, data):
    k = data.draw(st.integers(0, n))
    a, b = binomial_summary(k, n), binomial_summary(k + 1, n + 1)
    assert b.estimate >= a.estimate
    assert 0.0 <= a.ci_low <= a.estimate <= a.ci_high <= 1.0


def test_degenerate_solved_at():
    s = solved_at_ci(runs([True] * 5, solved=[5000] * 5))
    assert s.estimate == 5000 and s.ci_low == s.ci_high == 5000


def test_no_successes_means_absent_metrics():
    summary = summarize(runs([False] * 4))
    assert summary["solved-at"].estimate is None
    assert summary["sparsity"].estimate is None
    assert summary["success-rate"].estimate == 0.0


def test_sparsity_examples():
    floor = sparsity_ci(runs([True] * 3))
    assert floor.estimate == 1e-16 and floor.ci_low == floor.ci_high == 1e-16
    single = sparsity_ci(runs([True], sparsity=[0.2]))
    assert single.estimate == 0.2 and single.ci_low is None
    pair = sparsity_ci(runs([True, True], sparsity=[0.1, 0.3]))
    assert pair.estimate == pytest.approx(0.2)
    assert pair.ci_low < 0.2 < pair.ci_high
    assert 0.0 <= pair.ci_low and pair.ci_high <= 0.5


def test_only_successful_runs_count():
    s = solved_at_ci(runs([True, False, True], solved=[1000, 40_000, 3000]))
    assert s.n == 2 and s.estimate == 2000


@settings(max_examples=10, deadline=None)
@given(st.lists(st.integers(0, 50) .map(lambda k: 1000 * k), min_size=2, max_size=8), st.randoms())
def test_summaries_are_permutation_invariant(solved, random):
    flags = [True] * len(solved)
    sparsity = list(np.linspace(1e-3, 0.4, len(solved)))
    a = summarize(runs(flags, solved, sparsity))
    order = list(range(len(solved)))
    random.shuffle(order)
    b = summarize(runs(flags, [solved[i] for i in order], [sparsity[i] for i in order]))
    for name in a:
        assert a[name].estimate == pytest.approx(b[name].estimate, rel=1e-12)
        assert a[name].ci_low == pytest.approx(b[name].ci_low, rel=1e-9)
        assert a[name].ci_high == pytest.approx(b[name].ci_high, rel=1e-9)
    assert a["solved-at"].ci_low <= a["solved-at"].estimate <= a["solved-at"].ci_high


def test_gamma_interval_is_sensible_and_repeatable():
    solved = [4000, 5000, 5000, 6000, 5000, 4000, 7000, 5000]
    a = solved_at_ci(runs([True] * 8, solved=solved))
    b = solved_at_ci(runs([True] * 8, solved=solved))
    assert a == b
    assert 3500 < a.ci_low < a.estimate < a.ci_high < 7000
