import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nalm_bench.data import (
    STANDARD_RANGES, RangeSpec, TaskSpec, build_task, check_disjoint, comparison_dataset, comparison_label,
    compute_target, dump_csv, logic_datasets, lookup_range, sample_batch, sample_task_batch, truth_table,
)


def test_parse_and_label():
    assert RangeSpec.parse("[1,2)").label == "U[1,2)"
    assert RangeSpec.parse("U[1,2)") == RangeSpec(((1, 2),))
    split = RangeSpec.parse("[[-6,-2),[2,6)]")
    assert split.pieces == ((-6.0, -2.0), (2.0, 6.0))
    assert split.label == "U[[-6,-2),[2,6)]"
    assert RangeSpec.parse(split.label) == split
    assert RangeSpec.parse("[0.1, 0.2)").label == "U[0.1,0.2)"


@pytest.mark.parametrize("bad", ["", "(1,2)", "[2,1)", "[1,1)"])
def test_bad_ranges_raise(bad):
    with pytest.raises(ValueError):
        RangeSpec.parse(bad)


def test_standard_ranges_are_disjoint():
    assert len(STANDARD_RANGES) == 9
    for interp, extrap in STANDARD_RANGES:
        check_disjoint(interp, extrap)
    assert lookup_range("[1,2)")[1].label == "U[2,6)"
    with pytest.raises(ValueError):
        check_disjoint(RangeSpec.parse("[1,3)"), RangeSpec.parse("[2,6)"))


def test_sample_batch_stays_in_range():
    rng = np.random.default_rng(0)
    x = sample_batch(RangeSpec.parse("[1,2)"), 2, 10_000, rng)
    assert x.shape == (10_000, 2)
    assert x.min() >= 1.0 and x.max() < 2.0


def test_split_range_is_sampled_by_length():
    x = sample_batch(RangeSpec.parse("[[-6,-2),[2,6)]"), 1, 20_000, np.random.default_rng(1))
    assert np.all(RangeSpec.parse("[[-6,-2),[2,6)]").contains(x))
    assert np.mean(x < 0) == pytest.approx(0.5, abs=0.02)
    uneven = sample_batch(RangeSpec(((0, 1), (10, 13))), 1, 20_000, np.random.default_rng(1))
    assert np.mean(uneven < 5) == pytest.approx(0.25, abs=0.02)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), idx=st.integers(0, 8))
def test_samples_lie_in_their_ranges(seed, idx):
    interp, extrap = STANDARD_RANGES[idx]
    rng = np.random.default_rng(seed)
    assert np.all(interp.contains(sample_batch(interp, 3, 256, rng)))
    assert np.all(extrap.contains(sample_batch(extrap, 3, 256, rng)))


def test_same_seed_same_batch():
    spec = RangeSpec.parse("[-2,2)")
    a = sample_batch(spec, 2, 50, np.random.default_rng(7))
    b = sample_batch(spec, 2, 50, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_compute_target_examples():
    assert compute_target([[2.0, 3.0]], "add")[0, 0] == 5.0
    assert compute_target([[2.0, 3.0]], "sub")[0, 0] == -1.0
    assert compute_target([[1.0, 2.0]], "div")[0, 0] == 0.5
    assert compute_target([[2.0, 3.0, 7.0, 9.0]], "mul")[0, 0] == 6.0
    with pytest.raises(ValueError):
        compute_target([[1.0, 0.0]], "div")
    with pytest.raises(ValueError):
        compute_target([[1.0, 2.0]], "pow")
    with pytest.raises(ValueError):
        compute_target([[1.0]], "add")


def test_division_batches_never_have_tiny_divisors():
    x, y = sample_task_batch(RangeSpec.parse("[-2,2)"), 2, 100_000, "div", np.random.default_rng(3))
    assert np.all(np.abs(x[:, 1]) >= 1e-9)
    assert np.all(np.isfinite(y))


def test_build_task_shapes_and_fixed_sets():
    interp, extrap = lookup_range("[1,2)")
    task = build_task(TaskSpec("add", interp, extrap))
    x, y = task.train_batch()
    assert x.shape == (128, 2) and y.shape == (128, 1)
    assert task.validation[0].shape == (10_000, 2) and task.test[0].shape == (10_000, 2)
    assert np.all(extrap.contains(task.test[0]))
    assert np.all(interp.contains(task.validation[0]))
    again = build_task(TaskSpec("add", interp, extrap))
    assert np.array_equal(task.validation[0], again.validation[0])
    assert np.array_equal(task.test[1], again.test[1])
    assert np.array_equal(x, again.train_batch()[0])
    assert not np.array_equal(x, task.train_batch()[0])


def test_task_spec_validation():
    interp, extrap = lookup_range("[1,2)")
    with pytest.raises(ValueError):
        TaskSpec("add", interp, extrap, input_size=1)
    with pytest.raises(ValueError):
        TaskSpec("add", interp, interp)


def test_truth_tables():
    x, y = truth_table("and", 2)
    assert x.tolist() == [[0, 0], [0, 1], [1, 0], [1, 1]]
    assert y[:, 0].tolist() == [0, 0, 0, 1]
    assert truth_table("xor", 3)[1].sum() == 4
    assert logic_datasets("truth-table", op="or")[1][:, 0].tolist() == [0, 1, 1, 1]


def test_comparisons():
    assert comparison_label("<", 3, 5) == 1.0
    assert comparison_label("=", 4, 4) == 1.0
    assert comparison_label("≠", 4, 4) == 0.0
    x, y = comparison_dataset(">=", 0, 10, 1000, np.random.default_rng(0))
    assert np.all(x == np.round(x)) and x.min() >= 0 and x.max() <= 10
    assert np.array_equal(y[:, 0], (x[:, 0] >= x[:, 1]).astype(float))
    a = logic_datasets("comparison", op="<", seed=4, n=20)
    b = logic_datasets("comparison", op="<", seed=4, n=20)
    assert np.array_equal(a[0], b[0])
    with pytest.raises(ValueError):
        comparison_label("<>", 1, 2)


def test_dump_csv(tmp_path):
    x = np.array([[1.5, 2.0], [0.1, 3.0]])
    y = compute_target(x, "mul")
    dump_csv(x, y, tmp_path / "d.csv")
    rows = list(csv.reader(open(tmp_path / "d.csv")))
    assert rows[0] == ["x1", "x2", "y"]
    assert [float(v) for v in rows[2]] == [0.1, 3.0, 0.1 * 3.0]
