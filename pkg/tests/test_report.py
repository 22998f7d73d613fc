import csv
import xml.etree.ElementTree as ET

import pytest

from nalm_bench.data import STANDARD_RANGES
from nalm_bench.metrics import MetricSummary
from nalm_bench.report import ReportBundle, emit_tables, read_table, render_all, render_svg
from nalm_bench.trainer import RunRecord

SVG = "{http://www.w3.org/2000/svg}"


def record(kind, op, interp, seed, success, solved=5000, sparsity=1e-16):
    return RunRecord(kind=kind, operation=op, interp=interp, extrap="U[2,6)", seed=seed, input_size=2,
                     iterations=50_000, extrap_mse=1e-12 if success else 1.0, best_val_mse=1e-12,
                     best_iteration=49_000, solved_at=solved if success else None,
                     sparsity_error=sparsity, success=success, threshold=6.7e-9, reinit_count=0,
                     diverged=False, run_id=f"{kind}{op}{interp}{seed}")


def small_bundle():
    recs = [record("nau", "add", "U[1,2)", s, True, solved=3000 + 1000 * s, sparsity=0.01 * (s + 1))
            for s in range(4)]
    recs += [record("nalu", "add", "U[1,2)", s, False) for s in range(4)]
    return ReportBundle.from_records("t", recs, "abc")


def test_one_module_one_range_gives_one_row(tmp_path):
    bundle = ReportBundle.from_records("t", [record("nau", "add", "U[1,2)", 0, True)])
    [csv_path, json_path] = emit_tables(bundle, tmp_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0].startswith("module,range,success_rate,ci_low,ci_high,solved_at_mean")
    assert len(lines) == 2
    assert json_path.name == "report.json"


def test_missing_metrics_render_as_dashes(tmp_path):
    [csv_path, _] = emit_tables(small_bundle(), tmp_path)
    rows = list(csv.reader(open(csv_path)))
    nalu = [r for r in rows if r[0] == "nalu"][0]
    assert nalu[1] == "U[1,2)"
    assert nalu[5:] == ["---"] * 6


def test_re_emit_is_byte_identical(tmp_path):
    bundle = small_bundle()
    first = emit_tables(bundle, tmp_path / "a")[0].read_bytes()
    again = ReportBundle.from_dict(bundle.to_dict())
    again.timestamp = "2099-01-01T00:00:00Z"
    assert emit_tables(again, tmp_path / "b")[0].read_bytes() == first


def test_csv_round_trip(tmp_path):
    bundle = small_bundle()
    [csv_path, _] = emit_tables(bundle, tmp_path)
    parsed = read_table(csv_path)
    for (module, op, rng), metrics in bundle.cells.items():
        for name, s in metrics.items():
            back = parsed[(module, rng)][name]
            for field in ("estimate", "ci_low", "ci_high"):
                want, got = getattr(s, field), getattr(back, field)
                if want is None:
                    assert got is None
                else:
                    assert got == pytest.approx(want, rel=1e-6)


def test_bundle_json_round_trip():
    bundle = small_bundle()
    assert ReportBundle.from_dict(bundle.to_dict()) == bundle


def _bars(path):
    root = ET.parse(path).getroot()
    return (root.findall(f".//{SVG}rect[@class='bar']"), root.findall(f".//{SVG}line[@class='whisker']"), root)


def test_svg_counts_bars_and_is_self_contained(tmp_path):
    recs = []
    for kind in ("nau", "nmu", "nalu", "npu", "realnpu"):
        for interp, _ in STANDARD_RANGES:
            recs += [record(kind, "mul", interp.label, s, s % 2 == 0) for s in range(2)]
    bundle = ReportBundle.from_records("t", recs)
    path = render_svg(bundle, "success-rate", tmp_path / "s.svg")
    bars, _, root = _bars(path)
    assert len(bars) == 45
    text = path.read_text()
    assert "href" not in text and "http://www.w3.org/2000/svg" in text
    assert root.tag == f"{SVG}svg"


def test_full_success_bar_spans_the_axis(tmp_path):
    bundle = ReportBundle.from_records("t", [record("nau", "add", "U[1,2)", s, True) for s in range(3)])
    bars, _, _ = _bars(render_svg(bundle, "success-rate", tmp_path / "s.svg"))
    [bar] = bars
    assert float(bar.get("y")) == pytest.approx(40.0)
    assert float(bar.get("height")) == pytest.approx(260.0)


def test_zero_width_interval_has_no_whisker(tmp_path):
    bundle = ReportBundle.from_records("t", [record("nau", "add", "U[1,2)", s, True) for s in range(3)])
    _, whiskers, _ = _bars(render_svg(bundle, "solved-at", tmp_path / "s.svg"))
    assert whiskers == []
    _, whiskers, _ = _bars(render_svg(small_bundle(), "solved-at", tmp_path / "t.svg"))
    assert len(whiskers) == 1


def test_render_all_and_bad_metric(tmp_path):
    paths = render_all(small_bundle(), tmp_path)
    assert sorted(p.name for p in paths) == ["add_solved-at.svg", "add_sparsity.svg", "add_success-rate.svg"]
    for p in paths:
        ET.parse(p)
    with pytest.raises(ValueError):
        render_svg(small_bundle(), "accuracy", tmp_path / "x.svg")


def test_summaries_keep_their_invariant():
    for metrics in small_bundle().cells.values():
        for s in metrics.values():
            assert isinstance(s, MetricSummary)
            if s.ci_low is not None:
                assert s.ci_low <= s.estimate <= s.ci_high
