import json

import numpy as np
import pytest

from nalm_bench import autodiff as ad
from nalm_bench import cli
from nalm_bench.config import ExperimentConfig, parse_config
from nalm_bench.layers import make_model, save_model
from nalm_bench.runner import record_path, run_configs, run_matrix


def test_empty_config_uses_standard_defaults(monkeypatch):
    monkeypatch.delenv("NALM_BENCH_OUT", raising=False)
    cfg = parse_config()
    assert len(cfg.ranges) == 9 and cfg.seeds == list(range(25))
    assert cfg.iterations == 50_000 and cfg.batch == 128
    assert cfg.out == "nalm_bench_out"
    monkeypatch.setenv("NALM_BENCH_OUT", "/tmp/elsewhere")
    assert parse_config().out == "/tmp/elsewhere"


def test_flags_select_a_matrix():
    args = cli.build_parser().parse_args(["run", "--module", "nau", "--op", "add", "--seeds", "10"])
    cfg = parse_config(None, cli._overrides(args))
    assert cfg.modules == ["nau"] and cfg.operations == ["add"]
    assert len(cfg.ranges) == 9 and cfg.seeds == list(range(10))
    args = cli.build_parser().parse_args(["run", "--interp", " [1,2)", "--extrap", "[2,6)", "--seeds", "0-2"])
    cfg = parse_config(None, cli._overrides(args))
    assert cfg.ranges == [("U[1,2)", "U[2,6)")] and cfg.seeds == [0, 1, 2]


def test_file_values_and_overrides(tmp_path):
    path = tmp_path / "exp.toml"
    path.write_text('modules = ["nmu"]\nops = "mul"\nseeds = [3, 5]\niters = 1000\n'
                    'ranges = ["[1,2)", ["[-2,-1)", "[-6,-2)"]]\n[hyper.nmu]\nlambda_hat = 5.0\n')
    cfg = parse_config(path, {"iterations": 2000})
    assert cfg.modules == ["nmu"] and cfg.operations == ["mul"] and cfg.seeds == [3, 5]
    assert cfg.iterations == 2000 and cfg.hyper == {"nmu": {"lambda_hat": 5.0}}
    assert cfg.ranges == [("U[1,2)", "U[2,6)"), ("U[-2,-1)", "U[-6,-2)")]
    js = tmp_path / "exp.json"
    js.write_text(json.dumps({"modules": "nau", "seeds": 2}))
    assert parse_config(js).seeds == [0, 1]


@pytest.mark.parametrize("doc, overrides", [
    ({"modules": ["lstm"]}, {}),
    ({"ranges": ["[1,2"]}, {}),
    ({"ranges": [["[1,3)", "[2,6)"]]}, {}),
    ({"seeds": [1, 1]}, {}),
    ({"seeds": [1, 2]}, {"seeds": 3}),
    ({"iterations": 100}, {"iterations": "many"}),
    ({"colour": "blue"}, {}),
])
def test_bad_configs_are_rejected(tmp_path, doc, overrides):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError):
        parse_config(path, overrides)


def tiny(out, **kw):
    base = dict(modules=["nau", "nmu"], operations=["add"], ranges=[("[1,2)", "[2,6)"), ("[1,5)", "[5,15)")],
                seeds=[0, 1, 2], iterations=200, out=str(out))
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_matrix_counts_and_resumes(tmp_path):
    cfg = tiny(tmp_path)
    bundle, records = run_matrix(cfg)
    assert len(records) == 12 and len(bundle.cells) == 4
    assert len(list((tmp_path / "records").glob("*.json"))) == 12
    assert (tmp_path / "results_add.csv").exists() and (tmp_path / "charts" / "add_sparsity.svg").exists()

    victim = run_configs(cfg)[5]
    record_path(tmp_path, victim).unlink()
    seen = []
    _, again = run_matrix(cfg, progress=lambda rec, k, n: seen.append(rec.run_id), render=False)
    assert seen == [victim.run_id]
    assert again == records


def test_worker_count_does_not_change_results(tmp_path):
    a, _ = run_matrix(tiny(tmp_path / "a", workers=1), render=False)
    b, _ = run_matrix(tiny(tmp_path / "b", workers=2), render=False)
    assert a.cells == b.cells


def test_failed_runs_become_records(tmp_path, monkeypatch):
    from nalm_bench import runner

    def boom(run):
        raise RuntimeError("kaboom")

    monkeypatch.setattr(runner, "train_run", boom)
    _, records = run_matrix(tiny(tmp_path, modules=["nau"], seeds=[0]), render=False)
    assert all(r.error.startswith("RuntimeError") and not r.success for r in records)


def test_gradcheck_exit_codes(capsys, monkeypatch):
    assert cli.main(["gradcheck", "--module", "nau,nsr", "--draws", "3"]) == 0
    out = capsys.readouterr().out
    assert "nau" in out and "nsr" in out and "max rel error" in out

    def wrong(g, out, a):
        return (g * out,)

    monkeypatch.setattr(ad, "_tanh_b", wrong)
    assert cli.main(["gradcheck", "--module", "nsr", "--draws", "3"]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_extract_trained_nau(tmp_path, capsys):
    assert cli.main(["single", "--module", "nau", "--op", "add", "--seed", "0", "--out", str(tmp_path)]) == 0
    capsys.readouterr()
    [weights] = tmp_path.glob("nau_add_*_weights.json")
    assert cli.main(["extract", str(weights)]) == 0
    captured = capsys.readouterr()
    assert captured.out.strip() == "y0 = x0 + x1"
    assert captured.err == ""
    assert list(tmp_path.glob("nau_add_*_curve.csv"))


def test_extract_empty_product_and_warning(tmp_path, capsys):
    save_model(make_model("nmu", 2).set_params(W=np.zeros((2, 1))), tmp_path / "nmu.json")
    assert cli.main(["extract", str(tmp_path / "nmu.json")]) == 0
    assert capsys.readouterr().out.strip() == "y0 = 1"
    save_model(make_model("nau", 2).set_params(W=[[1.0], [0.4]]), tmp_path / "nau.json")
    assert cli.main(["extract", str(tmp_path / "nau.json")]) == 0
    captured = capsys.readouterr()
    assert "non-discrete" in captured.err and "x0" in captured.out


def test_extract_bad_file(tmp_path, capsys):
    (tmp_path / "bad.json").write_text("nope")
    assert cli.main(["extract", str(tmp_path / "bad.json")]) == 2
    assert cli.main(["extract", str(tmp_path / "missing.json")]) == 2


def test_report_rerenders_from_records(tmp_path, capsys):
    run_matrix(tiny(tmp_path, modules=["nau"], seeds=[0, 1]), render=False)
    assert cli.main(["report", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "report.json").exists() and (tmp_path / "charts" / "add_success-rate.svg").exists()
    assert cli.main(["report", "--out", str(tmp_path / "empty")]) == 2


def test_run_command_end_to_end(tmp_path, capsys):
    code = cli.main(["run", "--module", "nmu", "--op", "mul", "--interp", "[1,2)", "--seeds", "2",
                     "--iters", "300", "--out", str(tmp_path)])
    assert code == 0
    assert "nmu" in capsys.readouterr().out
    assert json.loads((tmp_path / "config.json").read_text())["iterations"] == 300
    assert cli.main(["run", "--module", "bogus", "--out", str(tmp_path)]) == 2
