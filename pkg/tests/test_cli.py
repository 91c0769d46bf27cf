import json

import numpy as np
import pytest

from fairla.cli import build_parser, main
from fairla.config import ExperimentConfig, override_flags
from fairla.diffusion import Content, HawkesModel

SMALL = ["--network.n_users=30", "--campaign.capacity=0.01"]


def cli(tmp_path, *args, out="out"):
    return main([*args, f"--output={tmp_path / out}", *SMALL])


def test_help_lists_every_override(capsys):
    for cmd in ("generate", "mitigate"):
        with pytest.raises(SystemExit) as info:
            main([cmd, "--help"])
        assert info.value.code == 0
        text = capsys.readouterr().out
        for key, _ in override_flags():
            assert f"--{key}" in text


def test_generate_is_reproducible(tmp_path):
    assert cli(tmp_path, "generate", out="a/nested") == 0
    assert cli(tmp_path, "generate", out="b") == 0
    for name in ("adjacency.json", "events.csv", "network_summary.json"):
        assert (tmp_path / "a/nested" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "b" / "network_summary.json").read_text())
    assert 15.0 <= summary["achieved_mis_pct"] <= 19.0
    assert cli(tmp_path, "generate", "--seed=1", out="c") == 0
    assert (tmp_path / "c" / "events.csv").read_bytes() != (tmp_path / "b" / "events.csv").read_bytes()


def test_output_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("FAIRLA_OUTPUT", str(tmp_path / "env"))
    assert main(["generate", *SMALL]) == 0
    assert (tmp_path / "env" / "events.csv").exists()


@pytest.mark.parametrize("args", [["--network.case=case9"], ["--eval.methods=[\"magic\"]"],
                                  ["--campaign.epsilon=0.9"], ["--seed=-1"], ["--threads=0"]])
def test_config_errors_exit_2(tmp_path, args):
    assert cli(tmp_path, "generate", *args) == 2


def test_unknown_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as info:
        cli(tmp_path, "generate", "--bogus.key=1")
    assert info.value.code == 2


def test_config_file(tmp_path):
    good = tmp_path / "cfg.json"
    good.write_text(json.dumps({"network": {"n_users": 25}, "seed": 3}))
    assert main(["generate", f"--config={good}", f"--output={tmp_path / 'o'}"]) == 0
    assert json.loads((tmp_path / "o" / "network_summary.json").read_text())["n_users"] == 25
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"netwrok": {}}))
    assert main(["generate", f"--config={bad}"]) == 2
    bad.write_text("{not json")
    assert main(["generate", f"--config={bad}"]) == 2
    assert main(["generate", f"--config={tmp_path / 'missing.json'}"]) == 2


def test_overrides_beat_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"diffusion": {"mis_decay": 0.5}}))
    cfg = ExperimentConfig.load(path)
    cfg.override("diffusion.mis_decay", "0.9")
    assert cfg.diffusion.mis_decay == 0.9
    assert cli(tmp_path, "fit", f"--config={path}", "--diffusion.mis_decay=0.9") == 0
    assert HawkesModel.load(tmp_path / "out" / "model_mis.json").decay == 0.9


def test_domain_errors_exit_1(tmp_path):
    assert cli(tmp_path, "generate", "--network.exposed_fraction=0.001") == 1
    assert cli(tmp_path, "report", out="empty") == 1
    assert cli(tmp_path, "mitigate", "--resume", out="fresh") == 1


def test_fit_writes_models(tmp_path):
    assert cli(tmp_path, "fit") == 0
    out = tmp_path / "out"
    mis, true = HawkesModel.load(out / "model_mis.json"), HawkesModel.load(out / "model_true.json")
    assert mis.content is Content.MIS and true.content is Content.TRUE
    assert mis.decay == 0.7 and true.decay == 1.0
    report = json.loads((out / "fit_report.json").read_text())
    assert report["n_users"] == 30


def test_fit_nonconvergence_keeps_partial_report(tmp_path):
    assert cli(tmp_path, "fit", "--diffusion.fit_max_iter=1") == 1
    report = json.loads((tmp_path / "out" / "fit_report.json").read_text())
    assert report["errors"]


def test_hawkes_source_round_trip(tmp_path):
    n = 3
    influence = np.diag(np.full(n, 0.3))
    influence[0, 1] = influence[1, 2] = 0.2
    HawkesModel(np.full(n, 0.02), influence, 0.7, Content.MIS).save(tmp_path / "mis.json")
    HawkesModel(np.full(n, 0.02), influence, 1.0, Content.TRUE).save(tmp_path / "true.json")
    code = main(["fit", "--network.source=hawkes", f"--network.mis_model={tmp_path / 'mis.json'}",
                 f"--network.true_model={tmp_path / 'true.json'}", "--network.history=100000",
                 f"--output={tmp_path / 'out'}"])
    assert code == 0
    report = json.loads((tmp_path / "out" / "fit_report.json").read_text())
    for c in ("mis", "true"):
        assert report[c]["relative_error"]["mu"] <= 0.15
        assert report[c]["relative_error"]["influence"] <= 0.15


def test_csv_source_and_insufficient_history(tmp_path):
    assert cli(tmp_path, "generate", out="net") == 0
    net = tmp_path / "net"
    src = ["--network.source=csv", f"--network.events={net / 'events.csv'}",
           f"--network.adjacency={net / 'adjacency.json'}"]
    assert cli(tmp_path, "fit", *src) == 0
    # the generated history covers only the training window
    assert cli(tmp_path, "simulate", *src) == 1
    assert cli(tmp_path, "fit", "--network.source=csv") == 2


def test_simulate_self_check(tmp_path):
    assert cli(tmp_path, "simulate", "--diffusion.self_check=true") == 0
    report = json.loads((tmp_path / "out" / "simulation_report.json").read_text())
    assert report["epsilon"] == 0.0 and report["within_baseline"]


def test_mitigate_uniform(tmp_path):
    assert cli(tmp_path, "mitigate", '--eval.methods=["uniform"]') == 0
    doc = json.loads((tmp_path / "out" / "campaign_uniform.json").read_text())
    assert doc["incentives"] == pytest.approx([0.01 / 30] * 30)
    assert "wall_time" not in doc


def test_mitigate_resume_is_identical(tmp_path):
    fair = '--eval.methods=["fair_la"]'
    assert cli(tmp_path, "mitigate", fair, out="full") == 0
    assert cli(tmp_path, "mitigate", fair, "--stop-after=3", out="part") == 0
    partial = json.loads((tmp_path / "part" / "campaign_fair_la.json").read_text())
    assert not partial["complete"]
    assert cli(tmp_path, "mitigate", fair, "--resume", out="part") == 0
    assert ((tmp_path / "full" / "campaign_fair_la.json").read_bytes()
            == (tmp_path / "part" / "campaign_fair_la.json").read_bytes())


def test_evaluate_and_report(tmp_path):
    assert cli(tmp_path, "evaluate", "--eval.runs=2") == 0
    out = tmp_path / "out"
    rows = json.loads((out / "report.json").read_text())["rows"]
    assert [r["method"] for r in rows] == ["fair_la", "uniform"]
    assert all(0 <= r["consumption_ratio"] <= 1 and r["runs"] == 2 for r in rows)
    assert len(json.loads((out / "runs.json").read_text())["runs"]) == 4
    before = (out / "report.csv").read_bytes()
    (out / "report.csv").unlink()
    assert cli(tmp_path, "report") == 0
    assert (out / "report.csv").read_bytes() == before


@pytest.mark.slow
def test_evaluate_threads_match_serial(tmp_path):
    assert cli(tmp_path, "evaluate", "--eval.runs=2", out="serial") == 0
    assert cli(tmp_path, "evaluate", "--eval.runs=2", "--threads=2", out="pool") == 0
    assert (tmp_path / "serial" / "report.csv").read_bytes() == (tmp_path / "pool" / "report.csv").read_bytes()


def test_parser_requires_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])
