import pytest
from typer.testing import CliRunner

from pmbpqm import config
from pmbpqm.io import read_csv
from pmbpqm_cli import app, sparkline

runner = CliRunner()


def invoke(*args):
    return runner.invoke(app, [str(a) for a in args])


def test_graphs_command():
    result = invoke("graphs")
    assert result.exit_code == 0
    for name in ("fg5", "fg7", "lemma3q"):
        assert name in result.output


def test_holevo_command():
    result = invoke("holevo", "--theta", 1.5707963267948966, "--q", 0.2)
    assert result.exit_code == 0
    assert "Holevo" in result.output


def test_holevo_command_rejects_bad_channel():
    assert invoke("holevo", "--theta", 3.0).exit_code == 2


def test_run_fg5_writes_csv(tmp_path):
    result = invoke("run", "--experiment", "fg5", "--theta-steps", 3, "--p-list", "0,0.1",
                    "--out", tmp_path, "--no-plot")
    assert result.exit_code == 0, result.output
    comments, rows = read_csv(tmp_path / "fg5.csv")
    assert len(rows) == 6
    assert list(rows[0]) == ["theta", "p", "P_pmbpqm", "P_helstrom", "rel_diff"]
    assert comments[2].strip() == f"# seed: {config.SEED}"
    for row in rows:
        assert float(row["P_helstrom"]) >= float(row["P_pmbpqm"]) - 1e-9


def test_run_fg7_with_plot(tmp_path):
    result = invoke("run", "-e", "fg7", "--theta-steps", 2, "--theta-min", 0.5, "--p-list", "0.05",
                    "--out", tmp_path)
    assert result.exit_code == 0, result.output
    _, rows = read_csv(tmp_path / "fg7.csv")
    assert list(rows[0]) == ["theta", "p", "P_pmbpqm", "P_lg"]
    svg = (tmp_path / "fg7.svg").read_text()
    assert svg.lstrip().startswith("<?xml")


def test_run_fg7_pure_states_up_to_half_pi(tmp_path):
    result = invoke("run", "-e", "fg7", "--theta-steps", 3, "--p-list", "0", "--out", tmp_path, "--no-plot")
    assert result.exit_code == 0, result.output
    _, rows = read_csv(tmp_path / "fg7.csv")
    assert float(rows[-1]["P_lg"]) == pytest.approx(1.0, abs=1e-9)
    for row in rows:
        assert float(row["P_pmbpqm"]) >= float(row["P_lg"]) - 1e-9


def test_run_lemma3q(tmp_path):
    result = invoke("run", "--experiment", "lemma3q", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    assert "helstrom" in result.output
    _, rows = read_csv(tmp_path / "lemma3q.csv")
    assert float(rows[0]["success"]) == pytest.approx(0.741270283, abs=1e-8)
    successes = {row["measurement"]: float(row["success"]) for row in rows}
    assert max(v for k, v in successes.items() if k.startswith("lambda")) == pytest.approx(0.738794, abs=1e-5)


def test_run_de_is_independent_of_threads(tmp_path):
    outputs = []
    for threads in (1, 2):
        out = tmp_path / f"t{threads}"
        result = invoke("run", "-e", "de", "--theta-steps", 2, "--theta-min", 1.0, "--M", 100, "--N", 3,
                        "--threads", threads, "--out", out, "--no-plot")
        assert result.exit_code == 0, result.output
        outputs.append(((out / "de_thresholds.csv").read_bytes(), (out / "holevo.csv").read_bytes()))
    assert outputs[0] == outputs[1]


def test_run_de_fixed_q(tmp_path):
    result = invoke("run", "-e", "de", "--theta-steps", 1, "--theta-min", 1.5, "--q-list", "0.05",
                    "--M", 100, "--N", 3, "--out", tmp_path, "--no-plot")
    assert result.exit_code == 0, result.output
    _, rows = read_csv(tmp_path / "de_success.csv")
    assert len(rows) == 1 and rows[0]["q"] == "0.05"


def test_run_de_overlays_ensembles(tmp_path):
    result = invoke("run", "-e", "de", "--theta-steps", 2, "--theta-min", 1.2, "--M", 100, "--N", 3,
                    "--ensembles", "3:4,3:6", "--out", tmp_path)
    assert result.exit_code == 0, result.output
    _, rows = read_csv(tmp_path / "de_thresholds.csv")
    assert [(r["dv"], r["dc"]) for r in rows] == [("3", "6"), ("3", "6"), ("3", "4"), ("3", "4")]
    _, bound = read_csv(tmp_path / "holevo.csv")
    assert sorted({r["rate"] for r in bound}) == ["0.25", "0.5"]
    assert (tmp_path / "de_thresholds.svg").exists()


@pytest.mark.parametrize(
    "args",
    [
        ("run", "--experiment", "fg9"),
        ("run", "--experiment", "fg5", "--p-list", "0.7"),
        ("run", "--experiment", "fg5", "--p-list", "a,b"),
        ("run", "--experiment", "fg5", "--methods", "bp"),
        ("run", "--experiment", "de", "--dv", 6, "--dc", 3),
        ("run", "--experiment", "de", "--ensembles", "6:3"),
        ("run", "--experiment", "de", "--ensembles", "3-6"),
        ("decode", "no-such-graph.json"),
    ],
)
def test_usage_errors_exit_with_2(args):
    assert invoke(*args).exit_code == 2


def test_decode_builtin_graph():
    result = invoke("decode", "fg5", "--theta", 0.7, "--method", "helstrom")
    assert result.exit_code == 0, result.output
    assert "Success probability" in result.output


def test_decode_json_graph(tmp_path):
    path = tmp_path / "g.json"
    path.write_text('{"root": 1, "nodes": [{"id": 1, "kind": "variable", "channel": {"theta": 1.0, "q": 0.0}}]}')
    result = invoke("decode", path, "--method", "locally_greedy")
    assert result.exit_code == 0, result.output
    assert "0.920735" in result.output


def test_resource_cap_exits_with_3(monkeypatch):
    monkeypatch.setattr(config, "MAX_HELSTROM_QUBITS", 3)
    assert invoke("decode", "fg5", "--method", "helstrom").exit_code == 3


def test_sparkline():
    lines = sparkline([0.5, 0.75, 1.0], height=3).splitlines()
    assert len(lines) == 3
    assert all(len(line) == 3 for line in lines)
    assert sparkline([]) == "─"
