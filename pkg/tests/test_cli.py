import csv
import json

import pytest

from contextuality.cli import main

from conftest import FIXTURES


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_json(capsys):
    code, out, _ = run(capsys, "analyze", FIXTURES / "chsh.json", "--exact", "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["subcommand"] == "analyze"
    assert rep["results"]["level"] == "probabilistic"
    assert rep["input_digest"]
    assert rep["timings"] is None


def test_analyze_text_and_postselect(capsys):
    code, out, _ = run(capsys, "analyze", FIXTURES / "hardy.json", "--exact", "--postselect")
    assert code == 0
    assert "logical" in out


def test_reports_are_deterministic(capsys):
    args = ("analyze", FIXTURES / "hardy.json", "--exact", "--json")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_timings_opt_in(capsys):
    _, out, _ = run(capsys, "analyze", FIXTURES / "chsh.json", "--json", "--timings")
    assert json.loads(out)["timings"]["analysis_s"] >= 0


def test_invalid_model_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"labels": ["A"], "outcomes": ["0", "1"], "contexts": [["A"]],
                               "tables": {"0": {"0": 0.5, "1": 0.6}}}))
    code, _, err = run(capsys, "analyze", bad)
    assert code == 1
    assert "context 0" in err
    code, _, err = run(capsys, "analyze", tmp_path / "missing.json")
    assert code == 1


def test_malformed_json_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{\n  \"labels\": [\n}")
    code, _, err = run(capsys, "analyze", bad)
    assert code == 1
    assert f"{bad}:3" in err


def test_csw_preset(capsys):
    code, out, _ = run(capsys, "csw", "--preset", "kcbs", "--json")
    r = json.loads(out)["results"]
    assert code == 0
    assert r["alpha"]["value"] == 2
    assert r["theta"]["value"] == pytest.approx(5 ** 0.5, abs=1e-4)
    assert r["S"]["value"] == pytest.approx(5 ** 0.5, abs=1e-9)
    assert r["exceeds_alpha"] and not r["exceeds_theta"]


def test_csw_needs_inputs(capsys):
    assert run(capsys, "csw")[0] == 1


def test_cbd_bundled(capsys):
    code, out, _ = run(capsys, "cbd", "--json", "--no-lp")
    r = json.loads(out)["results"]
    assert code == 0
    assert r["delta0"]["value"] == pytest.approx(0.166)
    assert r["delta_min"]["value"] == pytest.approx(0.7315)
    assert r["contextual"] is True


def test_cbd_missing_correlators(tmp_path, capsys):
    src = (FIXTURES / "kirchmair.csv").read_text().split("context,correlator")[0]
    path = tmp_path / "e.csv"
    path.write_text(src)
    code, _, err = run(capsys, "cbd", path, "--no-lp")
    assert code == 1
    assert "correlators required" in err


def test_simulate_curve_outputs(tmp_path, capsys):
    out_csv, out_svg = tmp_path / "c.csv", tmp_path / "c.svg"
    code, out, _ = run(capsys, "simulate", "--preset", "pm", "--channel", "depolarizing",
                       "--grid", "0:1:11", "--csv", out_csv, "--svg", out_svg, "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["results"]["reference_max_deviation"]["value"] <= 1e-9
    assert rep["metadata"]["lift"] == "global"
    rows = list(csv.reader(out_csv.open()))
    assert rows[0] == ["p", "value", "kind", "ordering"]
    assert len(rows) == 12
    svg = out_svg.read_text()
    assert svg.lstrip().startswith("<?xml") and "<svg" in svg


def test_svg_is_reproducible(tmp_path, capsys):
    a, b = tmp_path / "a.svg", tmp_path / "b.svg"
    for path in (a, b):
        run(capsys, "simulate", "--preset", "pm", "--channel", "bit_flip", "--grid", "0:1:5",
            "--svg", path)
    assert a.read_bytes() == b.read_bytes()


def test_simulate_model_output(tmp_path, capsys):
    out = tmp_path / "m.json"
    code, text, _ = run(capsys, "simulate", "--preset", "pm", "--channel", "depolarizing", "--p", 0.2,
                        "--out", out, "--json")
    assert code == 0
    r = json.loads(text)["results"]
    assert r["signalling_deficit"]["value"] > 0.01
    code, text, _ = run(capsys, "analyze", out, "--json")
    assert code == 0


def test_simulate_sampling_is_seeded(capsys):
    args = ("simulate", "--preset", "chsh-pi3", "--shots", 100, "--json")
    _, a, _ = run(capsys, *args, "--seed", 3)
    _, b, _ = run(capsys, *args, "--seed", 3)
    _, c, _ = run(capsys, *args, "--seed", 4)
    assert a == b and a != c


def test_simulate_errors(capsys):
    assert run(capsys, "simulate", "--preset", "kcbs", "--channel", "bit_flip", "--p", 0.1)[0] == 1
    assert run(capsys, "simulate", "--preset", "pm", "--grid", "0:1:3")[0] == 1
    assert run(capsys, "simulate", "--preset", "pm", "--channel", "bit_flip", "--grid", "a:b")[0] == 1
    assert run(capsys, "simulate", "--preset", "pm", "--channel", "bit_flip", "--p", 2)[0] == 1


def test_povm(capsys):
    code, out, _ = run(capsys, "povm", "--eta", 0.5, "--json")
    assert code == 0
    assert json.loads(out)["results"]["jointly_measurable"] is True
    code, out, _ = run(capsys, "povm", "--eta", 0.99, "--json")
    assert json.loads(out)["results"]["jointly_measurable"] is False
    assert run(capsys, "povm", "--eta", 2)[0] == 1


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--preset", "pm-winter", "--epsilon", 0.01, "--json")
    assert code == 0
    assert json.loads(out)["results"]["winter"]["violation"] is True
    code, out, _ = run(capsys, "bounds", "--r", 0.7, "--json")
    assert json.loads(out)["results"]["operational_pm"]["contextual"] is False
    code, out, _ = run(capsys, "bounds", "--alpha", 2, "--weights", 1, "--multiplicities", 3,
                       "--epsilon", 0.1, "--quantum-value", 2.3, "--json")
    assert json.loads(out)["results"]["winter"]["violation"] is True
    assert run(capsys, "bounds")[0] == 1
    assert run(capsys, "bounds", "--epsilon", 0.1)[0] == 1


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["analyze"])
    assert exc.value.code == 2
