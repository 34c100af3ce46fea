import json
import subprocess
import sys

import numpy as np
import pytest

from netdisc import linalg as la
from netdisc.cli import main, make_config, read_config
from netdisc.qobj import diag_state, random_channel, random_state, replacer_channel
from netdisc.zoo import make_replacer


def _state(m):
    return la.Operator(m).to_json()


@pytest.fixture
def same_states(tmp_path, rng):
    rho = random_state(2, seed=rng)
    p = tmp_path / "same.json"
    p.write_text(json.dumps({"rho": _state(rho), "sigma": _state(rho)}))
    return p


@pytest.fixture
def replacers(tmp_path):
    t1 = make_replacer(replacer_channel(diag_state([0.9, 0.1]), 2))
    t2 = make_replacer(replacer_channel(diag_state([0.6, 0.4]), 2))
    p = tmp_path / "rep.json"
    p.write_text(json.dumps({"theta1": t1.to_json(), "theta2": t2.to_json()}))
    return p


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_div_of_equal_states_is_zero(same_states, capsys):
    code, out, _ = _run(["div", "--in", str(same_states)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["result"]["value"] == 0.0
    assert doc["meta"]["seed"] == 0 and "tolerances" in doc["meta"]


@pytest.mark.parametrize("measure,want", [("Dmax", 0.0), ("petz:2", 0.0), ("sandwiched:0.5", 0.0), ("chernoff", 0.0),
                                          ("dh:0.1", np.log2(1 / 0.9))])
def test_div_measures_on_equal_states(same_states, capsys, measure, want):
    code, out, _ = _run(["div", "--in", str(same_states), "--measure", measure], capsys)
    assert code == 0 and json.loads(out)["result"]["value"] == pytest.approx(want, abs=1e-6)


def test_channel_divergence_cli(tmp_path, capsys, rng):
    n = random_channel(2, 2, seed=rng)
    p = tmp_path / "ch.json"
    p.write_text(json.dumps({"N": n.to_json(), "M": n.to_json()}))
    code, out, _ = _run(["div", "--in", str(p), "--measure", "diamond"], capsys)
    assert code == 0 and abs(json.loads(out)["result"]["value"]) < 1e-6


@pytest.mark.parametrize("payload", ["{not json", "[1, 2]", '{"rho": [[1, 0], [0, 0]]}',
                                     '{"rho": [[1, 2], [0, 0]], "sigma": [[1, 0], [0, 0]]}'])
def test_malformed_input_exit_two(tmp_path, capsys, payload):
    p = tmp_path / "bad.json"
    p.write_text(payload)
    code, out, err = _run(["div", "--in", str(p)], capsys)
    assert code == 2 and out == ""
    doc = json.loads(err)
    assert set(doc) == {"error", "message"}


def test_bad_flag_values_exit_two(same_states, capsys):
    assert _run(["div", "--in", str(same_states), "--budget", "lots"], capsys)[0] == 2
    assert _run(["div", "--in", str(same_states), "--measure", "wat"], capsys)[0] == 2
    assert _run(["div", "--in", str(same_states.parent / "missing.json")], capsys)[0] == 2


def test_discriminate_and_replay(replacers, tmp_path, capsys):
    code, out, _ = _run(["discriminate", "--in", str(replacers), "--n", "2", "--eps", "0.1"], capsys)
    doc = json.loads(out)
    assert code == 0
    # Stein setting on product inputs: beta for 2 copies of (.9,.1) vs (.6,.4) at eps .1
    assert doc["result"]["beta"] == pytest.approx(0.6, abs=1e-6)
    pair = json.loads(replacers.read_text())
    pair["strategy"] = doc["strategy"]
    p = tmp_path / "replay.json"
    p.write_text(json.dumps(pair))
    code, out2, _ = _run(["discriminate", "--in", str(p), "--eps", "0.1"], capsys)
    assert code == 0 and json.loads(out2)["result"]["beta"] == pytest.approx(0.6, abs=1e-6)


def test_sweep_is_deterministic_csv(replacers, capsys):
    argv = ["sweep", "--in", str(replacers), "--n-max", "3", "--eps", "0.1", "--format", "csv", "--seed", "3"]
    code, a, _ = _run(argv, capsys)
    _, b, _ = _run(argv, capsys)
    assert code == 0 and a == b
    lines = [ln for ln in a.splitlines() if not ln.startswith("#")]
    assert lines[0] == "n,class,epsilon_or_prior,alpha,beta,rate,bound,margin"
    assert len(lines) == 4
    assert "# seed=3" in a
    margins = [float(ln.split(",")[-1]) for ln in lines[1:]]
    assert all(m >= -1e-6 for m in margins)


def test_csv_only_for_sweep(same_states, capsys):
    assert _run(["div", "--in", str(same_states), "--format", "csv"], capsys)[0] == 2


def test_config_file_merging(tmp_path, same_states):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\nseed = 7\nbudget=1x10\nmeasure=Dmax\nn-max=4\n")
    c = make_config(["div", "--config", str(cfg), "--in", str(same_states), "--seed", "9"])
    assert c.seed == 9 and c.budget == "1x10"
    assert c.options["measure"] == "Dmax" and c.options["n_max"] == 4
    c = make_config(["div", "--in", str(same_states)])
    assert c.seed == 0 and c.budget == "2x200"
    bad = tmp_path / "bad.cfg"
    bad.write_text("seed 7\n")
    with pytest.raises(Exception):
        read_config(str(bad))


def test_out_file(same_states, tmp_path, capsys):
    out = tmp_path / "o.json"
    code, printed, _ = _run(["div", "--in", str(same_states), "--out", str(out)], capsys)
    assert code == 0 and printed == "" and json.loads(out.read_text())["result"]["value"] == 0.0


@pytest.mark.parametrize("suite", ["family-identities", "classical-collapse", "data-processing"])
def test_verify_suites_pass(capsys, suite):
    code, out, _ = _run(["verify", "--suite", suite, "--count", "2", "--budget", "1x80"], capsys)
    doc = json.loads(out)
    assert code == 0, doc
    assert doc["passed"] is True


def test_console_entry_point(same_states):
    proc = subprocess.run([sys.executable, "-m", "netdisc", "div", "--in", str(same_states)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and json.loads(proc.stdout)["result"]["value"] == 0.0
