import json
import subprocess
import sys
from fractions import Fraction

import pytest

from minbrain import jsonio
from minbrain.cli import main
from minbrain.coupled import CoupledSystem
from minbrain.model import DisturbanceModel, ExternalSystem, ProbModel
from minbrain.scenarios import (
    annulus,
    red_green_executor,
    red_green_plan_task,
    red_green_task_machine,
    swap_machine,
)
from minbrain.ts import StateRelabeledTS, TransitionSystem


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(jsonio.dumps(doc))
    return str(path)


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def system_doc(triples, labels, initial=None):
    ts = TransitionSystem.from_triples(triples)
    return jsonio.system_to_json(StateRelabeledTS(ts, labels, initial))


def coupled_doc():
    ts, table, root = red_green_executor()
    return jsonio.coupled_to_json(CoupledSystem(annulus(4), ts, table, root))


# ---------------------------------------------------------------- examples


def test_example_red_green_filter(tmp_path, capsys):
    dot = tmp_path / "f.dot"
    code, out, _ = run(["example", "red-green-filter", "--dot", str(dot)], capsys)
    assert code == 0
    doc = json.loads(out)
    assert doc["states"] == ["i0", "i_g", "i_nt", "i_r"]
    assert sorted(map(tuple, doc["transitions"])) == sorted(
        [
            ("i0", "g", "i_g"), ("i0", "r", "i_r"), ("i_g", "g", "i_nt"), ("i_g", "r", "i_r"),
            ("i_r", "g", "i_g"), ("i_r", "r", "i_nt"), ("i_nt", "g", "i_nt"), ("i_nt", "r", "i_nt"),
        ]
    )
    assert doc["state_labels"]["i_nt"] == "0"
    assert dot.read_text().startswith("digraph red_green_filter {")


def test_example_red_green_plan(capsys):
    code, out, _ = run(["example", "red-green-plan"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["state_labels"] == {"i0": "()", "i1": "u_g", "i2": "u_r"}
    assert len(doc["transitions"]) == 6


def test_example_corridor(capsys):
    code, out, _ = run(["example", "corridor"], capsys)
    runs = json.loads(out)["runs"]
    assert code == 0 and len(runs) == 25
    assert all(r["localized"] for r in runs)


def test_example_repeated_action(capsys):
    code, out, _ = run(["example", "repeated-action"], capsys)
    doc = json.loads(out)
    assert code == 0
    w = doc["witness"]
    assert w["s_next"].startswith(w["s"][:-1]) and w["t_next"].startswith(w["t"][:-1])
    assert ["l2", w["label"], "l1"] in doc["quotient"]["transitions"]
    assert ["l2", w["label"], "l2"] in doc["quotient"]["transitions"]


# ------------------------------------------------------------------- verbs


def test_check_sufficient_both_outcomes(tmp_path, capsys):
    good = write(tmp_path, "g.json", system_doc([("a", "x", "b"), ("b", "x", "a")], {"a": 0, "b": 1}))
    code, out, _ = run(["check-sufficient", "--input", good], capsys)
    assert code == 0 and json.loads(out) == {"sufficient": True}
    bad = write(tmp_path, "b.json", system_doc([("a", "x", "c"), ("b", "x", "d")], {"a": 0, "b": 0, "c": 1, "d": 2}))
    code, out, _ = run(["check-sufficient", "--input", bad], capsys)
    doc = json.loads(out)
    assert code == 1 and doc["sufficient"] is False
    assert doc["witness"] == {"s": "a", "t": "b", "label": "x", "s_next": "c", "t_next": "d"}


def test_minimize_already_sufficient_returns_input_partition(tmp_path, capsys):
    path = write(tmp_path, "s.json", system_doc([("a", "x", "b"), ("b", "x", "a"), ("c", "x", "a")], {"a": 0, "b": 1, "c": 1}))
    code, out, _ = run(["minimize", "--input", path], capsys)
    assert code == 0
    assert json.loads(out) == {"blocks": [["a"], ["b", "c"]]}


def test_minimize_red_green_machine(tmp_path, capsys):
    path = write(tmp_path, "m.json", jsonio.system_to_json(red_green_task_machine().as_srts()))
    code, out, _ = run(["minimize", "--input", path], capsys)
    assert code == 0
    assert json.loads(out)["blocks"] == [["bad0", "bad1"], ["g0", "g1"], ["r0", "r1"], ["start"]]


def test_minimize_nondeterministic_is_domain_error(tmp_path, capsys):
    path = write(tmp_path, "n.json", system_doc([("a", "x", "b"), ("a", "x", "c")], {"a": 0, "b": 0, "c": 0}))
    code, out, _ = run(["minimize", "--input", path], capsys)
    assert code == 1 and json.loads(out)["error"] == "NondeterministicInput"


def test_quotient(tmp_path, capsys):
    path = write(tmp_path, "s.json", system_doc([("a", "x", "c"), ("b", "x", "d")], {"a": 0, "b": 0, "c": 1, "d": 1}))
    code, out, _ = run(["quotient", "--input", path], capsys)
    assert code == 0 and json.loads(out)["transitions"] == [["0", "x", "1"]]


def test_derive_from_task_machine(tmp_path, capsys):
    path = write(tmp_path, "t.json", jsonio.task_to_json(red_green_task_machine()))
    code, out, _ = run(["derive", "--input", path, "--depth", "4"], capsys)
    doc = json.loads(out)
    assert code == 0
    # quotient by the raw task labels: consistent histories can go either way
    assert doc["states"] == ["0", "1"]
    assert ["1", "g", "0"] in doc["transitions"] and ["1", "g", "1"] in doc["transitions"]


def test_restrict_weak_and_strong(tmp_path, capsys):
    doc = system_doc(
        [("i", "(a,0)", "j"), ("i", "(b,0)", "i"), ("j", "(a,1)", "i"), ("j", "(b,1)", "j")],
        {"i": "a", "j": "b"},
    )
    path = write(tmp_path, "r.json", doc)
    code, out, _ = run(["restrict", "--input", path], capsys)
    assert code == 0
    assert json.loads(out)["transitions"] == [["i", "(a,0)", "j"], ["j", "(b,1)", "j"]]
    code, out, _ = run(["restrict", "--input", path, "--strong"], capsys)
    assert json.loads(out)["transitions"] == [["i", "0", "j"], ["j", "1", "j"]]


def test_simulate_is_deterministic(tmp_path, capsys):
    doc = coupled_doc()
    doc["start"] = "(2,g)"
    path = write(tmp_path, "c.json", doc)
    a = tmp_path / "a.jsonl"
    b = tmp_path / "b.jsonl"
    assert main(["simulate", "--input", path, "--horizon", "6", "--output", str(a)]) == 0
    assert main(["simulate", "--input", path, "--horizon", "6", "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rows = jsonio.from_jsonl(a.read_text())
    assert [r["stage"] for r in rows] == list(range(1, 7))
    assert [r["y"] for r in rows][:3] == ["g", "r", "g"]


def test_seeded_simulation_byte_identical(tmp_path):
    theta = {(x, "go"): {"stay": Fraction(1, 2), "move": Fraction(1, 2)} for x in "ab"}
    psi = {x: {"ok": Fraction(1)} for x in "ab"}
    f = {(x, "go", th): x if th == "stay" else ("b" if x == "a" else "a") for x in "ab" for th in ("stay", "move")}
    h = {(x, "ok"): x.upper() for x in "ab"}
    ext = ExternalSystem(("a", "b"), ("go",), ("A", "B"), f, h, DisturbanceModel("probabilistic", theta, psi))
    internal = TransitionSystem.from_triples([("k", "A", "k"), ("k", "B", "k")])
    path = write(tmp_path, "c.json", jsonio.coupled_to_json(CoupledSystem(ext, internal, {"k": "go"}, "k")))
    outs = []
    for seed in (3, 3, 4):
        out = tmp_path / f"o{len(outs)}.jsonl"
        assert main(["simulate", "--input", path, "--horizon", "25", "--seed", str(seed), "--output", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] != outs[2]


def test_reach_set_and_feasible(tmp_path, capsys):
    ext = write(tmp_path, "e.json", jsonio.external_to_json(annulus(4)))
    task = write(tmp_path, "t.json", jsonio.task_to_json(red_green_plan_task(4)))
    code, out, _ = run(["reach-set", "--input", ext, "--input", task], capsys)
    assert code == 0 and len(json.loads(out)["backward_reachable"]) == 8
    cs = write(tmp_path, "c.json", coupled_doc())
    code, out, _ = run(["feasible", "--input", cs, "--input", task], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["feasible"] and set(doc["stages"].values()) == {5}


def test_infeasible_policy_exit_one(tmp_path, capsys):
    doc = coupled_doc()
    doc["policy"] = {k: "u_g" if k != "i0" else "()" for k in doc["policy"]}
    cs = write(tmp_path, "c.json", doc)
    task = write(tmp_path, "t.json", jsonio.task_to_json(red_green_plan_task(4)))
    code, out, _ = run(["feasible", "--input", cs, "--input", task], capsys)
    doc = json.loads(out)
    assert code == 1 and doc["feasible"] is False and doc["verdict"] == "fail" and "witness" in doc


def test_dbi_graph_bit_names(tmp_path, capsys):
    path = write(tmp_path, "m.json", jsonio.moore_to_json(swap_machine()))
    code, out, _ = run(["dbi-graph", "--input", path], capsys)
    doc = json.loads(out)
    assert code == 0
    assert doc["states"] == ["01", "10"] and doc["initial"] == "10"
    assert doc["state_labels"] == {"01": 1, "10": 0}


def _noisy_model():
    F = Fraction
    return ProbModel(
        ("a", "b"),
        ("u",),
        ("0", "1"),
        {("a", "u"): {"b": F(3, 4), "a": F(1, 4)}, ("b", "u"): {"a": F(3, 4), "b": F(1, 4)}},
        {"a": {"0": F(9, 10), "1": F(1, 10)}, "b": {"0": F(1, 10), "1": F(9, 10)}},
        {"a": F(1), "b": F(0)},
    )


def test_psr_run_model_and_trace(tmp_path, capsys):
    model = write(tmp_path, "p.json", jsonio.prob_to_json(_noisy_model()))
    code, out, _ = run(["psr-run", "--input", model, "--max-test-len", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and len(doc["core_tests"]) == len(doc["m0"])
    trace = tmp_path / "t.jsonl"
    trace.write_text(jsonio.to_jsonl([{"u": "u", "y": "0"}, {"u": "u", "y": "1"}]))
    code, out, _ = run(["psr-run", "--input", model, "--input", str(trace)], capsys)
    rows = jsonio.from_jsonl(out)
    assert code == 0 and [r["stage"] for r in rows] == [0, 1, 2]


# ------------------------------------------------------------------ errors


def test_unknown_verb_exit_two(capsys):
    assert main(["frobnicate"]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["minimize"],
        ["reach-set", "--input", "/nonexistent/a.json"],
        ["example"],
        ["example", "nope"],
        ["minimize", "extra", "--input", "/nonexistent/a.json"],
        ["derive", "--input", "/nonexistent/a.json", "--depth", "0"],
    ],
)
def test_flags_checked_before_reading(argv, capsys):
    code, _, err = run(argv, capsys)
    assert code == 2
    msg = json.loads(err)
    assert msg["error"] == "SchemaError" and "nonexistent" not in msg["message"]


def test_bad_input_file_exit_two(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text("[1, 2")
    code, _, err = run(["quotient", "--input", str(bad)], capsys)
    assert code == 2 and json.loads(err)["error"] == "SchemaError"
    code, _, _ = run(["quotient", "--input", str(tmp_path / "missing.json")], capsys)
    assert code == 2


def test_console_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "minbrain.cli", "example", "red-green-plan"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["initial"] == "i0"
