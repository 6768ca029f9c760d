import json

import pytest

from newton_infinity import cli
from newton_infinity import serialize as ser


def write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


def run(argv, capsys):
    code = cli.main(argv)
    captured = capsys.readouterr()
    report = json.loads(captured.out) if captured.out else None
    return code, report, captured.err


@pytest.fixture
def unattained(problems_dir):
    return str(problems_dir / "unattained.json")


@pytest.fixture
def halfspace(problems_dir):
    return str(problems_dir / "halfspace.json")


@pytest.mark.parametrize("command", ["newton", "check-ndg", "check-mf", "infimum", "attain"])
def test_reports_validate_against_schema(command, unattained, capsys):
    code, rep, _ = run([command, "--input", unattained], capsys)
    assert code == 0
    ser.validate(rep, "report.schema.json")
    assert rep["command"] == command
    assert rep["exit_code"] == code
    assert rep["seed"] == 0


def test_newton_payload_flags_bad_edge(unattained, capsys):
    _, rep, _ = run(["newton", "--input", unattained], capsys)
    G = rep["payload"]["newton"]["polyhedra"][0]
    assert G["convenient"] is False
    (bad,) = [f for f in G["faces"] if f["is_bad"]]
    assert bad["points"] == [[0, 0], [1, 1], [2, 2]]
    assert all(isinstance(v, str) for f in G["facets"] for v in f["normal"])


def test_newton_halfspace_and_single_variable(halfspace, tmp_path, capsys):
    _, rep, _ = run(["newton", "--input", halfspace], capsys)
    G0, G1 = rep["payload"]["newton"]["polyhedra"]
    assert G0["convenient"] is True and G0["bad_faces"] == []
    assert G1["convenient"] is False
    path = write(tmp_path, "cube.json", {"variables": ["x"], "objective": "x^3"})
    _, rep, _ = run(["newton", "--input", path], capsys)
    G = rep["payload"]["newton"]["polyhedra"][0]
    assert G["vertices"] == [[3]] and G["convenient"] is True


def test_degenerate_check_exits_one(tmp_path, capsys):
    path = write(tmp_path, "deg.json", {"variables": ["x", "y"], "objective": "x^2*(x*y - 1)^2 + y^2"})
    code, rep, _ = run(["check-ndg", "--input", path], capsys)
    assert code == 1
    assert rep["payload"]["check_ndg"]["verdict"] == "FAILS"
    code, rep, _ = run(["check-mf", "--input", path], capsys)
    assert code == 1


def test_infimum_payload(unattained, capsys):
    _, rep, _ = run(["infimum", "--input", unattained], capsys)
    inf = rep["payload"]["infimum"]
    assert inf["attainment"] == "NOT_ATTAINED_LIKELY"
    assert inf["fermat_witness"]["face"] == [[0, 0], [1, 1], [2, 2]]


def test_attain_halfspace(halfspace, capsys):
    code, rep, _ = run(["attain", "--input", halfspace], capsys)
    assert code == 0
    assert rep["payload"]["attain"]["conclusion"] == "ATTAINS_BY_THEOREM"


def test_search_then_certify_round_trip(unattained, tmp_path, capsys):
    cert_path = str(tmp_path / "cert.json")
    code, rep, _ = run(["search", "--input", unattained, "--certificate", cert_path], capsys)
    assert code == 0
    assert rep["payload"]["search"]["verification"]["verdict"] == "HOLDS_VERIFIED"
    ser.validate(json.loads(open(cert_path).read()), "certificate.schema.json")
    code, rep, _ = run(["certify", "--input", unattained, "--certificate", cert_path], capsys)
    assert code == 0
    assert rep["payload"]["certify"]["verdict"] == "HOLDS_VERIFIED"

    doc = json.loads(open(cert_path).read())
    doc["lambda"] = [0.0]
    zeroed = write(tmp_path, "zero.json", doc)
    code, rep, _ = run(["certify", "--input", unattained, "--certificate", zeroed], capsys)
    assert code == 1
    assert "v" in rep["payload"]["certify"]["failed"]


def test_search_absent_on_attained_instance(halfspace, capsys):
    code, rep, _ = run(["search", "--input", halfspace], capsys)
    assert code == 0
    assert rep["payload"]["search"]["certificate"] is None


def test_output_file(unattained, tmp_path, capsys):
    out = tmp_path / "report.json"
    code, rep, _ = run(["newton", "--input", unattained, "--output", str(out)], capsys)
    assert code == 0 and rep is None
    assert json.loads(out.read_text())["command"] == "newton"


def test_flags_override_config(unattained, capsys):
    _, rep, _ = run(["newton", "--input", unattained, "--seed", "5", "--box", "20", "--starts", "9"], capsys)
    assert rep["seed"] == 5
    assert rep["config"]["box_radius"] == 20 and rep["config"]["starts_per_axis"] == 9


@pytest.mark.parametrize("doc", [
    {"variables": ["x"], "objective": "x +"},
    {"variables": ["x"], "objective": "y"},
    {"variables": ["x"], "objective": "3"},
    {"variables": ["x"], "objective": "x", "constraints": ["0"]},
    {"objective": "x"},
    {"variables": ["x"], "objective": "x", "solver": {"box_radius": -1}},
])
def test_bad_input_exits_two(doc, tmp_path, capsys):
    code, rep, err = run(["newton", "--input", write(tmp_path, "bad.json", doc)], capsys)
    assert code == 2 and rep is None
    assert err.startswith("error:")


def test_missing_file_exits_two(tmp_path, capsys):
    code, _, _ = run(["newton", "--input", str(tmp_path / "nope.json")], capsys)
    assert code == 2


def test_infimum_rejects_constraints(halfspace, capsys):
    code, _, err = run(["infimum", "--input", halfspace], capsys)
    assert code == 2 and "unconstrained" in err


def test_certify_needs_certificate(unattained, capsys):
    code, _, _ = run(["certify", "--input", unattained], capsys)
    assert code == 2


def test_same_seed_same_report(unattained, capsys):
    _, a, _ = run(["check-mf", "--input", unattained, "--seed", "2"], capsys)
    _, b, _ = run(["check-mf", "--input", unattained, "--seed", "2"], capsys)
    a.pop("timings"), b.pop("timings")
    assert a == b


def test_worst_exit_code_ranking():
    assert cli._worst([0, 3, 1]) == 1
    assert cli._worst([0, 4, 1]) == 4
    assert cli._worst([]) == 0
