import csv
import io
import json
import xml.etree.ElementTree as ET

import pytest
from click.testing import CliRunner

from csched.catalog import data_text
from csched.cli import main

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture
def files(tmp_path):
    c = tmp_path / "cluster.json"
    w = tmp_path / "workload.json"
    c.write_text(data_text("mri_cluster.json"))
    w.write_text(data_text("mri_workload.json"))
    return tmp_path, str(c), str(w)


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env)


def test_validate_ok(files):
    _, c, w = files
    r = run("validate", c, w)
    assert r.exit_code == 0 and "3 nodes, 2 workflows, 7 tasks" in r.output


def test_validate_paper_figures(data_dir):
    r = run("validate", data_dir / "figure_nodes.json", data_dir / "figure_workflow.json")
    assert r.exit_code == 0


def test_validate_cycle(files):
    tmp, c, _ = files
    w = tmp / "cyc.json"
    w.write_text('{"W": {"tasks": {"A": {"duration": 1, "dependencies": ["B"]}, "B": {"duration": 1, "dependencies": ["A"]}}}}')
    r = run("validate", c, w)
    assert r.exit_code == 2 and "CycleDetected" in r.output


def test_validate_missing_file(files):
    _, c, _ = files
    r = run("validate", c, "/nonexistent/w.json")
    assert r.exit_code == 1 and "cannot read" in r.output


def test_validate_duration_count_mismatch(files):
    tmp, c, _ = files
    w = tmp / "bad.json"
    w.write_text('{"W": {"tasks": {"A": {"duration": [1, 2]}}}}')
    assert run("validate", c, w).exit_code == 2


def test_solve_milp_table_and_schedule(files):
    tmp, c, w = files
    out = tmp / "s.json"
    r = run("solve", c, w, "--technique", "milp", "--out", out)
    assert r.exit_code == 0
    lines = [l.split() for l in r.output.splitlines()]
    assert ["W1", "T1", "N2", "0.00", "3.00", "8.00"] in lines
    assert ["W1", "T3", "N2", "8.00", "10.00", "12.00"] in lines
    doc = json.loads(out.read_text())
    w1 = doc["results"][0]
    assert (w1["workflow"], w1["status"], w1["makespan"], w1["total_usage"]) == ("W1", "optimal", 10.0, 32.0)
    assert [(t["node"], t["start"], t["end"]) for t in w1["tasks"]] == [("N2", 0, 3), ("N2", 3, 8), ("N2", 8, 10)]
    assert doc["nodes"] == ["N1", "N2", "N3"]


def test_solve_heft_dominated(files):
    tmp, c, w = files
    out = tmp / "h.json"
    assert run("solve", c, w, "--technique", "heft", "--out", out, "--quiet").exit_code == 0
    assert all(r["makespan"] >= 10.0 for r in json.loads(out.read_text())["results"])


def test_solve_empty_workload(files):
    tmp, c, _ = files
    w = tmp / "empty.json"
    w.write_text("{}")
    out = tmp / "e.json"
    r = run("solve", c, w, "--out", out)
    assert r.exit_code == 0
    assert json.loads(out.read_text())["results"] == []


def test_solve_infeasible_exit(files):
    tmp, c, _ = files
    w = tmp / "gpu.json"
    w.write_text('{"W": {"tasks": {"A": {"duration": 1, "features": ["GPU"]}}}}')
    r = run("solve", c, w)
    assert r.exit_code == 3 and "infeasible" in r.output


def test_solve_timeout_exits_zero(tmp_path):
    from csched.ingest import SyntheticSpec, generate_synthetic, serialize_cluster, serialize_workload
    nodes, wf = generate_synthetic(SyntheticSpec(30, 40, seed=1))
    c, w, out = tmp_path / "c.json", tmp_path / "w.json", tmp_path / "o.json"
    c.write_text(serialize_cluster(nodes))
    w.write_text(serialize_workload([wf]))
    r = run("solve", c, w, "--time-budget", "0.2", "--out", out, "--quiet")
    assert r.exit_code == 0
    assert json.loads(out.read_text())["results"][0]["status"] == "timeout"


def test_brute_technique(files):
    tmp, c, w = files
    out = tmp / "b.json"
    assert run("solve", c, w, "--technique", "brute", "--out", out, "--quiet").exit_code == 0
    assert [r["makespan"] for r in json.loads(out.read_text())["results"]] == [10.0, 10.0]


def test_env_and_flag_precedence(files):
    tmp, c, w = files
    out = tmp / "x.json"
    env = {"CSCHED_TECHNIQUE": "olb"}
    run("solve", c, w, "--out", out, "--quiet", env=env)
    assert json.loads(out.read_text())["results"][0]["technique"] == "olb"
    run("solve", c, w, "--out", out, "--quiet", "--technique", "heft", env=env)
    assert json.loads(out.read_text())["results"][0]["technique"] == "heft"


def test_solve_capacity_off_mode(files):
    tmp, c, w = files
    out = tmp / "off.json"
    assert run("solve", c, w, "--capacity-mode", "off", "--workflow", "W2", "--out", out, "--quiet").exit_code == 0
    (res,) = json.loads(out.read_text())["results"]
    assert res["workflow"] == "W2"


def test_solve_repeatable(files):
    tmp, c, w = files
    docs = []
    for i in range(2):
        out = tmp / f"r{i}.json"
        run("solve", c, w, "--technique", "ga", "--seed", "5", "--out", out, "--quiet")
        doc = json.loads(out.read_text())
        for r in doc["results"]:
            r.pop("wall_time")
        docs.append(doc)
    assert docs[0] == docs[1]


def bars(svg_text):
    root = ET.fromstring(svg_text)
    out = []
    for g in root.iter(f"{SVG}g"):
        scale, x0 = float(g.get("data-scale")), float(g.get("data-x0"))
        for r in g.iter(f"{SVG}rect"):
            if r.get("class") == "bar":
                out.append((g.get("data-workflow"), r, scale, x0))
    return out


def test_gantt_w1(files):
    tmp, c, w = files
    s, g = tmp / "s.json", tmp / "g.svg"
    run("solve", c, w, "--out", s, "--quiet", "--workflow", "W1")
    assert run("gantt", s, "--out", g).exit_code == 0
    found = bars(g.read_text())
    assert len(found) == 3
    assert {r.get("data-node") for _, r, _, _ in found} == {"N2"}
    spans = sorted((float(r.get("data-start")), float(r.get("data-end"))) for _, r, _, _ in found)
    assert all(a[1] <= b[0] for a, b in zip(spans, spans[1:]))


def test_gantt_coordinates_match_times(files):
    tmp, c, w = files
    s, g = tmp / "s.json", tmp / "g.svg"
    run("solve", c, w, "--out", s, "--quiet", "--workflow", "W2", "--technique", "olb")
    run("gantt", s, "--out", g)
    doc = json.loads(s.read_text())
    times = {t["task"]: (t["start"], t["end"]) for t in doc["results"][0]["tasks"]}
    for _, r, scale, x0 in bars(g.read_text()):
        start, end = times[r.get("data-task")]
        x, width = float(r.get("x")), float(r.get("width"))
        assert (x - x0) / scale == pytest.approx(start, abs=1e-3 / scale + 1e-9)
        assert (x + width - x0) / scale == pytest.approx(end, abs=2e-3 / scale + 1e-9)


def test_gantt_empty(tmp_path):
    s, g = tmp_path / "s.json", tmp_path / "g.svg"
    s.write_text(json.dumps({"nodes": [], "results": []}))
    assert run("gantt", s, "--out", g).exit_code == 0
    ET.fromstring(g.read_text())
    assert bars(g.read_text()) == []


def test_gantt_deterministic_colors(files):
    tmp, c, w = files
    s = tmp / "s.json"
    run("solve", c, w, "--out", s, "--quiet")
    run("gantt", s, "--out", tmp / "a.svg")
    run("gantt", s, "--out", tmp / "b.svg")
    assert (tmp / "a.svg").read_text() == (tmp / "b.svg").read_text()


@pytest.mark.parametrize("doc", ['{"results": []}', '{"nodes": ["N1"], "results": [{"workflow": "W", "tasks": [{"task": "T", "node": "N9", "start": 0, "end": 1}]}]}',
                                 '{"nodes": ["N1"], "results": [{"workflow": "W", "tasks": [{"task": "T", "node": "N1", "start": 2, "end": 1}]}]}', "nope"])
def test_gantt_schema_errors(tmp_path, doc):
    s = tmp_path / "s.json"
    s.write_text(doc)
    r = run("gantt", s, "--out", tmp_path / "g.svg")
    assert r.exit_code == 2 and "SchemaError" in r.output


def test_bench_quality_csv_repeatable(tmp_path):
    outs = []
    for i in range(2):
        out = tmp_path / f"q{i}.csv"
        r = run("bench", "--suite", "quality", "--techniques", "milp,heft,olb,sa", "--workers", "2", "--out", out)
        assert r.exit_code == 0
        rows = list(csv.DictReader(io.StringIO(out.read_text())))
        for row in rows:
            row.pop("wall_time")
        outs.append(rows)
    assert outs[0] == outs[1]
    rows = outs[0]
    assert len(rows) == 7 * 2 * 4
    w1 = [r for r in rows if r["case"] == "W1" and r["technique"] == "milp"]
    assert [r["makespan"] for r in w1] == ["10.000000", "5.000000"]
    assert {r["case"] for r in rows if r["substitute"] == "yes"} == {"W3", "W4"}


def test_bench_scale_small(tmp_path):
    out = tmp_path / "s.csv"
    r = run("bench", "--suite", "scale", "--sizes", "5", "--techniques", "milp,heft,ga", "--out", out)
    assert r.exit_code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert {r["technique"]: r["status"] for r in rows} == {"milp": "optimal", "heft": "feasible", "ga": "feasible"}


def test_bench_unknown_technique():
    assert run("bench", "--techniques", "foo").exit_code == 2
