import csv
import json
import os
import subprocess
import sys

import pytest

from mcpp.cli import main
from mcpp.grid import Instance, full_grid
from mcpp.io import read_manifest, read_solution, read_trajectories, write_instance, write_text

from helpers import GADGET_PATHS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def fields(line):
    return dict(part.split("=", 1) for part in line.strip().split(";"))


@pytest.fixture
def strip_files(tmp_path, strip):
    prefix = tmp_path / "strip"
    write_instance(str(prefix), strip)
    return prefix


@pytest.fixture
def gadget_files(tmp_path, gadget):
    prefix = tmp_path / "gadget"
    write_instance(str(prefix), gadget)
    write_text(str(tmp_path / "gadget_sol.json"),
               json.dumps({"paths": [[list(v) for v in p] for p in GADGET_PATHS]}))
    return prefix, tmp_path / "gadget_sol.json"


def test_generate_writes_instances_and_manifest(tmp_path, capsys):
    code, out, _ = run(capsys, "generate", "--base", "pillars", "--size", "12", "--k", "3",
                       "--rho", "0-1", "--seeds", "0,5", "--out", tmp_path / "b")
    assert code == 0
    entries = read_manifest(str(tmp_path / "b" / "manifest.json"))
    assert [(e["rho"], e["seed"]) for e in entries] == [(0, 0), (0, 5), (1, 0), (1, 5)]
    for e in entries:
        for ext in (".map", ".weights", ".scen"):
            assert os.path.exists(e["prefix"] + ext)
    assert fields(out.splitlines()[-1])["generated"] == "4"


def test_generate_twice_is_byte_identical(tmp_path, capsys):
    for d in ("a", "b"):
        assert run(capsys, "generate", "--base", "rooms", "--size", "10", "--k", "2",
                   "--out", tmp_path / d)[0] == 0
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_generate_unsampleable_roots_exit_infeasible(tmp_path, capsys):
    write_text(str(tmp_path / "line.map"), "type octile\nheight 1\nwidth 5\nmap\n.....\n")
    code, _, err = run(capsys, "generate", "--base", tmp_path / "line.map", "--k", "3", "--out", tmp_path / "o")
    assert code == 5 and "generation failed" in err


def test_solve_ls_on_the_strip_reaches_six(strip_files, tmp_path, capsys):
    out_path = tmp_path / "sol.json"
    code, out, _ = run(capsys, "solve", "--instance", strip_files, "--algo", "ls", "--out", out_path,
                       "--trace", tmp_path / "trace.jsonl", "--dump-hypergraph", tmp_path / "h.txt")
    assert code == 0
    assert float(fields(out)["makespan"]) == 6
    data = json.loads(out_path.read_text())
    assert data["makespan"] == 6 and data["metadata"]["algorithm"] == "ls"
    recs = [json.loads(line) for line in (tmp_path / "trace.jsonl").read_text().splitlines()]
    assert recs and {"iteration", "makespan", "temperature", "accepted"} <= set(recs[0])
    assert (tmp_path / "h.txt").read_text().startswith("# hypervertices")


def test_solve_estc_needs_one_robot(strip_files, tmp_path, capsys):
    code, _, err = run(capsys, "solve", "--instance", strip_files, "--algo", "estc", "--out", tmp_path / "s.json")
    assert code == 2 and "single robot" in err


def test_parse_errors_exit_two(tmp_path, capsys):
    write_text(str(tmp_path / "bad.map"), "type octile\nheight 2\nwidth 2\nmap\n..\n.\n")
    write_text(str(tmp_path / "bad.scen"), "0 0\n")
    code, _, err = run(capsys, "solve", "--map", tmp_path / "bad.map", "--scen", tmp_path / "bad.scen",
                       "--out", tmp_path / "s.json")
    assert code == 2 and "ragged" in err
    assert run(capsys, "solve", "--algo", "nope", "--out", "x")[0] == 2
    assert run(capsys, "solve", "--out", tmp_path / "s.json")[0] == 2


def test_verify_detects_tampering(strip_files, tmp_path, capsys):
    sol = tmp_path / "sol.json"
    assert run(capsys, "solve", "--instance", strip_files, "--algo", "vor", "--out", sol)[0] == 0
    code, out, _ = run(capsys, "verify", "--instance", strip_files, "--solution", sol)
    assert code == 0 and out.startswith("solution: PASS")
    data = json.loads(sol.read_text())
    data["paths"][1] = data["paths"][1][:3] + [data["paths"][1][0]]
    sol.write_text(json.dumps(data))
    code, out, _ = run(capsys, "verify", "--instance", strip_files, "--solution", sol)
    assert code == 3 and "FAIL" in out


def test_deconflict_and_verify_round_trip(gadget_files, tmp_path, capsys):
    prefix, sol = gadget_files
    traj = tmp_path / "traj.json"
    code, out, _ = run(capsys, "deconflict", "--instance", prefix, "--in", sol, "--low-level", "ada",
                       "--turn-cost", "0.5", "--time-limit", "60s", "--out", traj, "--svg", tmp_path / "t.svg")
    assert code == 0 and fields(out)["status"] == "ok"
    trajs, data = read_trajectories(str(traj))
    assert data["metadata"]["turn_cost"] == 0.5 and all(len(s) == 4 for r in data["trajectories"] for s in r)
    assert {"expanded", "pbs_nodes", "postponements"} <= set(data["stats"])
    code, out, _ = run(capsys, "verify", "--instance", prefix, "--solution", sol, "--trajectories", traj)
    assert code == 0 and "trajectories: PASS" in out
    assert (tmp_path / "t.svg").read_text().startswith("<?xml")


def test_deconflict_chaining_failure_exits_infeasible(gadget_files, tmp_path, capsys):
    prefix, sol = gadget_files
    code, out, _ = run(capsys, "deconflict", "--instance", prefix, "--in", sol, "--low-level", "cha",
                       "--out", tmp_path / "t.json")
    assert code == 5 and fields(out)["status"] == "infeasible"


def test_deconflict_timeout_exits_four(gadget_files, tmp_path, capsys, monkeypatch):
    prefix, sol = gadget_files
    monkeypatch.setenv("MCPP_TIME_LIMIT", "0")
    code, out, _ = run(capsys, "deconflict", "--instance", prefix, "--in", sol, "--time-limit", "3600s",
                       "--out", tmp_path / "t.json")
    assert code == 4 and fields(out)["status"] == "timeout"


def test_render_one_robot_draws_one_closed_polyline(tmp_path, capsys):
    from mcpp.render import solution_figure
    from mcpp.estc import estc
    G = full_grid(4, 4)
    inst = Instance(G, ((0, 0),))
    fig, ax = solution_figure(inst, [estc(G, (0, 0))])
    polylines = [ln for ln in ax.lines if ln.get_label().startswith("robot")]
    assert len(polylines) == 1
    xs, ys = polylines[0].get_data()
    assert (xs[0], ys[0]) == (xs[-1], ys[-1]) and len(xs) == 17

    prefix = tmp_path / "one"
    write_instance(str(prefix), inst)
    sol = tmp_path / "one.json"
    assert run(capsys, "solve", "--instance", prefix, "--algo", "estc", "--out", sol)[0] == 0
    for name in ("a.svg", "b.svg"):
        assert run(capsys, "render", "--instance", prefix, "--solution", sol, "--out", tmp_path / name)[0] == 0
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()
    assert read_solution(str(sol)).paths[0][0] == (0, 0)


def test_bench_writes_tables_and_figure(tmp_path, capsys):
    assert run(capsys, "generate", "--base", "empty", "--size", "8", "--k", "2", "--rho", "0,3",
               "--seeds", "0-1", "--out", tmp_path / "b")[0] == 0
    code, out, _ = run(capsys, "bench", "--manifest", tmp_path / "b" / "manifest.json", "--iters-scale", "30",
                       "--out", tmp_path / "r")
    assert code == 0
    with open(tmp_path / "r" / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 12 and all(r["success"] == "1" for r in rows)
    ms = {(r["instance"], r["algo"]): float(r["makespan"]) for r in rows}
    for (name, algo), m in ms.items():
        if algo == "ls":
            assert m <= ms[(name, "vor")]
    summary = (tmp_path / "r" / "summary.csv").read_text().splitlines()
    assert summary[0] == "rho,algo,mean,std,n" and len(summary) == 7
    assert (tmp_path / "r" / "reductions.svg").exists()


def test_console_script_runs():
    out = subprocess.run([sys.executable, "-m", "mcpp.cli", "--help"], capture_output=True, text=True)
    assert out.returncode == 0 and "generate" in out.stdout
