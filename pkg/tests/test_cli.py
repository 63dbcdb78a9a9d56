import json

import pandas as pd
import pytest

from vankampen.cli import main
from vankampen.cocycle import coboundary_matrix, intersection_cocycle, to_vector
from vankampen.complex import load_complex
from vankampen.delprod import orbit_reps
from vankampen.exactgeo import load_map
from vankampen.snf import verify
from vankampen.utils import COMPLEX_DIR


def run(tmp_path, *argv, name="report.json"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def obstruction(tmp_path, complex_name, r, d, seed=0, *extra, name="report.json"):
    return run(
        tmp_path, "obstruction", "--complex", str(COMPLEX_DIR / f"{complex_name}.json"),
        "--r", str(r), "--d", str(d), "--seed", str(seed), *extra, name=name,
    )


def write_json(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


@pytest.mark.parametrize("complex_name", ["k5", "k33"])
def test_nonplanar_graphs(tmp_path, complex_name):
    code, report = obstruction(tmp_path, complex_name, 2, 2)
    assert code == 0
    assert report["verdict"] == "NonVanishing"
    assert set(report["certificate"]["witness"]) == {"index", "residue", "divisor"}
    assert not report["flags"]["map_existence_decided"]


def test_k5_report_contents(tmp_path):
    _, report = obstruction(tmp_path, "k5", 2, 2, 3)
    assert report["counts"]["top_orbits"] == 15
    assert report["counts"]["codim_orbits"] == 30
    assert (report["matrix"]["rows"], report["matrix"]["cols"]) == (15, 30)
    assert report["inputs"]["map_source"] == "sampled"
    assert report["inputs"]["seed"] == 3
    assert len(report["map"]["coords"]) == 5


@pytest.mark.parametrize("complex_name", ["k4", "cycle6", "tree7"])
def test_planar_graphs_vanish(tmp_path, complex_name):
    code, report = obstruction(tmp_path, complex_name, 2, 2, 5)
    assert code == 0
    assert report["verdict"] == "Vanishes"
    assert len(report["certificate"]["x"]) == report["matrix"]["cols"]


def test_vanishing_certificate_rechecks(tmp_path):
    _, report = obstruction(tmp_path, "k4", 2, 2, 7)
    K = load_complex(COMPLEX_DIR / "k4.json")
    f = load_map(write_json(tmp_path / "map.json", report["map"]), K)
    top, codim = orbit_reps(K, 2, 2), orbit_reps(K, 2, 1)
    A = coboundary_matrix(K, 2, 2, top, codim)
    v = to_vector(intersection_cocycle(K, 2, 2, f, reps=top), top).values
    assert verify(A, report["certificate"]["x"], v)


def test_three_points_on_a_line(tmp_path):
    code, report = obstruction(tmp_path, "sigma4", 3, 1, 2)
    assert code == 0
    assert report["verdict"] == "NonVanishing"
    assert (report["counts"]["top_orbits"], report["counts"]["codim_orbits"]) == (25, 30)


def test_sigma6_skeleton_in_r4(tmp_path):
    code, report = obstruction(tmp_path, "sigma6_2skeleton", 2, 4, 1)
    assert code == 0
    assert report["verdict"] == "NonVanishing"
    assert (report["matrix"]["rows"], report["matrix"]["cols"]) == (70, 210)
    assert report["flags"]["equidimensional"]
    assert report["flags"]["codimension"] == 2
    assert not report["flags"]["map_existence_decided"]


def test_reports_are_reproducible(tmp_path):
    obstruction(tmp_path, "k4", 2, 2, 11, name="a.json")
    obstruction(tmp_path, "k4", 2, 2, 11, name="b.json")
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
    table = pd.read_csv(tmp_path / "a.csv")
    assert len(table) == 3


def test_timing_flag(tmp_path):
    _, report = obstruction(tmp_path, "k4", 2, 2, 0, "--timing")
    assert report["timing_seconds"] >= 0
    _, plain = obstruction(tmp_path, "k4", 2, 2, 0, name="plain.json")
    assert "timing_seconds" not in plain


@pytest.mark.parametrize("complex_name, r, d", [("sigma2", 3, 2), ("sigma4", 2, 1)])
def test_precondition_refused(tmp_path, capsys, complex_name, r, d):
    code, report = obstruction(tmp_path, complex_name, r, d)
    assert code == 2
    assert report is None
    assert "d(r-1)" in capsys.readouterr().out


def test_resource_caps(tmp_path):
    code, _ = obstruction(tmp_path, "k5", 2, 2, 0, "--max-orbits", "3")
    assert code == 3
    code, _ = obstruction(tmp_path, "k5", 2, 2, 0, "--max-matrix-dim", "10")
    assert code == 3
    code, _ = run(tmp_path, "prismatic", "--r", "4", "--k", "1", "--seed", "0")
    assert code == 3


def test_bad_inputs(tmp_path):
    code, _ = run(tmp_path, "obstruction", "--complex", str(tmp_path / "missing.json"),
                  "--r", "2", "--d", "2", "--seed", "0")
    assert code == 4

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    code, _ = run(tmp_path, "obstruction", "--complex", str(broken), "--r", "2", "--d", "2", "--seed", "0")
    assert code == 4

    k4 = str(COMPLEX_DIR / "k4.json")
    shared = write_json(tmp_path / "shared.json", {"d": 2, "coords": {"0": [0, 0], "1": [0, 0], "2": [1, 0], "3": [0, 1]}})
    code, _ = obstruction(tmp_path, "k4", 2, 2, 0, "--map", shared)
    assert code == 4

    flat = write_json(tmp_path / "flat.json", {"d": 3, "coords": {str(v): [v, 0, 0] for v in range(4)}})
    code, _ = run(tmp_path, "obstruction", "--complex", k4, "--r", "2", "--d", "2", "--seed", "0", "--map", flat)
    assert code == 4


@pytest.mark.parametrize("r, d", [(1, 2), (0, 2), (2, 0)])
def test_out_of_range_parameters(tmp_path, capsys, r, d):
    code, report = obstruction(tmp_path, "k4", r, d)
    assert code == 4
    assert report is None
    assert "must be at least" in capsys.readouterr().out


def test_malformed_map_and_heights(tmp_path):
    k4 = str(COMPLEX_DIR / "k4.json")
    coords = {"0": [0, 0], "1": [4, 1], "2": [1, 3], "3": [5, 5]}
    for i, d in enumerate(["two", 1.5, True, 0, None]):
        bad = write_json(tmp_path / f"d{i}.json", {"d": d, "coords": coords})
        code, _ = obstruction(tmp_path, "k4", 2, 2, 0, "--map", bad)
        assert code == 4
    code, _ = run(tmp_path, "tverberg-scan", "--complex", k4, "--r", "1",
                  "--map", write_json(tmp_path / "ok.json", {"d": 2, "coords": coords}))
    assert code == 4

    for i, heights in enumerate([[["1/4"], ["3/4"]], {"1,0": "1/4", "2,0": ["3/4"], "1,1": ["2/3"], "2,1": ["1/5"]}]):
        path = write_json(tmp_path / f"h{i}.json", {"r": 2, "k": 1, "heights": heights})
        code, _ = run(tmp_path, "prismatic", "--r", "2", "--k", "1", "--seed", "0", "--mode", "signcheck",
                      "--heights", path)
        assert code == 4


def test_degenerate_user_map(tmp_path, capsys):
    collinear = write_json(tmp_path / "m.json", {"d": 2, "coords": {"0": [0, 0], "1": [2, 0], "2": [1, 0], "3": [0, 5]}})
    code, report = obstruction(tmp_path, "k4", 2, 2, 0, "--map", collinear)
    assert code == 4
    assert report is None
    assert "Error:" in capsys.readouterr().out


def test_user_map_is_accepted(tmp_path):
    square = write_json(tmp_path / "m.json", {"d": 2, "coords": {"0": [0, 0], "1": [4, 1], "2": ["1/2", 3], "3": [5, 5]}})
    code, report = obstruction(tmp_path, "k4", 2, 2, 0, "--map", square)
    assert code == 0
    assert report["inputs"]["map_source"] == "file"
    assert report["verdict"] == "Vanishes"


def test_tverberg_scan(tmp_path):
    K = write_json(tmp_path / "edges.json", {"vertex_count": 4, "maximal_simplices": [[0, 1], [2, 3]]})
    f = write_json(tmp_path / "cross.json", {"d": 2, "coords": {"0": [-1, 0], "1": [1, 0], "2": [0, -1], "3": [0, 1]}})
    code, report = run(tmp_path, "tverberg-scan", "--complex", K, "--map", f, "--r", "2")
    assert code == 0
    assert report["hit_count"] == 1
    assert report["census"] == {"{1,1}": 1}
    assert report["hits"][0]["faces"] == [[0, 1], [2, 3]]
    assert report["hits"][0]["sign"] == 1
    assert (tmp_path / "report.csv").exists()


def test_prismatic_obstruction(tmp_path):
    code, report = run(tmp_path, "prismatic", "--r", "2", "--k", "1", "--seed", "1")
    assert code == 0
    assert report["verdict"] == "NonVanishing"
    assert report["counts"] == {"top_orbits": 2, "codim_orbits": 2}
    assert not report["flags"]["k_at_least_3"]


def test_prismatic_scan(tmp_path):
    code, report = run(tmp_path, "prismatic", "--r", "3", "--k", "1", "--seed", "2", "--mode", "scan")
    assert code == 0
    assert list(report["census"]) == ["{2,2,2}"]
    assert report["hit_count"] >= 1
    assert report["only_type_m"]


def test_prismatic_signcheck(tmp_path):
    code, report = run(tmp_path, "prismatic", "--r", "3", "--k", "1", "--seed", "2", "--mode", "signcheck")
    assert code == 0
    assert report["populated_cells"] >= 1
    assert report["all_agree"]


def test_prismatic_heights_file(tmp_path):
    heights = write_json(tmp_path / "h.json", {
        "r": 2, "k": 1, "heights": {"1,0": ["1/4"], "2,0": ["3/4"], "1,1": ["2/3"], "2,1": ["1/5"]},
    })
    code, report = run(tmp_path, "prismatic", "--r", "2", "--k", "1", "--seed", "0", "--mode", "signcheck",
                       "--heights", heights)
    assert code == 0
    assert report["inputs"]["heights_source"] == "file"
    assert report["populated_cells"] == 1
    assert report["all_agree"]


def test_snf_command(tmp_path):
    matrix = write_json(tmp_path / "a.json", {"rows": 2, "cols": 2, "entries": [[0, 0, 2], [0, 1, 4], [1, 0, 6], [1, 1, 8]]})
    code, report = run(tmp_path, "snf", "--matrix", matrix)
    assert code == 0
    assert report["invariant_factors"] == [2, 4]
    assert report["rank"] == 2
    assert report["certificate_ok"]

    code, report = run(tmp_path, "snf", "--matrix", matrix, "--vector", write_json(tmp_path / "v.json", [1, 0]))
    assert report["verdict"] == "Obstructed"

    code, report = run(tmp_path, "snf", "--matrix", matrix, "--vector", write_json(tmp_path / "w.json", [2, 6]))
    assert report["verdict"] == "Solvable"
    assert report["certificate"]["x"] == [1, 0]


def test_missing_arguments_exit():
    with pytest.raises(SystemExit) as err:
        main(["obstruction", "--r", "2"])
    assert err.value.code == 2
