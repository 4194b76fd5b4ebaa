"""End-to-end command tests, run in-process through main()."""

import json

import numpy as np
import pytest

from gibbsfit.cli import main

BELL_JSON = [
    [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]],
    [[0.5, 0.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.0]],
]


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def read(path):
    return json.loads(path.read_text())


@pytest.fixture
def z_problem(tmp_path):
    return write(tmp_path / "z.json", {"n": 1, "expectations": [{"pauli": "Z0", "target": -0.6}]})


@pytest.fixture
def chain_problem(tmp_path):
    return write(
        tmp_path / "chain.json",
        {
            "n": 3,
            "marginals": [
                {"qubits": [0, 1], "rho": BELL_JSON},
                {"qubits": [1, 2], "rho": BELL_JSON},
            ],
        },
    )


def test_solve_single_qubit(tmp_path, z_problem):
    out = tmp_path / "res.json"
    assert main(["solve", z_problem, "--out", str(out)]) == 0
    doc = read(out)
    assert doc["status"] == "Converged"
    assert doc["theta"][0] == pytest.approx(-0.6931471805599453, abs=1e-6)
    assert doc["input_digest"].startswith("sha256:")
    assert doc["tool_version"]
    assert "trace" not in doc  # flag-gated


def test_solve_trace_flag(tmp_path, z_problem):
    out = tmp_path / "res.json"
    assert main(["solve", z_problem, "--trace", "--out", str(out)]) == 0
    doc = read(out)
    assert isinstance(doc["trace"], list) and doc["trace"][-1] <= 1e-8


def test_verify_accepts_then_rejects_tampering(tmp_path, z_problem):
    out = tmp_path / "res.json"
    main(["solve", z_problem, "--out", str(out)])
    assert main(["verify", z_problem, str(out), "--out", str(tmp_path / "v.json")]) == 0
    rep = read(tmp_path / "v.json")
    assert rep["ok"] and rep["max_residual"] <= 1e-8

    doc = read(out)
    doc["theta"] = [0.4]
    write(tmp_path / "bad.json", doc)
    assert main(["verify", z_problem, str(tmp_path / "bad.json")]) == 1


def test_verify_digest_mismatch(tmp_path, z_problem):
    out = tmp_path / "res.json"
    main(["solve", z_problem, "--out", str(out)])
    other = write(
        tmp_path / "other.json", {"n": 1, "expectations": [{"pauli": "Z0", "target": -0.5}]}
    )
    assert main(["verify", other, str(out)]) == 6


def test_check_exit_codes(tmp_path, chain_problem):
    # single marginal: compatible
    single = write(
        tmp_path / "single.json",
        {"n": 2, "marginals": [{"qubits": [0, 1], "rho": BELL_JSON}]},
    )
    assert main(["check", single, "--out", str(tmp_path / "c1.json")]) == 0

    # Bell chain passes pairwise overlap but trips the entropy bound
    assert main(["check", chain_problem, "--out", str(tmp_path / "c2.json")]) == 3
    rep = read(tmp_path / "c2.json")
    assert rep["verdict"] == "Compatible"
    v = rep["entropy_violations"][0]
    assert v["deficit_bits"] == pytest.approx(1.0, abs=1e-9)

    # mismatched overlap
    up = [[[0.75, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.25, 0.0]]]
    mixed = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]
    def embed_pair(a, b):
        # kron of two single-qubit states, as JSON
        m = np.kron(np.array([[c[0] + 1j * c[1] for c in row] for row in a]),
                    np.array([[c[0] + 1j * c[1] for c in row] for row in b]))
        return [[[z.real, z.imag] for z in row] for row in m]
    bad = write(
        tmp_path / "bad.json",
        {
            "n": 3,
            "marginals": [
                {"qubits": [0, 1], "rho": embed_pair(mixed, up)},
                {"qubits": [1, 2], "rho": embed_pair(mixed, mixed)},
            ],
        },
    )
    assert main(["check", bad, "--out", str(tmp_path / "c3.json")]) == 2
    assert read(tmp_path / "c3.json")["verdict"] == "LocallyIncompatible"


def test_solve_chain_boundary_exit(tmp_path, chain_problem):
    assert main(["solve", chain_problem, "--out", str(tmp_path / "r.json")]) == 4
    assert read(tmp_path / "r.json")["status"] == "BoundaryOrInfeasible"


def test_malformed_inputs_name_the_path(tmp_path, capsys):
    bad = write(tmp_path / "bad.json", {"n": 1, "expectations": [{"pauli": "Q0", "target": 0.3}]})
    assert main(["check", bad]) == 65
    assert "expectations[0].pauli" in capsys.readouterr().err

    bad2 = write(tmp_path / "bad2.json", {"n": 2, "marginals": [{"qubits": [0, 1], "rho": [[1]]}]})
    assert main(["check", bad2]) == 65
    assert "marginals[0].rho" in capsys.readouterr().err

    both = write(
        tmp_path / "both.json",
        {"n": 1, "marginals": [], "expectations": []},
    )
    assert main(["check", both]) == 65

    notjson = tmp_path / "nj.json"
    notjson.write_text("{broken")
    assert main(["check", str(notjson)]) == 65
    assert main(["check", str(tmp_path / "missing.json")]) == 65


def test_gen_solve_verify_chain(tmp_path):
    prob = tmp_path / "gen.json"
    res = tmp_path / "res.json"
    assert main(["gen", "--n", "4", "--subsets", "0,1;1,2;2,3", "--beta", "2", "--seed", "11", "--out", str(prob)]) == 0
    assert main(["check", str(prob)]) == 0
    assert main(["solve", str(prob), "--out", str(res)]) == 0
    assert main(["verify", str(prob), str(res)]) == 0
    doc = read(res)
    assert doc["local_terms"] is not None
    assert {tuple(t["qubits"]) for t in doc["local_terms"]} == {(0, 1), (1, 2), (2, 3)}


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["gen", "--n", "3", "--beta", "1.5", "--seed", "9", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_gen_beta_zero_is_maximally_mixed(tmp_path):
    out = tmp_path / "b0.json"
    assert main(["gen", "--n", "2", "--beta", "0", "--seed", "3", "--out", str(out)]) == 0
    doc = read(out)
    for marg in doc["marginals"]:
        rho = np.array([[c[0] + 1j * c[1] for c in row] for row in marg["rho"]])
        d = rho.shape[0]
        assert np.array_equal(rho, np.eye(d) / d)  # exact


def test_gen_rejects_bad_requests(tmp_path):
    assert main(["gen", "--n", "20", "--out", str(tmp_path / "x.json")]) == 64
    assert main(["gen", "--n", "3", "--subsets", "0,5", "--out", str(tmp_path / "x.json")]) == 64
    assert main(["gen", "--n", "3", "--subsets", "1,0", "--out", str(tmp_path / "x.json")]) == 64


def test_max_qubits_env_lowers_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("GIBBSFIT_MAX_QUBITS", "2")
    assert main(["gen", "--n", "3", "--out", str(tmp_path / "x.json")]) == 64
    prob = write(
        tmp_path / "p3.json",
        {"n": 3, "expectations": [{"pauli": "Z0", "target": 0.1}]},
    )
    assert main(["check", prob]) == 65
    monkeypatch.setenv("GIBBSFIT_MAX_QUBITS", "50")  # may not raise the cap
    assert main(["gen", "--n", "13", "--out", str(tmp_path / "x.json")]) == 64
    monkeypatch.setenv("GIBBSFIT_MAX_QUBITS", "banana")
    assert main(["check", prob]) == 64


def test_surface_two_observables(tmp_path):
    prob = write(
        tmp_path / "fig.json",
        {
            "n": 1,
            "expectations": [
                {"pauli": "Z0", "target": -0.6},
                {"pauli": "X0", "target": -0.3},
            ],
        },
    )
    out = tmp_path / "grid.csv"
    assert main(["surface", prob, "--range", "-3:3:61", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "theta,phi,psi"
    assert len(lines) == 1 + 61 * 61 + 1
    star_line = lines[-1]
    assert star_line.startswith("# theta_star = ")
    star = np.array([float(x) for x in star_line.split("=")[1].split(",")])
    rows = np.array([[float(x) for x in l.split(",")] for l in lines[1:-1]])
    k = rows[:, 2].argmin()
    spacing = 6.0 / 60
    # the grid's minimum cell contains the solver's minimizer
    assert np.abs(rows[k, :2] - star).max() <= spacing / 2 + 1e-12


def test_surface_one_observable(tmp_path, z_problem):
    out = tmp_path / "grid.csv"
    assert main(["surface", z_problem, "--range", "-3:3:61", "--out", str(out)]) == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "theta,psi"
    rows = np.array([[float(x) for x in l.split(",")] for l in lines[1:-1]])
    assert abs(rows[rows[:, 1].argmin(), 0] - (-0.6931471805599453)) <= 0.05 + 1e-12
    # convex 1-D profile: second differences nonnegative
    assert np.all(np.diff(rows[:, 1], 2) > -1e-12)


def test_surface_rejections(tmp_path, chain_problem):
    assert main(["surface", chain_problem]) == 64  # 27 observables after reduction
    dup = write(
        tmp_path / "dup.json",
        {"n": 1, "expectations": [{"pauli": "Z0", "target": 0.1}, {"pauli": "Z0", "target": 0.1}]},
    )
    assert main(["surface", dup]) == 65  # dependent observables
    single = write(
        tmp_path / "one.json", {"n": 1, "expectations": [{"pauli": "Z0", "target": 0.1}]}
    )
    assert main(["surface", single, "--range", "bad"]) == 64
    assert main(["surface", single, "--range", "3:-3:61"]) == 64
    assert main(["surface", single, "--range", "-1:1:1"]) == 64


def test_usage_errors(capsys):
    assert main([]) == 64
    assert main(["frobnicate"]) == 64
    assert main(["solve"]) == 64


def test_schema_round_trip(tmp_path):
    # parse(serialize(problem)) sees identical matrices
    prob = tmp_path / "gen.json"
    main(["gen", "--n", "3", "--seed", "4", "--out", str(prob)])
    doc = read(prob)
    from gibbsfit import fileio

    mp = fileio.parse_problem(doc)
    again = {
        "n": mp.n,
        "marginals": [
            {"qubits": list(q), "rho": fileio.matrix_to_json(r)} for q, r in mp.constraints
        ],
    }
    assert again == doc


def test_solve_expectation_problem_with_matrix_observable(tmp_path):
    z = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [-1.0, 0.0]]]
    prob = write(
        tmp_path / "m.json",
        {"n": 1, "expectations": [{"pauli": "X0", "target": 0.2}],
         "observables": [{"matrix": z, "target": -0.4}]},
    )
    out = tmp_path / "res.json"
    assert main(["solve", prob, "--out", str(out)]) == 0
    doc = read(out)
    assert doc["status"] == "Converged"
    assert max(abs(r) for r in doc["residuals"]) <= 1e-8
