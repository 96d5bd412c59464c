"""Tests for the spdgeo command line."""

import csv
import io
import json
import math

import numpy as np
import pytest

from spdgeo.api.matrix_io import load_spd, read_matrix_file, save_matrix
from spdgeo.core.config import Settings
from spdgeo.core.errors import DomainError
from spdgeo.core.matcore import random_spd
from spdgeo.main import main


@pytest.fixture
def write(tmp_path):
    def _write(name, arr):
        path = tmp_path / name
        save_matrix(np.asarray(arr), path)
        return str(path)

    return _write


def last_error(stderr: str) -> dict:
    return json.loads(stderr.strip().splitlines()[-1])


class TestScalarCommands:
    def test_logarithmic_mean(self, capsys):
        assert main(["mean-eval", "--mean", "stolarsky:2", "--x", "1", "--y", "2.718281828459045"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(math.e - 1, rel=1e-15)

    def test_kernel_alias(self, capsys):
        assert main(["kernel-eval", "--kernel", "bures", "--x", "1", "--y", "3"]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(2.0)

    def test_round_trip_digits(self, capsys):
        main(["mean-eval", "--mean", "geometric", "--x", "2", "--y", "3"])
        assert float(capsys.readouterr().out) == math.sqrt(6)

    def test_negative_input_is_a_domain_error(self, capsys):
        assert main(["mean-eval", "--mean", "geometric", "--x", "-1", "--y", "2"]) == 3
        error = last_error(capsys.readouterr().err)
        assert error["error"] == "DomainError"
        assert error["exit_code"] == 3


class TestUsageErrors:
    def test_unknown_command(self, capsys):
        assert main(["frobnicate"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_bad_mean_spec(self, capsys):
        assert main(["mean-eval", "--mean", "median", "--x", "1", "--y", "2"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_missing_flag(self):
        assert main(["distance", "--family", "theta:2"]) == 2

    def test_zero_samples(self):
        assert main(["verify", "--samples", "0"]) == 2

    def test_verify_dimension_flag_validated(self, capsys):
        assert main(["verify", "--check", "skew_ordering", "--dim", "1"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_search_segments_validated(self, write, capsys):
        a = write("a.json", np.eye(2))
        assert main(["shortest", "--kernel", "geometric^2", "--a", a, "--b", a, "--segments", "1"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_all_checks_dimension_validated(self, capsys):
        assert main(["verify", "--dim", "1"]) == 2
        assert "usage" in capsys.readouterr().err

    def test_non_finite_theta(self, write):
        a = write("a.json", np.eye(2))
        assert main(["compare", "--a", a, "--b", a, "--thetas=nan", "--means", "geometric"]) == 2


class TestMatrixCommands:
    def test_distance_between_equal_points(self, write, capsys):
        identity = write("id2.json", np.eye(2))
        assert main(["distance", "--family", "theta:2", "--norm", "hs", "--a", identity, "--b", identity]) == 0
        assert capsys.readouterr().out.strip() == "0"

    def test_fisher_rao_distance(self, write, capsys):
        a, b = write("a.json", np.diag([1.0, 4.0])), write("b.json", np.eye(2))
        assert main(["distance", "--family", "fisher", "--a", a, "--b", b]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(math.log(4), rel=1e-14)

    def test_operator_norm_distance(self, write, capsys):
        a, b = write("a.json", np.diag([math.e, math.e**3])), write("b.json", np.eye(2))
        assert main(["distance", "--family", "theta:2", "--norm", "op", "--a", a, "--b", b]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(3.0, rel=1e-14)

    def test_geodesic_to_stdout(self, write, capsys):
        a, b = write("a.json", np.eye(2)), write("b.json", np.diag([1.0, 4.0]))
        assert main(["geodesic", "--family", "fisher", "--a", a, "--b", b, "--t", "0.5"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["n"] == 2
        assert payload["complex"] is False
        assert payload["data"][3][0] == pytest.approx(2.0)

    def test_geodesic_to_file(self, write, tmp_path):
        a, b = write("a.json", np.array([[1.0]])), write("b.json", np.array([[9.0]]))
        out = tmp_path / "mid.json"
        assert main(["geodesic", "--family", "theta:1", "--a", a, "--b", b, "--t", "0.5", "--out", str(out)]) == 0
        assert load_spd(out).data[0, 0].real == pytest.approx(4.0)

    def test_metric_eval(self, write, capsys):
        d = write("d.json", np.diag([1.0, 2.0]))
        h = write("h.json", np.eye(2))
        assert main(["metric-eval", "--kernel", "geometric^2", "--d", d, "--h", h, "--k", h]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(1.25)

    def test_metric_eval_accepts_indefinite_tangents(self, write, capsys):
        d = write("d.json", np.eye(2))
        h = write("h.json", np.diag([3.0, -4.0]))
        assert main(["metric-eval", "--kernel", "geometric^2", "--d", d, "--h", h, "--k", h]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(25.0)

    def test_length_of_straight_segment(self, write, capsys):
        a, b = write("a.json", np.diag([1.0, 2.0])), write("b.json", np.diag([4.0, 6.0]))
        assert main(["length", "--kernel", "stolarsky:0^0", "--path", a, b]) == 0
        assert float(capsys.readouterr().out) == pytest.approx(5.0, rel=1e-12)

    def test_indefinite_input(self, write, capsys):
        bad = write("bad.json", np.diag([1.0, -1.0]))
        good = write("good.json", np.eye(2))
        assert main(["distance", "--family", "theta:2", "--a", bad, "--b", good]) == 3
        assert last_error(capsys.readouterr().err)["eigenvalue"] == pytest.approx(-1.0)

    def test_missing_file(self, tmp_path, capsys):
        missing = str(tmp_path / "missing.json")
        assert main(["distance", "--family", "theta:2", "--a", missing, "--b", missing]) == 3
        assert last_error(capsys.readouterr().err)["path"] == missing

    def test_dimension_mismatch(self, write, capsys):
        a, b = write("a.json", np.eye(2)), write("b.json", np.eye(3))
        assert main(["distance", "--family", "theta:2", "--a", a, "--b", b]) == 3
        assert last_error(capsys.readouterr().err)["error"] == "DimensionMismatchError"

    def test_validation_error_from_loaded_data(self, write, monkeypatch, capsys):
        from spdgeo.api import commands
        from spdgeo.models.schemas import PathSearchConfig

        def malformed(path):
            return PathSearchConfig(segments=0)

        monkeypatch.setattr(commands, "load_spd", malformed)
        a = write("a.json", np.eye(2))
        assert main(["distance", "--family", "theta:2", "--a", a, "--b", a]) == 3
        error = last_error(capsys.readouterr().err)
        assert error["error"] == "DomainError"
        assert error["exit_code"] == 3


class TestSearchAndMeans:
    def test_shortest_with_dump(self, write, tmp_path, capsys):
        a, b = write("a.json", np.diag([1.5, 0.8])), write("b.json", np.diag([0.7, 1.2]))
        dump = tmp_path / "path.json"
        argv = ["shortest", "--kernel", "stolarsky:1^1", "--a", a, "--b", b,
                "--segments", "4", "--refinements", "3", "--iters", "100", "--dump", str(dump)]
        assert main(argv) == 0
        exact = 2 * np.linalg.norm(np.sqrt([1.5, 0.8]) - np.sqrt([0.7, 1.2]))
        assert float(capsys.readouterr().out) == pytest.approx(exact, rel=1e-3)
        nodes = json.loads(dump.read_text())
        assert len(nodes) == 33
        assert nodes[0]["data"][0][0] == 1.5

    def test_karcher(self, write, capsys):
        a, b = write("a.json", np.eye(2)), write("b.json", np.diag([4.0, 9.0]))
        assert main(["karcher", "--inputs", a, b]) == 0
        data = json.loads(capsys.readouterr().out)["data"]
        assert data[0][0] == pytest.approx(2.0)
        assert data[3][0] == pytest.approx(3.0)

    def test_alm3(self, write, capsys):
        files = [write(f"{v}.json", np.array([[v]])) for v in (1.0, 8.0, 64.0)]
        assert main(["alm3", "--inputs", *files]) == 0
        assert json.loads(capsys.readouterr().out)["data"][0][0] == pytest.approx(8.0, rel=1e-9)

    def test_alm3_needs_three_inputs(self, write):
        a = write("a.json", np.eye(2))
        assert main(["alm3", "--inputs", a, a]) == 2

    def test_compare_table(self, write, capsys):
        a = write("a.json", random_spd(2, 3, 0.5, complex_entries=False).data.real)
        b = write("b.json", random_spd(2, 4, 0.5, complex_entries=False).data.real)
        argv = ["compare", "--a", a, "--b", b, "--thetas=1,-1", "--means", "geometric,arithmetic",
                "--segments", "2", "--iters", "5"]
        assert main(argv) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["mean", "theta", "delta_M_theta", "delta_phi_theta", "relation"]
        assert [(row[0], row[1]) for row in rows[1:]] == [
            ("geometric", "1"), ("geometric", "-1"), ("arithmetic", "1"), ("arithmetic", "-1"),
        ]
        assert [row[4] for row in rows[1:]] == [">=", "<=", "<=", ">="]


class TestGen:
    def test_round_trip_is_bitwise(self, tmp_path):
        out = tmp_path / "m.json"
        assert main(["gen", "--n", "3", "--seed", "42", "--spread", "1", "--out", str(out)]) == 0
        np.testing.assert_array_equal(load_spd(out).data, random_spd(3, 42, 1.0).data)

    def test_real_output(self, tmp_path):
        out = tmp_path / "m.json"
        assert main(["gen", "--n", "2", "--seed", "1", "--real", "--out", str(out)]) == 0
        assert read_matrix_file(out).complex is False

    def test_stdout(self, capsys):
        assert main(["gen", "--n", "1", "--seed", "0", "--spread", "0"]) == 0
        assert json.loads(capsys.readouterr().out) == {"n": 1, "complex": False, "data": [[1.0, 0.0]]}


class TestVerify:
    def test_single_check(self, capsys):
        assert main(["verify", "--check", "ex4_7_table", "--seed", "7", "--dim", "3", "--samples", "2"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 1
        report = json.loads(lines[0])
        assert report["name"] == "ex4_7_table"
        assert report["pass"] is True

    def test_failing_check_exits_one(self, monkeypatch, capsys):
        from spdgeo.services.verify_service import VerificationService

        run_check = VerificationService.run_check

        def strict(self, spec):
            return run_check(self, spec.model_copy(update={"tolerances": {"wyd_constancy": -1.0}}))

        monkeypatch.setattr(VerificationService, "run_check", strict)
        assert main(["verify", "--check", "skew_ordering", "--dim", "2", "--samples", "1"]) == 1
        assert json.loads(capsys.readouterr().out)["pass"] is False

    def test_unknown_check(self, capsys):
        assert main(["verify", "--check", "no_such_check"]) == 2
        assert last_error(capsys.readouterr().err)["error"] == "UnknownCheckError"

    def test_list(self, capsys):
        assert main(["verify", "--list"]) == 0
        assert capsys.readouterr().out.splitlines()[0].startswith("lem1_1_tangent_split")


def test_matrix_file_validation(tmp_path):
    path = tmp_path / "short.json"
    path.write_text(json.dumps({"n": 2, "complex": False, "data": [[1.0, 0.0]]}))
    with pytest.raises(DomainError):
        read_matrix_file(path)


def test_settings_read_prefixed_environment(monkeypatch):
    monkeypatch.setenv("SPDGEO_CLUSTER_TOL", "1e-6")
    monkeypatch.setenv("SPDGEO_THREADS", "2")
    loaded = Settings()
    assert loaded.cluster_tol == 1e-6
    assert loaded.threads == 2
    assert not hasattr(loaded, "float_digits")
