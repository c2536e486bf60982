import csv
import io
import json

import pytest

from cumord.cli import EXIT_INPUT, EXIT_INVARIANT, EXIT_NOT_ADMISSIBLE, EXIT_OK, RunConfig, main, run


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _rows(text):
    return list(csv.DictReader(io.StringIO(text)))


POISSON = ("--type", "poisson", "--lambda", "2")


class TestCommands:
    def test_classify_worked_pair(self, capsys):
        code, out, _ = _run(capsys, "classify", "--mu", "1", "--delta", "1", "--beta", "0", "--gamma", "1")
        assert code == EXIT_OK
        rec = dict(r for r in csv.reader(io.StringIO(out)))
        assert rec["admissible"] == "true"
        assert float(rec["norm_constant"]) == pytest.approx(0.5440581099642663, rel=1e-9)

    def test_classify_not_admissible(self, capsys):
        code, out, _ = _run(capsys, "classify", "--mu", "0", "--delta", "0", "--beta", "0", "--gamma", "-1")
        assert code == EXIT_NOT_ADMISSIBLE
        assert "q<0 on S" in out

    def test_pmf_json(self, capsys):
        code, out, _ = _run(capsys, "pmf", *POISSON, "--format", "json")
        assert code == EXIT_OK
        rec = json.loads(out)
        assert rec["p"][2] == pytest.approx(2 * 2.718281828459045**-2, rel=1e-12)

    def test_moments(self, capsys):
        code, out, _ = _run(capsys, "moments", *POISSON, "--R", "4")
        assert code == EXIT_OK
        rows = _rows(out)
        assert len(rows) == 5

    def test_polys(self, capsys):
        code, out, _ = _run(capsys, "polys", "--type", "binomial", "--N", "4", "--p", "0.5", "--coeffs")
        assert code == EXIT_OK and out.count("\n") > 1

    def test_spectrum(self, capsys):
        code, out, _ = _run(capsys, "spectrum", *POISSON, "--g", "x2")
        assert code == EXIT_OK
        rows = _rows(out)
        assert float(rows[1]["alpha_k"]) ** 2 + float(rows[2]["alpha_k"]) ** 2 == pytest.approx(58.0)

    def test_bounds_worked_example(self, capsys):
        code, out, _ = _run(capsys, "bounds", *POISSON, "--g", "x^2")
        assert code == EXIT_OK
        cells = {(r["m"], r["n"]): r for r in _rows(out)}
        assert float(cells[("0", "1")]["S"]) == pytest.approx(66.0, abs=1e-9)
        assert float(cells[("1", "0")]["S"]) == pytest.approx(50.0, abs=1e-9)
        assert float(cells[("1", "1")]["S"]) == pytest.approx(58.0, abs=1e-9)
        assert cells[("1", "1")]["equality_flag"] == "1"

    def test_byte_identical(self, capsys):
        a = _run(capsys, "bounds", *POISSON, "--g", "abs")[1]
        b = _run(capsys, "bounds", *POISSON, "--g", "abs")[1]
        assert a == b

    def test_output_file(self, capsys, tmp_path):
        path = tmp_path / "s.csv"
        code, out, _ = _run(capsys, "spectrum", *POISSON, "--g", "x", "-o", str(path))
        assert code == EXIT_OK and out == ""
        assert path.read_text().startswith("k,")


class TestConfig:
    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"type": "poisson", "params": {"lam": 3.0}, "g": "x", "m_max": 1, "n_max": 1}))
        code, out, _ = _run(capsys, "bounds", "--config", str(cfg), "--lambda", "2")
        assert code == EXIT_OK
        rows = _rows(out)
        assert len(rows) == 4
        assert float(rows[1]["S"]) == pytest.approx(2.0)  # lambda E (Delta x)^2 with lambda from the flag

    def test_run_directly(self):
        text, code = run(RunConfig("bounds", type="poisson", params={"lam": 2.0}, g="x2", m_max=1, n_max=1))
        assert code == EXIT_OK and text.startswith("m,n,S")


class TestErrors:
    @pytest.mark.parametrize(
        "argv",
        [
            ("bounds", *POISSON),
            ("bounds", *POISSON, "--g", "max(x-2, )"),
            ("bounds", "--mu", "1", *POISSON, "--g", "x"),
            ("classify", "--mu", "1"),
            ("nonsense",),
            ("bounds", *POISSON, "--g", "x", "--m-max", "-1"),
            ("verify", "--only", "nope"),
        ],
    )
    def test_input_errors(self, capsys, argv):
        assert _run(capsys, *argv)[0] == EXIT_INPUT

    def test_parse_error_reports_position(self, capsys):
        _, _, err = _run(capsys, "bounds", *POISSON, "--g", "max(x-2, )")
        assert "9" in err

    def test_class_gate(self, capsys):
        argv = ["bounds", "--type", "discrete_student", "--z1", "1+1i", "--z2", "1-1i", "--w1", "11+1i", "--w2", "11-1i", "--g", "x"]
        code, _, err = _run(capsys, *argv)
        assert code == EXIT_INPUT and "class C" in err

    def test_not_admissible_bounds(self, capsys):
        code, _, _ = _run(capsys, "bounds", "--mu", "0", "--delta", "0", "--beta", "0", "--gamma", "-1", "--g", "x")
        assert code == EXIT_NOT_ADMISSIBLE


class TestVerifyAndSweep:
    def test_verify_subset(self, capsys):
        code, out, err = _run(capsys, "verify", "--only", "classification,moments")
        assert code == EXIT_OK
        suites = {r["suite"] for r in _rows(out)}
        assert suites == {"classification", "moments"}
        assert "0 failures" in err

    def test_verify_model_file(self, capsys, tmp_path):
        path = tmp_path / "models.json"
        path.write_text(json.dumps({"pois3": {"type": "poisson", "params": {"lambda": 3}}}))
        code, out, _ = _run(capsys, "verify", "--only", "orthogonality", "--model-file", str(path))
        assert code == EXIT_OK
        assert {r["model"] for r in _rows(out)} == {"pois3"}

    def test_verify_reports_invariant_failure(self, capsys, monkeypatch):
        import cumord.cli as cli
        from cumord.suites import Check, SuiteRun

        bad = Check("x", "m", "c", 1.0, 0.0, False, "")
        monkeypatch.setattr(cli, "run_suites", lambda *a: SuiteRun([bad], 0.0))
        assert _run(capsys, "verify")[0] == EXIT_INVARIANT

    def test_sweep(self, capsys):
        code, out, _ = _run(capsys, "sweep", "--type", "poisson", "--lambda", "1", "--g", "x2", "--param", "lambda", "--values", "1,2,-1", "--m-max", "1", "--n-max", "1")
        assert code == EXIT_OK
        rows = _rows(out)
        assert {r["lambda"] for r in rows} == {"1", "2", "-1"}
        bad = [r for r in rows if r["lambda"] == "-1"]
        assert len(bad) == 1 and bad[0]["status"] != "ok"
        s11 = [r for r in rows if r["lambda"] == "2" and r["m"] == "1" and r["n"] == "1"][0]
        assert float(s11["S"]) == pytest.approx(58.0)

    def test_sweep_parallel_matches_serial(self, capsys):
        base = ["sweep", "--type", "binomial", "--N", "4", "--p", "0.5", "--g", "abs", "--param", "p", "--values", "0.2,0.5,0.7"]
        serial = _run(capsys, *base)[1]
        parallel = _run(capsys, *base, "--jobs", "2")[1]
        assert serial == parallel
