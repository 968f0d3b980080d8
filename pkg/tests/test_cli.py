import csv
import io
import json
import math

import pytest

from thermofock.cli import (
    EXIT_CONFIG,
    EXIT_FAIL,
    EXIT_OK,
    ConfigError,
    build_parser,
    main,
    parse_grid,
    parse_sweep,
    read_config_file,
    resolve_config,
)


def rows_of(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def run(capsys, argv, environ=None):
    code = main(argv, environ=environ or {})
    out = capsys.readouterr()
    return code, out.out, out.err


class TestThermal:
    def test_free_sweep(self, capsys):
        code, out, _ = run(capsys, ["thermal", "--kappa-abs", "0", "--beta-sweep", "1:2:2"])
        assert code == EXIT_OK
        rows = rows_of(out)
        assert [float(r["beta"]) for r in rows] == [1.0, 2.0]
        for r in rows:
            assert float(r["lambda"]) == pytest.approx(math.exp(-float(r["beta"])), rel=1e-15)

    def test_reference_row(self, capsys):
        _, out, _ = run(capsys, ["thermal", "--kappa-abs", "0.25", "--beta", "1"])
        (row,) = rows_of(out)
        assert float(row["Z"]) == pytest.approx(1.8456, abs=1e-4)
        assert float(row["internal_energy"]) == pytest.approx(0.5618, abs=1e-4)
        assert float(row["sum_rule_residual"]) <= 1e-10
        assert row["error"] == ""

    def test_values_round_trip(self, capsys):
        from thermofock.cli import RunConfig, thermal_row
        _, out, _ = run(capsys, ["thermal", "--kappa-abs", "0.3", "--kappa-arg", "0.7", "--beta", "0.9"])
        (row,) = rows_of(out)
        want = thermal_row(RunConfig(kappa_abs=0.3, kappa_arg=0.7), 0.9)
        for key in ("Z", "entropy", "E_im", "term_raise"):
            assert float(row[key]) == want[key]

    def test_unstable_point_gives_error_rows(self, capsys):
        code, out, _ = run(capsys, ["thermal", "--kappa-abs", "0.51", "--beta-sweep", "0.5:1:2"])
        assert code == EXIT_FAIL
        rows = rows_of(out)
        assert len(rows) == 2
        assert all("Unstable" in r["error"] and r["Z"] == "" for r in rows)

    def test_json_embeds_provenance(self, capsys):
        _, out, _ = run(capsys, ["thermal", "--format", "json", "--tolerance", "support=1e-9"])
        doc = json.loads(out)
        assert doc["config"]["kappa_abs"] == 0.25
        assert doc["tolerances"]["support"] == 1e-9
        assert len(doc["rows"]) == 1

    def test_threads_do_not_change_output(self, capsys):
        argv = ["thermal", "--beta-sweep", "0.2:4:9", "--kappa-arg", "1.0"]
        _, one, _ = run(capsys, argv + ["--threads", "1"])
        _, four, _ = run(capsys, argv + ["--threads", "4"])
        assert one == four


class TestConfig:
    def test_precedence(self, tmp_path, capsys):
        env_file = tmp_path / "env.cfg"
        env_file.write_text("omega = 2.0\nkappa_abs = 0.1\nbeta = 0.5\n")
        cfg_file = tmp_path / "run.cfg"
        cfg_file.write_text("# comment\nkappa_abs = 0.2  # trailing\ntolerance.support = 1e-9\n")
        args = build_parser().parse_args(["thermal", "--config", str(cfg_file), "--beta", "3"])
        cfg = resolve_config(args, {"THERMOFOCK_CONFIG": str(env_file)})
        assert (cfg.omega, cfg.kappa_abs, cfg.beta) == (2.0, 0.2, 3.0)
        assert cfg.tolerance_profile().support == 1e-9

    def test_flag_sweep_replaces_file_beta(self, tmp_path):
        f = tmp_path / "a.cfg"
        f.write_text("beta = 0.5\n")
        args = build_parser().parse_args(["thermal", "--config", str(f), "--beta-sweep", "1:3:3"])
        assert resolve_config(args, {}).betas() == [1.0, 2.0, 3.0]

    @pytest.mark.parametrize("text", ["nonsense = 1\n", "beta\n", "tolerance.bogus = 1\n", "beta = x\n"])
    def test_bad_files(self, tmp_path, text):
        f = tmp_path / "bad.cfg"
        f.write_text(text)
        with pytest.raises(ConfigError):
            read_config_file(f)

    @pytest.mark.parametrize("argv", [
        ["thermal", "--beta-sweep", "2:1:3"],
        ["thermal", "--beta-sweep", "1:2:0"],
        ["thermal", "--grid=1:-1:0.1"],
        ["thermal", "--frame", "0,0"],
        ["thermal", "--max-cutoff", "4"],
        ["thermal", "--omega", "nan"],
        ["thermal", "--config", "/nonexistent/file"],
        ["thermal", "--out", "/nonexistent/dir/out.csv"],
        ["thermal", "--tolerance", "support"],
    ])
    def test_configuration_errors_exit_two(self, capsys, argv):
        code, _, err = run(capsys, argv)
        assert code == EXIT_CONFIG
        assert "configuration error" in err

    def test_parsers(self):
        assert parse_sweep("0.5:1.5:3") == (0.5, 1.5, 3)
        assert parse_grid("-1:1:0.5") == (-1.0, 1.0, 0.5)
        with pytest.raises(ConfigError):
            parse_grid("-1:1:0.3")


class TestState:
    def test_json_export(self, capsys, tmp_path):
        out = tmp_path / "s.json"
        code, _, _ = run(capsys, ["state", "--construction", "bogoliubov-closed", "--kappa-abs", "0.1",
                                  "--kappa-arg", "1", "--format", "json", "--out", str(out)])
        assert code == EXIT_OK
        doc = json.loads(out.read_text())
        (meta,) = doc["states"]
        assert meta["gibbs_trace_distance"] <= 1e-9
        n = meta["cutoff"]
        assert len(doc["rows"]) == 2 * n * n

    def test_free_construction_needs_zero_kappa(self, capsys):
        code, out, _ = run(capsys, ["state", "--construction", "free"])
        assert code == EXIT_FAIL
        assert "requires kappa = 0" in out

    def test_fixed_cutoff_too_small(self, capsys):
        code, out, _ = run(capsys, ["state", "--cutoff", "12", "--kappa-abs", "0.3"])
        assert code == EXIT_FAIL
        assert "CutoffNotConverged" in out


class TestPhaseSpace:
    def test_free_grid(self, capsys, tmp_path):
        code, _, _ = run(capsys, ["phase-space", "--kappa-abs", "0", "--beta", "2", "--grid=-2:2:0.5",
                                  "--out", str(tmp_path / "ps")])
        assert code == EXIT_OK
        wig = rows_of((tmp_path / "ps" / "wigner.csv").read_text())
        origin = next(r for r in wig if float(r["q"]) == 0 and float(r["p"]) == 0)
        assert float(origin["W"]) == pytest.approx(math.tanh(1.0) / math.pi, rel=1e-14)
        by_point = {(float(r["q"]), float(r["p"])): float(r["W"]) for r in wig}
        assert by_point[(1.5, 0.5)] == pytest.approx(by_point[(0.5, 1.5)], rel=1e-14)

    def test_reference_point_routes(self, capsys, tmp_path):
        code, _, _ = run(capsys, ["phase-space", "--grid=-5:5:0.25", "--out", str(tmp_path / "ps")])
        assert code == EXIT_OK
        tomo = rows_of((tmp_path / "ps" / "tomogram.csv").read_text())
        assert len(tomo) == 3 * 41
        assert max(float(r["dev_fock_radon"]) for r in tomo) <= 1e-4
        assert all(r["abs_dev_candidate_fock"] != "" for r in tomo)

    def test_json_metadata(self, capsys):
        code, out, _ = run(capsys, ["phase-space", "--grid=-1:1:0.5", "--format", "json",
                                    "--frame", "1,0"])
        assert code == EXIT_OK
        doc = json.loads(out)
        meta = doc["grids"][0]["metadata"]
        assert meta["errors"] == [] and "displaced-parity" in meta["convention"]
        assert len(doc["grids"][0]["wigner"]) == 25

    def test_deterministic_across_threads(self, capsys, tmp_path):
        argv = ["phase-space", "--grid=-3:3:0.5", "--kappa-abs", "0.3", "--kappa-arg", "2"]
        for t in ("1", "3"):
            run(capsys, argv + ["--threads", t, "--out", str(tmp_path / t)])
        for name in ("wigner.csv", "tomogram.csv"):
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "3" / name).read_bytes()


class TestVerifyCommand:
    def test_unstable_parameters(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        code, _, err = run(capsys, ["verify", "--format", "json", "--kappa-abs", "0.51", "--out", str(out)])
        assert code == EXIT_FAIL
        doc = json.loads(out.read_text())
        gate = [c for c in doc["checks"] if c["criterion"] == 0]
        assert gate and not gate[0]["passed"] and "Unstable" in json.dumps(gate[0]["detail"])
        assert "[FAIL] criterion 0" in err

    def test_tiny_cutoff_reports_residuals(self, capsys, tmp_path):
        out = tmp_path / "r.json"
        timings = tmp_path / "t.json"
        code, _, _ = run(capsys, ["verify", "--format", "json", "--kappa-abs", "0.1", "--max-cutoff", "12",
                                  "--out", str(out), "--timings", str(timings)])
        assert code == EXIT_FAIL
        doc = json.loads(out.read_text())
        conv = [c for c in doc["checks"] if c["name"] == "cutoff converged"]
        assert conv and all(isinstance(c["residual"], float) and not c["passed"] for c in conv)
        assert "total" in json.loads(timings.read_text())
        assert "wall" not in out.read_text()
