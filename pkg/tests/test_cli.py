import json
import time

import pytest

from alignfluct.cli import main
from alignfluct.montecarlo import report_from_json

CASE1_SMALL = """\
[alphabet]
letters = 0 1

[distribution]
0 = 0.2
1 = 0.8

[scoring]
matrix = identity
match = 1
mismatch = 0
gap_penalty = 6

[perturbation]
kind = single
from = 0
to = 1

[run]
n = 300
eps = 0.5
replicates = 4
seed = 12345
"""


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "case.ini"
    p.write_text(CASE1_SMALL)
    return str(p)


class TestEstimate:
    def test_json_output(self, cfg_path, capsys):
        assert main(["estimate", "--config", cfg_path]) == 0
        report = report_from_json(capsys.readouterr().out)
        assert len(report.x_values) == 4
        assert report.config["n"] == 300

    def test_seed_determinism_bytewise(self, cfg_path, tmp_path):
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            assert main(["estimate", "--config", cfg_path, "--seed", "7",
                         "--out", str(out)]) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_csv_columns(self, cfg_path, capsys):
        assert main(["estimate", "--config", cfg_path, "--format", "csv"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "replicate,seed,L_S,L_SmT,x_r,wall_ms"
        assert len(lines) == 5

    def test_env_seed_fallback(self, cfg_path, tmp_path, monkeypatch, capsys):
        # strip the seed from the config; the environment supplies it
        cfg = tmp_path / "noseed.ini"
        cfg.write_text(CASE1_SMALL.replace("seed = 12345\n", ""))
        monkeypatch.setenv("ALIGNFLUCT_SEED", "12345")
        assert main(["estimate", "--config", str(cfg)]) == 0
        with_env = capsys.readouterr().out
        assert main(["estimate", "--config", cfg_path]) == 0
        with_config = capsys.readouterr().out
        assert with_env == with_config


class TestConfigErrors:
    def test_unknown_key_named(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text(CASE1_SMALL + "\nbogus_key = 3\n")
        assert main(["estimate", "--config", str(p)]) == 2
        assert "bogus_key" in capsys.readouterr().err

    def test_missing_matrix_file_named(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text(CASE1_SMALL.replace(
            "matrix = identity\nmatch = 1\nmismatch = 0\ngap_penalty = 6",
            "matrix = /nonexistent/matrix.txt"))
        assert main(["estimate", "--config", str(p)]) == 2
        err = capsys.readouterr().err
        assert "scoring.matrix" in err and "/nonexistent/matrix.txt" in err

    def test_missing_config_file(self, capsys):
        assert main(["estimate", "--config", "/nope/really/not.ini"]) == 2

    def test_missing_required_key_named(self, tmp_path, capsys):
        p = tmp_path / "bad.ini"
        p.write_text(CASE1_SMALL.replace("gap_penalty = 6\n", ""))
        assert main(["estimate", "--config", str(p)]) == 2
        assert "gap_penalty" in capsys.readouterr().err

    def test_matrix_file_roundtrip(self, tmp_path, capsys):
        m = tmp_path / "mat.txt"
        m.write_text("0 1\n1 0 -6\n0 1 -6\n-6 -6 *\n")
        cfg = tmp_path / "file.ini"
        cfg.write_text(CASE1_SMALL.replace(
            "matrix = identity\nmatch = 1\nmismatch = 0\ngap_penalty = 6",
            f"matrix = {m}"))
        assert main(["estimate", "--config", str(cfg)]) == 0
        file_out = capsys.readouterr().out
        cfg2 = tmp_path / "builtin.ini"
        cfg2.write_text(CASE1_SMALL)
        assert main(["estimate", "--config", str(cfg2)]) == 0
        assert file_out == capsys.readouterr().out  # identical matrix, identical report


class TestPValue:
    def test_x_zero_is_inconclusive(self, cfg_path, capsys):
        assert main(["pvalue", "--config", cfg_path, "--x", "0"]) == 0
        captured = capsys.readouterr()
        assert "INCONCLUSIVE" in captured.err
        report = report_from_json(captured.out)
        assert report.inconclusive and report.bound == 1.0

    def test_n_one_is_config_error(self, tmp_path, capsys):
        p = tmp_path / "n1.ini"
        p.write_text(CASE1_SMALL.replace("n = 300", "n = 1"))
        assert main(["pvalue", "--config", str(p), "--x", "0.5"]) == 2
        assert "n" in capsys.readouterr().err

    def test_large_x_gives_small_bound_with_intermediates(self, cfg_path, capsys):
        import math
        assert main(["pvalue", "--config", cfg_path, "--x", "5.0"]) == 0
        captured = capsys.readouterr()
        rep = report_from_json(captured.out)
        assert not rep.inconclusive
        assert rep.bound < 1e-3
        # the reported intermediates must re-derive the reported bound
        want = math.exp(-rep.n * rep.delta**2 / rep.norm_sum**2)
        assert rep.bound == want
        assert rep.delta == rep.x - rep.threshold
        for field in ("c_n", "Delta", "|S|_delta", "|S-epsT|_delta"):
            assert field in captured.err

    def test_inline_estimate_when_x_missing(self, cfg_path, capsys):
        assert main(["pvalue", "--config", cfg_path]) == 0
        captured = capsys.readouterr()
        assert "estimated x" in captured.err
        report_from_json(captured.out)  # parses


class TestExpectedChangeCmd:
    def test_runs(self, cfg_path, capsys):
        assert main(["expected-change", "--config", cfg_path]) == 0
        rep = report_from_json(capsys.readouterr().out)
        assert rep.command == "expected-change"
        assert all(row["expected_change"] >= row["t_lower_bound"] for row in rep.rows)

    def test_size_cap_is_config_error(self, tmp_path, capsys):
        p = tmp_path / "big.ini"
        p.write_text(CASE1_SMALL.replace("n = 300", "n = 50000"))
        assert main(["expected-change", "--config", str(p)]) == 2


class TestVarscan:
    def test_runs(self, tmp_path, capsys):
        p = tmp_path / "scan.ini"
        p.write_text(CASE1_SMALL.replace("[run]", "[run]\nn_list = 100 200"))
        with pytest.warns(UserWarning):
            assert main(["varscan", "--config", str(p)]) == 0
        rep = report_from_json(capsys.readouterr().out)
        assert [row["n"] for row in rep.rows] == [100, 200]

    def test_missing_n_list(self, cfg_path, capsys):
        assert main(["varscan", "--config", cfg_path]) == 2
        assert "n_list" in capsys.readouterr().err


class TestSelfTest:
    def test_passes_quickly(self, capsys):
        t0 = time.perf_counter()
        assert main(["selftest"]) == 0
        elapsed = time.perf_counter() - t0
        out = capsys.readouterr().out
        assert "all 8 properties passed" in out
        assert elapsed < 60

    def test_fault_injection_names_property(self, capsys):
        assert main(["selftest", "--inject-fault", "blastz"]) == 1
        out = capsys.readouterr().out
        assert "FAIL  T_BLASTZ reproduction" in out
        assert "self-test FAILED: T_BLASTZ reproduction" in out


def test_runtime_error_exits_3(cfg_path, capsys):
    rc = main(["estimate", "--config", cfg_path,
               "--out", "/nonexistent-dir/report.json"])
    assert rc == 3
    assert "error" in capsys.readouterr().err


def test_reports_round_trip_via_cli(cfg_path, capsys):
    assert main(["estimate", "--config", cfg_path]) == 0
    text = capsys.readouterr().out
    report = report_from_json(text)
    from alignfluct.montecarlo import report_to_json
    assert report_to_json(report) == text
    assert json.loads(text)["command"] == "estimate"
