import json

import pytest

from gzk import cli
from gzk import config as cfgmod
from gzk.errors import ConfigError, MissingArtifact


def run(argv, capsys):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestConfig:
    def test_defaults_validate(self):
        for cmd in cfgmod.COMMANDS:
            params = cfgmod.defaults()
            params["experiment"]["command"] = cmd
            cfgmod.build(cmd, params)

    @pytest.mark.parametrize("name", sorted(cfgmod.EXPERIMENTS))
    def test_named_experiments_parse(self, name):
        assert cfgmod.load_config(name).command in cfgmod.COMMANDS

    def test_unknown_key_named(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[experiment]\ncommand = simulate\n[time]\ndtt = 0.1\n")
        with pytest.raises(ConfigError, match=r"time\.dtt"):
            cfgmod.load_config(p)

    @pytest.mark.parametrize(
        "body,key",
        [
            ("[grid]\npoints_x = 255\n", "grid.points_x"),
            ("[physics]\nk = 0\n", "physics.k"),
            ("[time]\ndt = -1\n", "time.dt"),
            ("[physics]\nsign = 2\n", "physics.sign"),
            ("[probe]\nscales = 1 3\n", "probe.scales"),
            ("[extra]\na = 1\n", "extra"),
        ],
    )
    def test_rejects(self, tmp_path, body, key):
        p = tmp_path / "c.ini"
        p.write_text("[experiment]\ncommand = simulate\n" + body)
        with pytest.raises(ConfigError, match=key):
            cfgmod.load_config(p)

    def test_rejects_major_version(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("[experiment]\ncommand = simulate\nversion = 2.0.0\n")
        with pytest.raises(ConfigError, match="experiment.version"):
            cfgmod.load_config(p)

    def test_malformed_document(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text("this is not ini\n")
        with pytest.raises(ConfigError):
            cfgmod.load_config(p)

    def test_lists(self):
        assert cfgmod.parse_value("gn", "degenerate_lambdas", "1, 0.5 0.25") == [1.0, 0.5, 0.25]


class TestCommands:
    def test_groundstate(self, tmp_path, capsys):
        code, out, _ = run(["groundstate", "--k", 2, "--out", tmp_path, "--write-profile", "yes"], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["mass_sq"] == pytest.approx(11.7009, abs=1e-4)
        assert json.loads((tmp_path / "groundstate.json").read_text()) == rep
        assert (tmp_path / "groundstate_k2.gzkf").exists()

    def test_simulate_line_soliton(self, tmp_path, capsys):
        argv = ["simulate", "--preset", "line-soliton", "--k", 1, "--c", 1, "--t-end", 1, "--nx", 256, "--ny", 8,
                "--dt", 0.002, "--out", tmp_path]
        code, out, _ = run(argv, capsys)
        assert code == 0
        lines = (tmp_path / "diagnostics.csv").read_text().splitlines()
        assert lines[0] == "t,mass,energy,grad_norm_sq,linf,X_t"
        m0, m1 = float(lines[1].split(",")[1]), float(lines[-1].split(",")[1])
        assert abs(m1 - m0) / m0 < 1e-8
        assert json.loads(out)["mass_drift"] < 1e-8

    def test_byte_deterministic(self, tmp_path, capsys):
        for sub in ("a", "b"):
            argv = ["simulate", "--k", 2, "--t-end", 0.05, "--nx", 64, "--ny", 8, "--lx", 12, "--dt", 0.005,
                    "--out", tmp_path / sub]
            assert run(argv, capsys)[0] == 0
        for name in ("diagnostics.csv", "run.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_malformed_config_exit_2_no_artifacts(self, tmp_path, capsys):
        out = tmp_path / "out"
        p = tmp_path / "bad.ini"
        p.write_text(f"[experiment]\ncommand = simulate\noutput = {out}\n[physics]\nk = two\n")
        code, _, err = run(["run", p], capsys)
        assert code == 2
        assert err.startswith("E:ConfigError:physics.k")
        assert len(err.strip().splitlines()) == 1
        assert not out.exists()

    def test_bad_flag(self, capsys):
        code, _, err = run(["simulate", "--nope", 1], capsys)
        assert code == 2 and err.startswith("E:ConfigError:")

    def test_numeric_failure_exit_3(self, tmp_path, capsys):
        argv = ["simulate", "--k", 4, "--amplitude", 30, "--t-end", 5, "--dt", 0.01, "--nx", 64, "--ny", 8,
                "--lx", 8, "--out", tmp_path]
        code, _, err = run(argv, capsys)
        assert code == 3 and err.startswith("E:BlowUp:")
        assert (tmp_path / "diagnostics.csv").exists()

    def test_no_convergence_exit_3(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text(f"[experiment]\ncommand = groundstate\noutput = {tmp_path}\n[groundstate]\npoints = 64\nmax_iter = 2\n")
        code, _, err = run(["run", p], capsys)
        assert code == 3 and err.startswith("E:NoConvergence:")

    def test_config_with_flag_override(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("[experiment]\ncommand = soliton-test\n[grid]\npoints_x = 1024\npoints_y = 4\n"
                     "[time]\ndt = 0.005\nt_end = 0.2\n")
        code, out, _ = run(["soliton-test", "--config", p, "--k", 2, "--out", tmp_path], capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["k"] == 2 and rep["residual"] < 1e-8 and rep["max_y_variation"] < 1e-10

    def test_command_mismatch(self, tmp_path, capsys):
        p = tmp_path / "c.ini"
        p.write_text("[experiment]\ncommand = groundstate\n")
        code, _, err = run(["simulate", "--config", p], capsys)
        assert code == 2 and "experiment.command" in err


class TestPlotData:
    def test_empty_dir(self, tmp_path):
        with pytest.raises(MissingArtifact):
            cli.emit_plotdata(tmp_path)

    def test_empty_dir_exit_4(self, tmp_path, capsys):
        code, _, err = run(["plotdata", tmp_path], capsys)
        assert code == 4 and err.startswith("E:MissingArtifact:")

    def test_threshold_columns(self, tmp_path, capsys):
        argv = ["thresholds", "--k", 3, "--norm-fraction", 0.1, "--t-end", 0.05, "--dt", 0.005, "--nx", 128,
                "--ny", 16, "--lx", 16, "--out", tmp_path]
        code, out, _ = run(argv, capsys)
        assert code == 0
        rep = json.loads(out)
        assert rep["verdict"] == "GlobalByTheorem" and rep["monitor"]["holds"]
        cli.emit_plotdata(tmp_path)
        lines = (tmp_path / "plot_X.csv").read_text().splitlines()
        assert lines[0] == "t,X_t,x0"
        assert all(float(r.split(",")[1]) < float(r.split(",")[2]) for r in lines[1:])

    def test_gn_columns(self, tmp_path, capsys):
        code, out, _ = run(["gn-verify", "--k", 2, "--trials", 5, "--out", tmp_path], capsys)
        assert code == 0 and json.loads(out)["violations"] == 0
        cli.emit_plotdata(tmp_path)
        lines = (tmp_path / "plot_degenerate_scan.csv").read_text().splitlines()
        assert lines[0] == "lambda,ratio" and len(lines) == 5

    def test_probe_columns(self, tmp_path, capsys):
        argv = ["probe-strichartz", "--trials", 1, "--scales", "1,2", "--nt", 32, "--out", tmp_path]
        assert run(argv, capsys)[0] == 0
        cli.emit_plotdata(tmp_path)
        lines = (tmp_path / "plot_probe.csv").read_text().splitlines()
        assert lines[0] == "N,max_ratio" and len(lines) == 3
