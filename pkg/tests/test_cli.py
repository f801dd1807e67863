"""Command-line interface: exit codes, config precedence, artifact formats."""

import os

import numpy as np
import pytest

from blfem.cli import (
    EXIT_INVALID,
    EXIT_NUMERICAL,
    EXIT_OK,
    CliError,
    config_header_lines,
    main,
    merge_config,
    read_config_file,
)


def run_cli(args, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return main(args)


class TestConfigHandling:
    def test_file_parsing(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# comment\nepsilon = 1e-3\ndt-rule = fixed  # trailing\n\n")
        vals = read_config_file(cfg)
        assert vals == {"epsilon": "1e-3", "dt_rule": "fixed"}

    def test_bad_line_rejected(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("epsilon\n")
        with pytest.raises(CliError):
            read_config_file(cfg)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(CliError):
            read_config_file(tmp_path / "nope.cfg")

    def test_precedence_flags_over_file_over_defaults(self):
        defaults = {"epsilon": 1e-5, "n": 50, "scheme": "nfem"}
        merged = merge_config(defaults, {"epsilon": "1e-3", "n": "10"}, {"n": 20, "scheme": None})
        assert merged == {"epsilon": 1e-3, "n": 20, "scheme": "nfem"}

    def test_unknown_key_rejected(self):
        with pytest.raises(CliError):
            merge_config({"a": 1}, {"b": "2"}, {})

    def test_type_conversion_errors(self):
        with pytest.raises(CliError):
            merge_config({"n": 5}, {"n": "five"}, {})

    def test_header_lines_sorted(self):
        lines = config_header_lines({"b": 2, "a": 1})
        assert lines == ["a = 1", "b = 2"]


class TestMeshCommand:
    def test_mesh_1d(self, tmp_path, monkeypatch, capsys):
        code = run_cli(["mesh", "--dim", "1", "--n", "10", "-o", "m.txt"], tmp_path, monkeypatch)
        assert code == EXIT_OK
        text = (tmp_path / "m.txt").read_text()
        assert text.startswith("blfem-mesh v1 1 11 10 2")
        assert "# dim = 1" in text

    def test_mesh_2d_round_trip(self, tmp_path, monkeypatch):
        from blfem.mesh import read_mesh

        code = run_cli(
            ["mesh", "--dim", "2", "--boundary-nodes", "26", "-o", "m2.txt"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        mesh = read_mesh(tmp_path / "m2.txt")
        assert len(mesh.boundary_nodes) == 26

    def test_too_few_boundary_nodes(self, tmp_path, monkeypatch):
        code = run_cli(["mesh", "--dim", "2", "--boundary-nodes", "7"], tmp_path, monkeypatch)
        assert code == EXIT_INVALID


class TestSolveCommand:
    def test_basic_solve_and_report(self, tmp_path, monkeypatch, capsys):
        code = run_cli(
            ["solve", "--problem", "exact1d", "--epsilon", "1e-3", "--n", "16",
             "--dt", "0.1", "--T", "0.5", "--scheme", "nfem"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "# epsilon = 0.001" in out
        assert "rel_l2" in out
        assert "osc_index" in out

    def test_output_csv_schema(self, tmp_path, monkeypatch):
        code = run_cli(
            ["solve", "--problem", "exact1d", "--epsilon", "1e-3", "--n", "8",
             "--dt", "0.1", "--T", "0.5", "--scheme", "sfem", "-o", "row.csv",
             "--no-timing"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        lines = (tmp_path / "row.csv").read_text().splitlines()
        comments = [ln for ln in lines if ln.startswith("#")]
        data = [ln for ln in lines if not ln.startswith("#")]
        assert comments  # config echoed into the artifact
        assert data[0] == "scheme,epsilon,h,dofs,dt,T,rel_l2,h1_err,osc_index,runtime_s"
        fields = data[1].split(",")
        assert fields[0] == "sfem"
        assert fields[-1] == "0"  # timing suppressed

    def test_invalid_dt_exit_2(self, tmp_path, monkeypatch):
        code = run_cli(
            ["solve", "--problem", "exact1d", "--dt", "0.3", "--T", "1.0"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_INVALID

    def test_zero_problem_reports_undefined(self, tmp_path, monkeypatch, capsys):
        code = run_cli(
            ["solve", "--problem", "zero1d", "--epsilon", "1e-3", "--n", "8",
             "--dt", "0.1", "--T", "0.5", "--scheme", "sfem"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        assert "undefined" in capsys.readouterr().out

    def test_near_dependent_enrichment_exit_3(self, tmp_path, monkeypatch, capsys):
        # phi_m1 has full cutoff support; at eps = 1e-5 on a fine mesh its
        # two copies plus the hats become numerically dependent
        code = run_cli(
            ["solve", "--problem", "exact1d", "--epsilon", "1e-5", "--n", "50",
             "--dt", "0.1", "--T", "1.0", "--scheme", "nfem", "--kind", "phi_m1"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err

    def test_config_file_with_flag_override(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("epsilon = 1e-3\nn = 8\ndt = 0.1\nT = 0.5\nscheme = sfem\n")
        code = run_cli(
            ["solve", "--problem", "exact1d", "--config", str(cfg), "--n", "16"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        out = capsys.readouterr().out
        assert "# n = 16" in out  # flag wins
        assert "# epsilon = 0.001" in out  # file wins over default

    def test_dump_matrices_format(self, tmp_path, monkeypatch):
        code = run_cli(
            ["solve", "--problem", "exact1d", "--epsilon", "1e-3", "--n", "8",
             "--dt", "0.1", "--T", "0.5", "--scheme", "sfem", "--dump-matrices", "sys"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        lines = (tmp_path / "sys.mass").read_text().splitlines()
        i, j, v = lines[0].split()
        int(i), int(j), float(v)
        # reassemble and compare one entry against the closed form h/6
        entries = {(int(a), int(b)): float(c) for a, b, c in (ln.split() for ln in lines)}
        assert entries[(0, 1)] == pytest.approx(1.0 / 48.0)

    def test_dump_field(self, tmp_path, monkeypatch):
        code = run_cli(
            ["solve", "--problem", "exact1d", "--epsilon", "1e-3", "--n", "8",
             "--dt", "0.1", "--T", "0.5", "--scheme", "sfem", "--dump-field", "f.csv"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        lines = [ln for ln in (tmp_path / "f.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0] == "x,u"
        assert len(lines) == 1 + 33  # 4n + 1 samples


class TestConvergeCommand:
    def test_csv_rows_and_slopes(self, tmp_path, monkeypatch, capsys):
        code = run_cli(
            ["converge", "--dim", "1", "--epsilon", "1e-2", "--levels", "4,8,16",
             "--dt", "0.1", "--T", "0.5", "--schemes", "sfem,nfem", "--no-timing",
             "-o", "conv.csv"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        lines = (tmp_path / "conv.csv").read_text().splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert len(data) == 1 + 6  # header + 2 schemes x 3 levels
        assert any("slope[sfem]" in ln for ln in lines)
        assert any("slope[nfem]" in ln for ln in lines)

    def test_rerun_byte_identical(self, tmp_path, monkeypatch):
        args = ["converge", "--dim", "1", "--epsilon", "1e-2", "--levels", "4,8,16",
                "--dt", "0.1", "--T", "0.5", "--schemes", "sfem", "--no-timing",
                "-o", "conv.csv"]
        assert run_cli(args, tmp_path, monkeypatch) == EXIT_OK
        first = (tmp_path / "conv.csv").read_bytes()
        assert run_cli(args, tmp_path, monkeypatch) == EXIT_OK
        assert (tmp_path / "conv.csv").read_bytes() == first

    def test_too_few_levels(self, tmp_path, monkeypatch):
        code = run_cli(
            ["converge", "--dim", "1", "--levels", "4,8"], tmp_path, monkeypatch
        )
        assert code == EXIT_INVALID

    def test_bad_scheme_list(self, tmp_path, monkeypatch):
        code = run_cli(
            ["converge", "--dim", "1", "--levels", "4,8,16", "--schemes", "sfem,magic"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_INVALID


class TestCorrectorCommand:
    def test_profile_csv(self, tmp_path, monkeypatch):
        code = run_cli(
            ["corrector", "--epsilon", "1e-5", "--t", "1.0", "--points", "50",
             "-o", "p.csv"],
            tmp_path, monkeypatch,
        )
        assert code == EXIT_OK
        lines = [ln for ln in (tmp_path / "p.csv").read_text().splitlines()
                 if not ln.startswith("#")]
        assert lines[0] == "xi,phi0,phi0_tilde,phi_m1,phi_m1_lin"
        assert len(lines) == 51
        first = [float(tok) for tok in lines[1].split(",")]
        assert first[0] == 0.0
        assert all(abs(v) < 1e-12 for v in first[1:])  # all profiles vanish at xi = 0

    def test_profiles_agree_midrange(self, tmp_path, monkeypatch):
        run_cli(
            ["corrector", "--epsilon", "1e-6", "--t", "1.0", "--points", "200",
             "--xi-max", "0.25", "-o", "p.csv"],
            tmp_path, monkeypatch,
        )
        rows = [
            [float(tok) for tok in ln.split(",")]
            for ln in (tmp_path / "p.csv").read_text().splitlines()
            if not (ln.startswith("#") or ln.startswith("xi"))
        ]
        arr = np.array(rows)
        mid = (arr[:, 0] > 0.05) & (arr[:, 0] < 0.2)
        # the three cutoff-based profiles agree within 10% there
        assert np.max(np.abs(arr[mid, 1] - arr[mid, 3]) / arr[mid, 3]) < 0.10
        assert np.max(np.abs(arr[mid, 2] - arr[mid, 3]) / arr[mid, 3]) < 0.10

    def test_nonpositive_time_rejected(self, tmp_path, monkeypatch):
        code = run_cli(["corrector", "--t", "0.0"], tmp_path, monkeypatch)
        assert code == EXIT_INVALID

    def test_bad_sigma_rejected(self, tmp_path, monkeypatch):
        code = run_cli(["corrector", "--sigma", "0.7"], tmp_path, monkeypatch)
        assert code == EXIT_INVALID


class TestThreadCap:
    def test_blfem_threads_propagates(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BLFEM_THREADS", "2")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS"):
            monkeypatch.delenv(var, raising=False)
        run_cli(["mesh", "--dim", "1", "--n", "4", "-o", "m.txt"], tmp_path, monkeypatch)
        assert os.environ["OMP_NUM_THREADS"] == "2"
        assert os.environ["OPENBLAS_NUM_THREADS"] == "2"

    def test_invalid_thread_count(self, tmp_path, monkeypatch):
        monkeypatch.setenv("BLFEM_THREADS", "many")
        code = run_cli(["mesh", "--dim", "1", "--n", "4"], tmp_path, monkeypatch)
        assert code == EXIT_INVALID
