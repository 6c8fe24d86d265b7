import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from photon_entrain.cli import ConfigError, follow_bias, format_seconds, main, parse_config


def run(tmp_path, capsys, command, body, *extra):
    path = tmp_path / "run.cfg"
    path.write_text(body)
    code = main([command, "--config", str(path), *extra])
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestConfig:
    def test_defaults(self):
        cfg = parse_config("")
        assert cfg.wavelength == 0.1
        assert cfg.sweep_reflectivity == (1.0, 0.9, 0.8, 0.7, 0.6)

    def test_comments_and_ranges(self):
        cfg = parse_config("phase = 0.5pi  # quarter turn\nsweep.phase = 0:2pi:5\nrun.histories = L, RL\n")
        assert cfg.phase == pytest.approx(np.pi / 2)
        assert cfg.sweep_phase == pytest.approx(tuple(np.linspace(0, 2 * np.pi, 5)))
        assert cfg.run_histories == ("L", "RL")

    @pytest.mark.parametrize(
        "text",
        ["wavelenght = 1", "wavelength = 1\nwavelength = 2", "wavelength", "bounces = two", "reflectivity = 2"],
    )
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestSimulate:
    def test_row_count(self, tmp_path, capsys):
        code, out, err = run(tmp_path, capsys, "simulate", "run.trajectories = 10\nrun.seed = 7\n")
        assert code == 0
        rows = table(out)
        assert len(rows) == 10
        assert list(rows[0]) == ["seed", "history", "I_L_1", "I_L_2", "I_L_3"]
        assert "follow bias" in err

    def test_unknown_key(self, tmp_path, capsys):
        code, out, err = run(tmp_path, capsys, "simulate", "wavelenght = 0.1\n")
        assert code == 1
        assert "wavelenght" in err
        assert out == ""

    def test_grid_cap_is_runtime_error(self, tmp_path, capsys):
        body = "wavelength = 0.05\ngrid.representation = full\nrun.trajectories = 1\n"
        code, _, err = run(tmp_path, capsys, "simulate", body)
        assert code == 2
        assert "cap" in err

    def test_follow_bias_summary(self, tmp_path, capsys):
        out_file = tmp_path / "traj.csv"
        body = f"run.trajectories = 20000\nrun.depth = 2\nrun.seed = 1\noutput.path = {out_file}\n"
        code, out, _ = run(tmp_path, capsys, "simulate", body)
        assert code == 0
        summary = table(out.split("\n", 1)[1])
        assert float(summary[0]["follow_probability"]) == pytest.approx(0.75, abs=0.015)
        assert len(table(out_file.read_text())) == 20000

    def test_follow_bias_helper(self):
        # newest-first labels: "RL" is L then R
        rows = follow_bias(["LL", "RL", "RR", "LR"], 2)
        assert rows == [(1, 0.5, 4)]

    def test_json(self, tmp_path, capsys):
        code, out, _ = run(tmp_path, capsys, "simulate", "run.trajectories = 3\n", "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert len(doc["trajectories"]) == 3


class TestEntrain:
    def test_rows(self, tmp_path, capsys):
        code, out, _ = run(tmp_path, capsys, "entrain", "sweep.reflectivity = 1.0, 0.8, 0.6\n")
        assert code == 0
        rows = table(out)
        assert [float(r["r"]) for r in rows] == [1.0, 0.8, 0.6]
        assert list(rows[0]) == ["r", "I_L", "I_LL", "I_LLL", "I_LLLL", "phi_band_halfwidth"]
        got = [float(rows[0][c]) for c in ("I_LL", "I_LLL", "I_LLLL")]
        np.testing.assert_allclose(got, [0.75, 5 / 6, 0.875], atol=2e-3)

    def test_empty_range(self, tmp_path, capsys):
        code, _, err = run(tmp_path, capsys, "entrain", "sweep.reflectivity =\n")
        assert code == 1
        assert "reflectivity" in err

    def test_json(self, tmp_path, capsys):
        body = "sweep.reflectivity = 1.0, 0.6\noutput.format = json\n"
        code, out, _ = run(tmp_path, capsys, "entrain", body)
        assert code == 0
        doc = json.loads(out)
        assert doc["axes"]["r"] == [1.0, 0.6]
        assert len(doc["values"]["I_LL"]) == 2


class TestSurface:
    def test_row_count_and_range(self, tmp_path, capsys):
        body = "sweep.wavelength = 0.5:50:20\nsweep.phase = 0:2pi:20\nrun.histories = L, LL, LLL\n"
        code, out, _ = run(tmp_path, capsys, "surface", body)
        assert code == 0
        rows = table(out)
        assert len(rows) == 1200
        values = np.array([float(r["intensity"]) for r in rows])
        assert np.all((values >= 0) & (values <= 1))
        washed = [float(r["intensity"]) for r in rows if r["history"] == "L" and float(r["lambda"]) == 0.5]
        assert len(washed) == 20
        assert max(abs(v - 0.5) for v in washed) < 0.01


class TestFringes:
    def _reports(self, err):
        return {r["history"]: r for r in table(err)}

    def test_eight_columns(self, tmp_path, capsys):
        code, out, err = run(tmp_path, capsys, "fringes", "wavelength = 1\n")
        assert code == 0
        header = out.split("\n", 1)[0].split(",")
        assert header[0] == "x"
        assert len(header) == 9
        assert {"rho_R", "rho_L", "rho_RLR"} <= set(header)
        assert len(self._reports(err)) == 8

    def test_period_halves(self, tmp_path, capsys):
        periods = []
        for n in (1, 2):
            code, _, err = run(tmp_path, capsys, "fringes", f"wavelength = 1\nbounces = {n}\nrun.histories = L\n")
            assert code == 0
            periods.append(float(self._reports(err)["L"]["period"]))
        assert periods[1] / periods[0] == pytest.approx(0.5, rel=0.03)

    def test_bad_history(self, tmp_path, capsys):
        code, _, err = run(tmp_path, capsys, "fringes", "run.histories = LXR\n")
        assert code == 1
        assert "X" in err


class TestDelay:
    def test_single_bounce(self, capsys):
        assert main(["delay", "--coherence-fs", "100", "--distance-m", "0.3", "--bounces", "1"]) == 0
        assert capsys.readouterr().out.strip() == "1.000e-13"

    def test_triple_bounce(self, capsys):
        assert main(["delay", "--distance-m", "0.3", "--bounces", "3"]) == 0
        assert capsys.readouterr().out.strip() == "2.001e-9"

    def test_negative_distance(self, capsys):
        assert main(["delay", "--distance-m", "-0.3"]) == 1

    def test_format(self):
        assert format_seconds(1e-13) == "1.000e-13"
        assert format_seconds(2.0014e-9) == "2.001e-9"


class TestDeterminism:
    def test_threads_byte_identical(self, tmp_path, capsys):
        body = "run.trajectories = 300\nrun.seed = 42\nrun.depth = 4\n"
        outputs = []
        for threads in ("1", "4", "0"):
            target = tmp_path / f"out{threads}.csv"
            code, _, _ = run(tmp_path, capsys, "simulate", body, "--threads", threads, "--output", str(target))
            assert code == 0
            outputs.append(target.read_bytes())
        assert outputs[0] == outputs[1] == outputs[2]
        assert b"\r" not in outputs[0]

    def test_surface_threads_byte_identical(self, tmp_path, capsys):
        body = "sweep.wavelength = 0.5, 5, 15\nsweep.phase = 0:2pi:8\n"
        a = run(tmp_path, capsys, "surface", body, "--threads", "1")[1]
        b = run(tmp_path, capsys, "surface", body, "--threads", "3")[1]
        assert a == b

    def test_seed_flag_overrides(self, tmp_path, capsys):
        body = "run.trajectories = 50\nrun.seed = 1\n"
        a = run(tmp_path, capsys, "simulate", body)[1]
        b = run(tmp_path, capsys, "simulate", body, "--seed", "2")[1]
        assert a != b


class TestRoundTrip:
    def test_csv(self, tmp_path, capsys):
        from photon_entrain import InterferometerConfig, StateSpec
        from photon_entrain.analysis import entrainment_curve

        body = "sweep.reflectivity = 0.9, 0.7\n"
        rows = table(run(tmp_path, capsys, "entrain", body)[1])
        direct = entrainment_curve(StateSpec(), InterferometerConfig(0.1), [0.9, 0.7])
        for row, ref in zip(rows, direct):
            assert float(row["I_LL"]) == ref.intensities[1]
            assert float(row["phi_band_halfwidth"]) == ref.phi_band_halfwidth

    def test_json(self, tmp_path, capsys):
        body = "sweep.wavelength = 0.7, 3.3\nsweep.phase = 0:2pi:8\noutput.format = json\n"
        doc = json.loads(run(tmp_path, capsys, "surface", body)[1])
        rows = table(run(tmp_path, capsys, "surface", body, "--format", "csv")[1])
        flat = [float(r["intensity"]) for r in rows if r["history"] == "LL"]
        assert flat == [v for row in doc["values"]["LL"] for v in row]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "photon_entrain", "delay", "--distance-m", "0.3"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert proc.stdout.strip() == "1.000e-13"
