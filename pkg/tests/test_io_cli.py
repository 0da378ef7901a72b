import json
import math
import os

import numpy as np
import pytest

from periwave.cli import main
from periwave.config import ConfigError, list_presets, load_config
from periwave.io import (
    canonical_json,
    config_hash,
    format_float,
    load_wave,
    save_field_csv,
    save_spectrum_csv,
    save_wave,
)
from periwave.spectral import PeriodicGrid, random_smooth_field

TWO_PI = 2.0 * math.pi


class TestSerialization:
    def test_float_formatting_roundtrip(self):
        rng = np.random.default_rng(0)
        for x in rng.uniform(-1e6, 1e6, size=50):
            assert float(format_float(x)) == x

    def test_canonical_json_is_sorted_and_deterministic(self):
        obj = {"b": 1.5, "a": [1, 2.0, None, True], "c": {"z": "s", "y": float("nan")}}
        text = canonical_json(obj)
        assert text == canonical_json(obj)
        assert text.index('"a"') < text.index('"b"') < text.index('"c"')

    def test_config_hash_stable(self):
        cfg = {"grid": {"L": TWO_PI, "N": 64}}
        assert config_hash(cfg) == config_hash(json.loads(json.dumps(cfg)))

    def test_field_csv_roundtrip(self, tmp_path):
        grid = PeriodicGrid(TWO_PI, 64)
        u = random_smooth_field(grid, seed=1)
        path = str(tmp_path / "field.csv")
        save_field_csv(u, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 0], grid.nodes)
        assert np.array_equal(data[:, 1], u.values)

    def test_spectrum_csv(self, tmp_path):
        grid = PeriodicGrid(TWO_PI, 64)
        u = random_smooth_field(grid, seed=2)
        path = str(tmp_path / "spec.csv")
        save_spectrum_csv(u, path)
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        assert np.array_equal(data[:, 1] + 1j * data[:, 2], u.spectrum)

    def test_wave_roundtrip(self, tmp_path, kdv_stable, ilw_stable, bbm_wave):
        for w in (kdv_stable, ilw_stable, bbm_wave):
            base = str(tmp_path / w.symbol.kind)
            save_wave(w, base)
            back = load_wave(base)
            assert np.array_equal(back.profile.values, w.profile.values)
            assert back.omega == w.omega
            assert back.A == w.A
            assert back.symbol.kind == w.symbol.kind
            assert back.variant == w.variant
            assert back.nonlinearity.name == w.nonlinearity.name


class TestConfig:
    def test_presets_exist(self):
        assert set(list_presets()) >= {
            "kdv-cnoidal",
            "gkdv-p",
            "bo",
            "ilw",
            "regularized-bbm-like",
        }

    @pytest.mark.parametrize("name", ["kdv-cnoidal", "gkdv-p", "bo", "ilw", "regularized-bbm-like"])
    def test_presets_validate(self, name):
        cfg = load_config(preset=name)
        assert cfg["grid"]["N"] % 2 == 0

    def test_unknown_preset(self):
        with pytest.raises(ConfigError):
            load_config(preset="nope")

    def test_schema_rejects_odd_N(self):
        with pytest.raises(ConfigError, match="grid"):
            load_config(preset="kdv-cnoidal", overrides=["grid.N=255"])

    def test_override_parsing(self):
        cfg = load_config(preset="kdv-cnoidal", overrides=["evolve.T=5.0", "solve.guess.k=0.5"])
        assert cfg["evolve"]["T"] == 5.0
        assert cfg["solve"]["guess"]["k"] == 0.5

    def test_bad_override(self):
        with pytest.raises(ConfigError):
            load_config(preset="kdv-cnoidal", overrides=["no-equals-sign"])


class TestCli:
    def run(self, *argv):
        return main(list(argv))

    def test_requires_some_input(self, capsys):
        assert self.run("solve") == 1

    def test_solve_from_config_file(self, tmp_path):
        cfg = {
            "equation": {
                "symbol": {"kind": "second_derivative"},
                "nonlinearity": {"kind": "power", "p": 1, "c": 1.0},
            },
            "grid": {"L": TWO_PI, "N": 128},
            "solve": {"guess": {"type": "cnoidal", "k": 0.9, "newton_polish": True}},
        }
        path = tmp_path / "run.json"
        path.write_text(json.dumps(cfg))
        out = str(tmp_path / "out")
        assert self.run("solve", "--config", str(path), "--out", out) == 0
        assert load_wave(os.path.join(out, "wave")).residual_norm < 1e-9

    def test_missing_config_file(self, tmp_path):
        assert self.run("solve", "--config", str(tmp_path / "nope.json")) == 1

    def test_worker_count_fallback(self, monkeypatch):
        from periwave.cli import _worker_count

        monkeypatch.setenv("PERIWAVE_THREADS", "abc")
        assert _worker_count() == 1
        monkeypatch.setenv("PERIWAVE_THREADS", "3")
        assert _worker_count() == 3

    def test_solve_writes_wave_and_report(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert self.run("solve", "--preset", "kdv-cnoidal", "--out", out) == 0
        report = json.loads(open(os.path.join(out, "solve_report.json")).read())
        assert report["residual_norm"] < 1e-9
        assert "config_sha256" in report and "tool_version" in report
        w = load_wave(os.path.join(out, "wave"))
        assert w.residual_norm < 1e-9

    def test_solve_invalid_config_exit_1(self, tmp_path):
        assert self.run(
            "solve", "--preset", "kdv-cnoidal", "--override", "grid.N=255",
            "--out", str(tmp_path / "x"),
        ) == 1

    def test_solve_failure_exit_2(self, tmp_path):
        code = self.run(
            "solve", "--preset", "bo", "--override", "solve.max_iter=1",
            "--out", str(tmp_path / "x"),
        )
        assert code == 2

    def test_certify_stable_preset(self, tmp_path):
        out = str(tmp_path / "run")
        assert self.run("certify", "--preset", "kdv-cnoidal", "--out", out) == 0
        cert = json.loads(open(os.path.join(out, "certify.json")).read())
        assert cert["conclusion"] == "orbitally_stable"
        assert cert["fired_criterion"] == "F_omega"
        assert cert["k_r"] == 0
        assert cert["c3"] > 0.0
        assert cert["mu_nu"] == [0.0, 1.0]

    def test_certify_ilw_preset(self, tmp_path):
        out = str(tmp_path / "run")
        assert self.run("certify", "--preset", "ilw", "--out", out) == 0
        cert = json.loads(open(os.path.join(out, "certify.json")).read())
        assert cert["conclusion"] == "orbitally_stable"
        spectrum = np.loadtxt(os.path.join(out, "spectrum.csv"), delimiter=",", skiprows=1)
        assert spectrum.shape == (256, 2)
        assert np.all(np.diff(spectrum[:, 1]) >= 0)

    @pytest.mark.parametrize(
        "preset", ["kdv-cnoidal", "gkdv-p", "bo", "ilw", "regularized-bbm-like"]
    )
    def test_every_preset_solves(self, tmp_path, preset):
        out = str(tmp_path / preset)
        assert self.run("solve", "--preset", preset, "--out", out) == 0
        w = load_wave(os.path.join(out, "wave"))
        assert w.residual_norm < 1e-8

    @pytest.mark.parametrize(
        "preset,expected_verdict",
        [("gkdv-p", "inconclusive"), ("bo", "orbitally_stable"), ("ilw", "orbitally_stable")],
    )
    def test_other_preset_sweeps(self, tmp_path, preset, expected_verdict):
        # gkdv-p rides the two-negative-direction cn branch: the framework is
        # silent there, but the curve form stays negative for all presets
        out = str(tmp_path / preset)
        code = self.run("sweep", "--preset", preset, "--out", out,
                        "--override", "sweep.count=3")
        assert code == 0
        sweep = json.loads(open(os.path.join(out, "sweep.json")).read())
        assert sweep["curve_criterion"] < 0
        assert all(m["verdict"] == expected_verdict for m in sweep["members"])

    def test_evolve_implicit_midpoint(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "evolve", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "grid.N=128", "--override", "solve.guess.k=0.9",
            "--override", "evolve.integrator=implicit_midpoint",
            "--override", "evolve.dt=0.0005", "--override", "evolve.T=0.2",
            "--override", "evolve.sample_interval=0.1",
            "--override", "evolve.amplitudes=[0.001]",
        )
        assert code == 0
        summary = json.loads(open(os.path.join(out, "evolve_summary.json")).read())
        assert summary["traces"][0]["drift_F"] < 1e-7

    def test_sweep_honors_thread_cap(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PERIWAVE_THREADS", "2")
        out = str(tmp_path / "run")
        code = self.run(
            "sweep", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "sweep.count=3", "--override", "grid.N=128",
            "--override", "sweep.start=0.46", "--override", "sweep.stop=0.6",
        )
        assert code == 0
        sweep = json.loads(open(os.path.join(out, "sweep.json")).read())
        assert [m["verdict"] for m in sweep["members"]] == ["orbitally_stable"] * 3

    def test_certify_ilw_solve_example_profile_even(self, tmp_path):
        # the documented k=0.5 construction: even profile, certifiable too
        out = str(tmp_path / "run")
        assert self.run(
            "solve", "--preset", "ilw", "--override", "solve.guess.k=0.5", "--out", out
        ) == 0
        w = load_wave(os.path.join(out, "wave"))
        vals = w.profile.values
        assert np.abs(vals[1:] - vals[:0:-1]).max() < 1e-12

    def test_certify_inconclusive_exit_3(self, tmp_path, gkdv2_wave):
        base = str(tmp_path / "cnwave")
        save_wave(gkdv2_wave, base)
        out = str(tmp_path / "run")
        code = self.run("certify", "--wave", base, "--preset", "gkdv-p", "--out", out)
        assert code == 3
        cert = json.loads(open(os.path.join(out, "certify.json")).read())
        assert cert["conclusion"] == "inconclusive"

    def test_certify_constant_state_exit_3(self, tmp_path):
        from periwave.spectral import DispersionSymbol
        from periwave.waves import Nonlinearity, constant_state

        grid = PeriodicGrid(TWO_PI, 64)
        w = constant_state(grid, 0.2, 1.5, DispersionSymbol.second_derivative(TWO_PI),
                           Nonlinearity.kdv())
        base = str(tmp_path / "flat")
        save_wave(w, base)
        out = str(tmp_path / "run")
        code = self.run(
            "certify", "--wave", base, "--preset", "kdv-cnoidal",
            "--override", "grid.N=64", "--out", out,
        )
        assert code == 3
        cert = json.loads(open(os.path.join(out, "certify.json")).read())
        assert cert["conclusion"] == "inconclusive"
        assert cert["h0"]["h0_pass"] is False

    def test_certify_reproducible_byte_identical(self, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        for out in (out1, out2):
            assert self.run("certify", "--preset", "kdv-cnoidal", "--out", out) == 0
        j1 = open(os.path.join(out1, "certify.json"), "rb").read()
        j2 = open(os.path.join(out2, "certify.json"), "rb").read()
        assert j1 == j2

    def test_sweep(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "sweep", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "sweep.count=4", "--override", "grid.N=128",
            "--override", "sweep.start=0.46", "--override", "sweep.stop=0.7",
        )
        assert code == 0
        sweep = json.loads(open(os.path.join(out, "sweep.json")).read())
        assert sweep["curve_criterion"] < 0
        assert len(sweep["members"]) == 4
        assert all(m["verdict"] == "orbitally_stable" for m in sweep["members"])
        # momentum increases along the branch
        Fs = [m["momentum"] for m in sweep["members"]]
        assert all(a < b for a, b in zip(Fs, Fs[1:]))
        lines = open(os.path.join(out, "family.csv")).read().strip().split("\n")
        assert lines[0] == "xi,omega,A,M,F,verdict"
        assert len(lines) == 5

    def test_single_point_sweep_degenerates_to_certify(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "sweep", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "sweep.count=1", "--override", "grid.N=128",
            "--override", "sweep.start=0.46", "--override", "sweep.stop=0.46",
        )
        assert code == 0
        sweep = json.loads(open(os.path.join(out, "sweep.json")).read())
        assert sweep["curve_criterion"] is None
        assert sweep["members"][0]["verdict"] == "orbitally_stable"

    def test_sweep_partial_exit_4(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "sweep", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "grid.N=128", "--override", "sweep.count=3",
            "--override", "sweep.start=0.46", "--override", "sweep.stop=-40",
        )
        assert code == 4

    def test_evolve_short(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "evolve", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "evolve.T=0.5", "--override", "evolve.sample_interval=0.1",
            "--override", "evolve.amplitudes=[0.0,0.001]",
        )
        assert code == 0
        summary = json.loads(open(os.path.join(out, "evolve_summary.json")).read())
        assert len(summary["traces"]) == 2
        zero_amp = summary["traces"][0]
        assert zero_amp["sup_distance"] < 1e-6
        pert = summary["traces"][1]
        assert pert["drift_M"] < 1e-12
        trace_file = os.path.join(out, pert["trace_file"])
        header = open(trace_file).readline().strip()
        assert header == "t,d_orbit,r_star,P,F,M,V"

    def test_evolve_blowup_exit_5(self, tmp_path):
        out = str(tmp_path / "run")
        code = self.run(
            "evolve", "--preset", "kdv-cnoidal", "--out", out,
            "--override", "grid.N=128",
            "--override", "evolve.dt=0.05", "--override", "evolve.T=5.0",
            "--override", "evolve.amplitudes=[50.0]",
            "--override", "evolve.dealias=false",
        )
        assert code == 5
        summary = json.loads(open(os.path.join(out, "evolve_summary.json")).read())
        assert summary["blowup_time"] > 0

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["--version"])
        assert info.value.code == 0
