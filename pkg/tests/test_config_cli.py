import json

import numpy as np
import pytest

from gfsim.cli import main
from gfsim.config import NOISE_PRESET, ConfigError, RunConfig
from gfsim.genfunc import GfSeries
from gfsim.moments import MomentSet


def base_config(**overrides):
    cfg = {
        "model": {"kind": "pairing", "levels": 2, "pairs": 1, "delta_e": 1.0, "g": 1.0},
        "time_grid": {"t_max": 0.5, "dt": 0.1},
        "shots": 200,
        "seed": 4,
        "trotter": {"policy": "fixed", "n_steps": 16},
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        RunConfig(base_config(bogus=1))


def test_nested_unknown_keys_rejected():
    cfg = base_config()
    cfg["model"]["flavor"] = "x"
    with pytest.raises(ConfigError):
        RunConfig(cfg)


def test_numeric_ranges_checked():
    cfg = base_config(shots=-5)
    with pytest.raises(ConfigError):
        RunConfig(cfg)
    cfg = base_config()
    cfg["model"]["pairs"] = 2.5
    with pytest.raises(ConfigError):
        RunConfig(cfg)


def test_schema_round_trip():
    cfg = RunConfig(base_config())
    again = RunConfig(cfg.resolved())
    assert again.resolved() == cfg.resolved()


def test_auto_time_grid():
    cfg = RunConfig(base_config(time_grid={"auto": True}))
    assert cfg.t_grid[0] == 0.0
    assert cfg.t_grid.size > 100


def test_hubbard_model_block():
    cfg = RunConfig(
        {
            "model": {"kind": "hubbard", "sites": 4, "hopping": 1.0, "onsite": 1.0},
            "time_grid": {"t_max": 0.2, "dt": 0.1},
        }
    )
    assert cfg.model.n_qubits == 8
    assert len(cfg.init) == 6


def test_cmd_gf_writes_series_and_manifest(tmp_path):
    rc = main(["gf", "--config", write_config(tmp_path, base_config()), "--out-dir", str(tmp_path)])
    assert rc == 0
    series = GfSeries.from_csv(tmp_path / "gf.csv")
    assert series.t.size == 6
    assert series.route == "sampled"
    manifest = json.loads((tmp_path / "gf_manifest.json").read_text())
    assert manifest["command"] == "gf"
    assert "gf.csv" in manifest["outputs"]


def test_cmd_gf_statevector_route_zero_errors(tmp_path):
    cfg = base_config(shots=0)
    rc = main(["gf", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    series = GfSeries.from_csv(tmp_path / "gf.csv")
    assert series.route == "statevector"
    assert np.all(series.re_err == 0.0)


def test_cmd_gf_exact_overlay_columns(tmp_path):
    cfg = base_config(overlay_exact=True)
    rc = main(["gf", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    series = GfSeries.from_csv(tmp_path / "gf.csv")
    assert "re_exact" in series.extra and "im_exact" in series.extra


def test_cmd_gf_deterministic_bytes(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out1)]) == 0
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out2)]) == 0
    assert (out1 / "gf.csv").read_bytes() == (out2 / "gf.csv").read_bytes()


def test_cmd_gf_rerun_from_manifest_identical(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out1 = tmp_path / "a"
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out1)]) == 0
    out2 = tmp_path / "b"
    assert main(["gf", "--config", str(out1 / "gf_manifest.json"), "--out-dir", str(out2)]) == 0
    assert (out1 / "gf.csv").read_bytes() == (out2 / "gf.csv").read_bytes()


def test_invalid_config_exit_code_2(tmp_path):
    path = write_config(tmp_path, base_config(bogus=True))
    assert main(["gf", "--config", path, "--out-dir", str(tmp_path)]) == 2


def test_runtime_failure_exit_code_1(tmp_path):
    cfg = base_config()
    path = write_config(tmp_path, cfg)
    rc = main(["texpand", "--config", path, "--moments", str(tmp_path / "missing.csv"), "--out-dir", str(tmp_path)])
    assert rc == 1


def test_missing_config_exit_code_2(tmp_path):
    assert main(["gf", "--out-dir", str(tmp_path)]) == 2


def test_cmd_moments_exact_route(tmp_path):
    cfg = base_config(moments={"route": "exact", "order": 8})
    rc = main(["moments", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    mom = MomentSet.from_csv(tmp_path / "moments.csv")
    assert mom.order == 8
    assert mom.values[1] == pytest.approx(2.0)


def test_cmd_moments_fourier_from_series_file(tmp_path):
    cfg = base_config(time_grid={"auto": True}, shots=0, moments={"route": "fourier", "order": 10})
    cfg_path = write_config(tmp_path, cfg)
    assert main(["moments", "--config", cfg_path, "--out-dir", str(tmp_path)]) == 0
    mom = MomentSet.from_csv(tmp_path / "moments.csv")
    assert mom.route == "fourier"
    assert mom.values[2] == pytest.approx(5.0, rel=1e-6)


def test_cmd_moments_fdm_route(tmp_path):
    cfg = base_config(
        time_grid={"t_max": 1.0, "dt": 0.00025},
        moments={"route": "fdm", "order": 6},
    )
    assert main(["moments", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)]) == 0
    mom = MomentSet.from_csv(tmp_path / "moments.csv")
    assert mom.route == "fdm"
    assert mom.values[2] == pytest.approx(5.0, rel=1e-4)


def test_cmd_texpand(tmp_path):
    cfg = base_config(moments={"route": "exact", "order": 12}, texpansion={"order": 10})
    rc = main(["texpand", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    report = (tmp_path / "pade_selection.txt").read_text()
    assert "chosen" in report
    lines = (tmp_path / "energy_curve.csv").read_text().splitlines()
    assert lines[3] == "tau,E,dEdtau"


def test_cmd_texpand_no_admissible_exit_3(tmp_path):
    # moments crafted so the derivative series is -1/(1-tau)^3: the only
    # order-3 candidate [0,3] then carries a real positive pole
    mom = MomentSet(np.array([1.0, 0.0, 1.0, -3.0, 15.0, -90.0]), np.zeros(6), route="exact")
    mom_path = tmp_path / "mom.csv"
    mom.to_csv(mom_path)
    cfg = base_config(texpansion={"order": 3})
    rc = main(
        ["texpand", "--config", write_config(tmp_path, cfg), "--moments", str(mom_path), "--out-dir", str(tmp_path)]
    )
    assert rc == 3


def test_cmd_krylov(tmp_path):
    cfg = base_config(krylov={"orders": [0, 1], "t_max": 2.0, "dt": 0.1})
    rc = main(["krylov", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    eig_lines = (tmp_path / "krylov_eigs.csv").read_text().splitlines()
    assert eig_lines[0] == "M,alpha,E,weight,retained_dim"
    assert len(eig_lines) == 4  # M=0: 1 row, M=1: 2 rows
    surv_lines = (tmp_path / "survival.csv").read_text().splitlines()
    assert surv_lines[0] == "t,P0_approx,P0_exact"
    # exact survival column present and starting at 1
    first = surv_lines[1].split(",")
    assert float(first[2]) == pytest.approx(1.0)


def test_cmd_noise_builtin_preset_smoke(tmp_path):
    # reduced-shot copy of the builtin preset
    cfg = json.loads(json.dumps(NOISE_PRESET))
    cfg["shots"] = 20000
    cfg["time_grid"] = {"t_max": 0.2, "dt": 0.05}
    rc = main(["noise", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    manifest = json.loads((tmp_path / "noise_manifest.json").read_text())
    assert manifest["rms_mitigated"] < manifest["rms_raw"]
    for name in ("gf_exact.csv", "gf_raw.csv", "gf_mitigated.csv"):
        assert (tmp_path / name).exists()
    raw = GfSeries.from_csv(tmp_path / "gf_raw.csv")
    assert raw.route == "noisy"
    mit = GfSeries.from_csv(tmp_path / "gf_mitigated.csv")
    assert mit.route == "mitigated"


def test_cmd_noise_off_equals_sampled(tmp_path):
    cfg = json.loads(json.dumps(NOISE_PRESET))
    cfg["shots"] = 5000
    cfg["time_grid"] = {"t_max": 0.1, "dt": 0.05}
    cfg["noise"] = {"readout": {"p01": 0.0, "p10": 0.0}, "p_dep": 0.0}
    rc = main(["noise", "--config", write_config(tmp_path, cfg), "--out-dir", str(tmp_path)])
    assert rc == 0
    raw = GfSeries.from_csv(tmp_path / "gf_raw.csv")
    mit = GfSeries.from_csv(tmp_path / "gf_mitigated.csv")
    assert np.abs(raw.re - mit.re).max() < 1e-9
    assert np.abs(raw.im - mit.im).max() < 1e-9


def test_seed_flag_overrides_config(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out1 = tmp_path / "s1"
    out2 = tmp_path / "s2"
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out1), "--seed", "99"]) == 0
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out2)]) == 0
    s1 = GfSeries.from_csv(out1 / "gf.csv")
    s2 = GfSeries.from_csv(out2 / "gf.csv")
    assert s1.seed == 99 and s2.seed == 4
    assert not np.array_equal(s1.re, s2.re)


def test_threads_flag_keeps_output_identical(tmp_path):
    cfg_path = write_config(tmp_path, base_config())
    out1 = tmp_path / "t1"
    out2 = tmp_path / "t2"
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out1), "--threads", "1"]) == 0
    assert main(["gf", "--config", cfg_path, "--out-dir", str(out2), "--threads", "4"]) == 0
    assert (out1 / "gf.csv").read_bytes() == (out2 / "gf.csv").read_bytes()


def test_threads_env_var_honored(tmp_path, monkeypatch):
    monkeypatch.setenv("GFSIM_THREADS", "3")
    cfg_path = write_config(tmp_path, base_config())
    assert main(["gf", "--config", cfg_path, "--out-dir", str(tmp_path)]) == 0
