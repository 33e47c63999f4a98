import json

import pytest

from qlinksim import cli
from qlinksim.config import ReadoutConfig
from qlinksim.errors import InvariantViolation
from qlinksim.fitting import FitParameters
from qlinksim.numkit import mhz_to_rad_ns


def _write_config(path, document):
    path.write_text(json.dumps(document), encoding="utf-8")
    return str(path)


def test_gauge_sector(tmp_path):
    assert cli.run(["gauge-sector", "--output", str(tmp_path)]) == 0
    lines = (tmp_path / "gauge_sector.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "index,ket,G1,G2"
    assert [line.split(",")[1] for line in lines[1:]] == ["001", "110"]
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "gauge-sector"
    assert [a["file"] for a in manifest["artifacts"]] == ["gauge_sector.csv", "gauge_sector.json"]
    report = json.loads((tmp_path / "gauge_sector.json").read_text(encoding="utf-8"))
    assert report["config_hash"] == manifest["config_hash"]


def test_invalid_config_exits_with_2(tmp_path, capsys):
    config = _write_config(tmp_path / "bad.json", {"qlm": {"n_sites": 3}})
    assert cli.run(["false-vacuum", "--config", config, "--output", str(tmp_path / "out")]) == 2
    assert "qlm.n_sites" in capsys.readouterr().err


def test_negative_thread_count_exits_with_2(tmp_path):
    assert cli.run(["gauge-sector", "--threads", "-1", "--output", str(tmp_path)]) == 2


def test_false_vacuum_is_deterministic(tmp_path):
    config = _write_config(tmp_path / "small.json",
                           {"qlm": {"n_sites": 4, "t_max_j_units": 10.0, "n_samples": 11}})
    for name in ("a", "b"):
        assert cli.run(["false-vacuum", "--config", config, "--output", str(tmp_path / name)]) == 0
    first = (tmp_path / "a" / "false_vacuum_mu0.csv").read_bytes()
    assert first == (tmp_path / "b" / "false_vacuum_mu0.csv").read_bytes()
    assert first.decode("utf-8").splitlines()[0] == "t_in_J_units,N_odd,N_even,E_odd,E_even,total_flux"
    assert len(first.decode("utf-8").splitlines()) == 12


def test_spectrum_flux_sweep_columns(tmp_path, monkeypatch, calibrated_device):
    _, spectrum = calibrated_device
    monkeypatch.setattr(cli, "_calibrated_spectrum", lambda ctx: spectrum)
    config = _write_config(tmp_path / "flux.json", {"circuit": {"n_flux": 3}})
    assert cli.run(["spectrum", "--config", config, "--output", str(tmp_path / "out")]) == 0
    lines = (tmp_path / "out" / "flux_sweep.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "phi_b,omega1,omega2,omega3,min_overlap"
    assert len(lines) == 4


def test_fit_guess_is_detached_from_synthesis_values():
    cfg = ReadoutConfig()
    truth = FitParameters(gamma=cfg.rates(), gamma_phi=cfg.gamma_phi_per_us * 1e-3, thermal=cfg.thermal(),
                          j=mhz_to_rad_ns(cfg.j_mhz))
    guess = cli._fit_guess(cfg, truth)
    assert all(g != t for g, t in zip(guess.to_vector()[:-1], truth.to_vector()[:-1]))

    pinned = cli._fit_guess(ReadoutConfig(guess_j_mhz=1.5), truth)
    assert pinned.j == pytest.approx(mhz_to_rad_ns(1.5))


@pytest.mark.parametrize("closure", ["factorized", "correlator"])
def test_readout_recovers_synthesis_parameters(tmp_path, closure):
    config = _write_config(tmp_path / "readout.json", {"seed": 3, "readout": {
        "n_t_evolve": 7, "t_evolve_max_ns": 600.0, "n_t_meas": 61, "t_meas_ns": 600.0,
        "noise_sigma": 0.0, "n_starts": 2, "field_closure": closure,
    }})
    assert cli.run(["readout", "--config", config, "--output", str(tmp_path / "out")]) == 0
    report = json.loads((tmp_path / "out" / "fit_report.json").read_text(encoding="utf-8"))
    assert report["field_closure"] == closure
    errors = report["relative_errors"]
    for name in ("j", "gamma_phi", "gamma_110_100", "gamma_110_010", "gamma_100_000", "gamma_010_000"):
        assert abs(errors[name]) < 0.05, name


def test_map_chain(tmp_path):
    assert cli.run(["map-chain", "--output", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "chain_report.json").read_text(encoding="utf-8"))
    assert [s["label"] for s in report["states"]] == ["I", "II", "III", "IV", "V"]
    assert report["frame"]["ok"] is True


def test_numerical_failure_exits_with_3(tmp_path, monkeypatch):
    def broken(ctx):
        ctx.csv("partial.csv", ["x"], [[1.0]])
        raise InvariantViolation(["gauss_law_violated"])

    monkeypatch.setitem(cli.HANDLERS, "gauge-sector", broken)
    assert cli.run(["gauge-sector", "--output", str(tmp_path)]) == 3
    manifest = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert [a["file"] for a in manifest["artifacts"]] == ["partial.csv"]


def test_bad_input_inside_a_command_exits_with_2(tmp_path, monkeypatch):
    def broken(ctx):
        raise ValueError("false-vacuum runs need an even number of sites")

    monkeypatch.setitem(cli.HANDLERS, "gauge-sector", broken)
    assert cli.run(["gauge-sector", "--output", str(tmp_path)]) == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        cli.run(["--version"])
    assert info.value.code == 0
    assert "qlinksim" in capsys.readouterr().out
