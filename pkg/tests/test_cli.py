import json

import numpy as np
import pytest

from fbstab.cli import main
from fbstab.config import RunConfig, config_from_sources, parse_config_file
from fbstab.errors import UsageError

import oracles

REF_CONFIG = f"""
# reference configuration
n = 3
f = sigma
g = sigma - {oracles.SIGMA_TILDE_STAR!r}
sigma_bar = 1.0
c = 1e-3
gamma = 1.0
"""


@pytest.fixture()
def config_file(tmp_path):
    path = tmp_path / "model.cfg"
    path.write_text(REF_CONFIG, encoding="utf-8")
    return str(path)


def test_parse_config_file(config_file):
    mapping = parse_config_file(config_file)
    assert mapping["f"] == "sigma"
    assert float(mapping["c"]) == 1e-3


def test_config_overrides_win(config_file):
    mapping = parse_config_file(config_file)
    config = config_from_sources(mapping, {"gamma": 2.5})
    assert config.gamma == 2.5
    assert config.n == 3


def test_config_rejects_unknown_key():
    with pytest.raises(UsageError):
        config_from_sources({"bogus": "1"}, {})


def test_config_rejects_bad_grid():
    with pytest.raises(UsageError):
        RunConfig(grid_n=100)


def test_threads_from_environment(monkeypatch):
    monkeypatch.setenv("FBSTAB_THREADS", "3")
    assert RunConfig().threads == 3


def test_stationary_command(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["--config", config_file, "--out-dir", str(out), "stationary"])
    assert code == 0
    payload = json.loads((out / "stationary.json").read_text())
    assert payload["R_s"] == pytest.approx(1.0, abs=1e-8)
    assert abs(payload["mass_balance_residual"]) < 1e-9
    header = (out / "stationary.csv").read_text().splitlines()[0]
    assert header == "r,sigma_s,p_s"


def test_stationary_rejects_broken_f(config_file, tmp_path, capsys):
    code = main([
        "--config", config_file, "--out-dir", str(tmp_path),
        "--f", "sigma - 1", "stationary",
    ])
    assert code == 2
    assert "(A1)" in capsys.readouterr().err


def test_missing_key_is_usage_error(tmp_path, capsys):
    code = main(["--out-dir", str(tmp_path), "stationary"])
    assert code == 1


def test_spectrum_verdicts(config_file, tmp_path):
    out_hi = tmp_path / "hi"
    code = main([
        "--config", config_file, "--out-dir", str(out_hi),
        "--gamma", "0.009", "--k-max", "8", "spectrum",
    ])
    assert code == 0
    hi = json.loads((out_hi / "spectrum.json").read_text())
    assert hi["verdict"].startswith("stable")
    assert hi["c0"] > 0.0

    out_lo = tmp_path / "lo"
    code = main([
        "--config", config_file, "--out-dir", str(out_lo),
        "--gamma", "0.002", "--k-max", "8", "spectrum",
    ])
    assert code == 0
    lo = json.loads((out_lo / "spectrum.json").read_text())
    assert lo["verdict"].startswith("unstable")
    assert lo["violating_k"] == 2


def test_spectrum_gamma_star_stable_under_k_max(config_file, tmp_path):
    values = {}
    for k_max in (8, 16):
        out = tmp_path / f"k{k_max}"
        main([
            "--config", config_file, "--out-dir", str(out),
            "--gamma", "0.009", "--k-max", str(k_max), "spectrum",
        ])
        values[k_max] = json.loads((out / "spectrum.json").read_text())["gamma_star"]
    assert values[8] == values[16]


def test_spectrum_determinism(config_file, tmp_path):
    texts = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        main([
            "--config", config_file, "--out-dir", str(out),
            "--gamma", "0.009", "--k-max", "8", "spectrum",
        ])
        texts.append((out / "spectrum.csv").read_bytes())
    assert texts[0] == texts[1]


def test_eigen_command(config_file, tmp_path):
    out = tmp_path / "eig"
    code = main([
        "--config", config_file, "--out-dir", str(out), "--gamma", "0.009",
        "--k-list", "0,2", "--c-list", "1e-3,1e-2", "eigen",
    ])
    assert code == 0
    lines = (out / "eigen.csv").read_text().splitlines()
    assert lines[0] == "k,c,gamma,alpha_k,mu,lambda,iterations,residual"
    assert len(lines) == 5
    for line in lines[1:]:
        parts = [float(v) for v in line.split(",")]
        k, c, gamma, alpha, mu, lam = parts[:6]
        assert lam == pytest.approx(alpha + c * mu, abs=1e-14)


def test_simulate_radial_short(config_file, tmp_path):
    out = tmp_path / "rad"
    code = main([
        "--config", config_file, "--out-dir", str(out), "--gamma", "0.009",
        "--R0", "1.05", "--t-end", "1.0", "--dt", "1e-3", "simulate", "radial",
    ])
    assert code == 0
    payload = json.loads((out / "radial.json").read_text())
    assert 0.9 < payload["final_R"] < 1.06
    rows = (out / "radial.csv").read_text().splitlines()
    assert rows[0] == "t,R,sigma_err"


def test_simulate_radial_zero_t_end(config_file, tmp_path):
    out = tmp_path / "rad0"
    code = main([
        "--config", config_file, "--out-dir", str(out), "--gamma", "0.009",
        "--R0", "1.05", "--t-end", "0", "simulate", "radial",
    ])
    assert code == 0
    rows = (out / "radial.csv").read_text().splitlines()
    assert len(rows) == 2  # header plus the single t = 0 row


def test_simulate_mode(config_file, tmp_path):
    out = tmp_path / "mode"
    code = main([
        "--config", config_file, "--out-dir", str(out), "--gamma", "0.009",
        "--k", "2", "--t-end", "120", "--grid-n", "256",
        "--method", "trapezoidal", "simulate", "mode",
    ])
    assert code == 0
    payload = json.loads((out / "mode.json").read_text())
    assert payload["k"] == 2
    assert payload["dominant_re"] < 0.0
    assert payload["measured_rate"] == pytest.approx(-payload["dominant_re"],
                                                     rel=0.05)


def test_translate_sphere(tmp_path):
    out = tmp_path / "tr"
    code = main([
        "--out-dir", str(out), "translate", "--z", "0.02,0,0.01",
        "--graph-kmax", "12",
    ])
    assert code == 0
    lines = (out / "translated_coeffs.csv").read_text().splitlines()
    assert lines[0] == "k,l,b_kl"
    # read back and compare against the closed form
    from fbstab.cli import _read_graph

    rho = _read_graph(str(out / "translated_coeffs.csv"), 3, 12)
    exact = oracles.translated_sphere_graph(
        np.array([0.02, 0.0, 0.01]), rho.grid_points
    )
    assert np.abs(rho.samples() - exact).max() < 1e-9


def test_translate_round_trip_through_csv(tmp_path):
    from fbstab.cli import _read_graph, _write_graph
    from fbstab.liegroup import GraphFunction

    rng = np.random.default_rng(0)
    rho = GraphFunction(3, 8, 0.01 * rng.standard_normal(81))
    path = str(tmp_path / "rho.csv")
    _write_graph(path, rho)
    back = _read_graph(path, 3, 8)
    assert np.abs(back.coeffs - rho.coeffs).max() < 1e-16


def test_cm_demo(tmp_path):
    out = tmp_path / "cm"
    code = main(["--out-dir", str(out), "cm-demo"])
    assert code == 0
    payload = json.loads((out / "cm_demo.json").read_text())
    assert payload["kernel_dim"] == 1
    assert payload["omega_minus"] == pytest.approx(1.0, abs=1e-8)
    assert payload["sigma_hat"] == pytest.approx(0.7, abs=1e-6)
    assert 0.98 <= payload["rate_measured"] <= 1.02
    assert payload["identity_residual"] < 1e-6


def test_check_list(capsys):
    code = main(["check", "--list"])
    assert code == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 10
    assert "stationary-oracle" in out


def test_check_exit_code_on_failure(monkeypatch, capsys):
    import fbstab.acceptance as acc

    def failing(case):
        return acc.CriterionResult("stub", False, "forced failure", 0.0)

    monkeypatch.setattr(acc, "CRITERIA", [failing])
    code = main(["check"])
    assert code == 4
    assert "FAIL" in capsys.readouterr().out


def test_check_exit_code_on_success(monkeypatch, capsys):
    import fbstab.acceptance as acc

    def passing(case):
        return acc.CriterionResult("stub", True, "forced pass", 0.0)

    monkeypatch.setattr(acc, "CRITERIA", [passing])
    code = main(["check"])
    assert code == 0


def test_csv_floats_are_17_significant_digits(tmp_path):
    from fbstab.cli import write_csv

    path = str(tmp_path / "x.csv")
    write_csv(path, ["a"], [(1.0 / 3.0,)])
    text = open(path).read().splitlines()[1]
    assert text == f"{1.0 / 3.0:.17g}"
    assert float(text) == 1.0 / 3.0
