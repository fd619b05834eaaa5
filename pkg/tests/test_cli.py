import csv
import json
import math
import subprocess
import sys

import pytest
from hypothesis import given, strategies as st

from nhmetric import cli
from nhmetric.cli import PRESETS, RunConfig, main, resolve
from nhmetric.errors import ConfigError

finite = st.floats(-1e6, 1e6, allow_nan=False)
positive = st.floats(1e-6, 1e3)

configs = st.builds(
    RunConfig,
    command=st.sampled_from(cli.COMMANDS),
    gamma=finite,
    F=st.one_of(st.none(), positive),
    nonherm_scale=st.one_of(st.none(), positive),
    k=st.lists(finite, max_size=4).map(tuple),
    k_grid=st.one_of(st.none(), st.tuples(st.integers(2, 50), st.floats(-5, -1), st.floats(0, 5))),
    window=positive,
    rel_tol=positive,
    abs_tol=positive,
    samples=st.integers(1, 1000),
    method=st.sampled_from(cli.METHODS),
    k_max=positive,
    adiabatic=st.booleans(),
    route=st.sampled_from(cli.ROUTES),
    criteria=st.lists(st.integers(1, 7), min_size=1, max_size=7).map(tuple),
    out=st.one_of(st.none(), st.sampled_from(["out.csv", "a/b.json"])),
    format=st.sampled_from(cli.FORMATS),
    jobs=st.one_of(st.none(), st.integers(1, 64)),
)


@given(configs)
def test_config_round_trip(cfg):
    text = cfg.to_text()
    back = RunConfig.from_text(text)
    assert back == cfg
    assert back.to_text() == text


def test_config_file_and_precedence(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# sweep settings\ngamma = 0.5\nnonherm_scale = 10\nk = 0.1, 0.2\nsamples = 7\n")
    cfg, _ = resolve(["sweep", "--preset", "fig3", "--config", str(f), "--samples", "9"])
    assert cfg.gamma == 0.5 and cfg.nonherm_scale == 10.0
    assert cfg.k == (0.1, 0.2) and cfg.k_grid == (81, -2.0, 2.0)
    assert cfg.samples == 9
    cfg, _ = resolve(["sweep", "--preset", "fig3", "--k", "0.3"])
    assert cfg.k == (0.3,) and cfg.k_grid is None
    cfg, _ = resolve(["sweep", "--F", "0.2", "--gamma", "0"])
    assert cfg.force() == 0.2


@pytest.mark.parametrize("text", ["gamma = x", "bogus = 1", "no equals sign", "k_grid = 3:1",
                                  "method = both\nformat = xml", "criteria = 9"])
def test_bad_config_text(text):
    with pytest.raises(ConfigError):
        RunConfig.from_text(text)


def test_k_values():
    cfg = RunConfig(k=(0.5, -0.5), k_grid=(3, -1.0, 1.0))
    assert cfg.k_values() == [-1.0, -0.5, 0.0, 0.5, 1.0]
    with pytest.raises(ConfigError):
        RunConfig().k_values()
    with pytest.raises(ConfigError):
        RunConfig(gamma=0.0, nonherm_scale=1.0).force()


def test_presets_exist():
    assert set(PRESETS) == {"fig1", "fig2", "fig3", "eq6", "eq8"}
    for name in PRESETS:
        assert cli.preset(name).command in cli.COMMANDS
    with pytest.raises(ConfigError):
        cli.preset("fig9")


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_spectrum_fig1(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["spectrum", "--preset", "fig1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert tuple(rows[0]) == cli.SPECTRUM_COLUMNS
    eps = [r for r in rows if r["is_ep"] == "1"]
    assert {float(r["k"]) for r in eps} == {0.2, 1.0}
    tau = math.sqrt(1 - 0.04) / 0.4
    for r in rows:
        t, k, im = float(r["t"]), float(r["k"]), float(r["im_e_plus"])
        if k == 2.0:
            assert im == 0.0
        if k == 0.2:
            assert (im != 0.0) == (abs(t) < tau)


def test_sweep_fig3_values(tmp_path):
    out = tmp_path / "f3.json"
    assert main(["sweep", "--preset", "fig3", "--k", "-0.5", "0.5", "1.1", "--format", "json",
                 "--out", str(out), "--jobs", "1"]) == 0
    rows = {r["k"]: r for r in json.loads(out.read_text())}
    assert rows[0.5]["value_metric"] == pytest.approx(0.5, abs=1e-3)
    assert rows[0.5]["value_norm"] == pytest.approx(0.5, abs=1e-3)
    assert rows[-0.5]["value_metric"] == pytest.approx(0.5, abs=1e-3)
    assert rows[-0.5]["value_norm"] == pytest.approx(-0.5, abs=1e-3)
    assert rows[1.1]["value_metric"] == pytest.approx(-1.0, abs=1e-3)
    assert rows[1.1]["value_norm"] == pytest.approx(-1.0, abs=1e-3)
    assert list(rows[0.5]) == list(cli.SWEEP_COLUMNS)


def test_sweep_hermitian_methods_agree(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["sweep", "--gamma", "0", "--F", "1", "--k-grid", "5:-1:1", "--out", str(out)]) == 0
    for r in read_csv(out):
        assert abs(float(r["value_metric"]) - float(r["value_norm"])) <= 1e-6


def test_evolve_single_sample(tmp_path):
    out = tmp_path / "e.csv"
    assert main(["evolve", "--preset", "fig2", "--k", "2", "--samples", "1", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 1 and tuple(rows[0]) == cli.EVOLVE_COLUMNS


def test_defects_eq8(tmp_path):
    out = tmp_path / "d.json"
    assert main(["defects", "--preset", "eq8", "--format", "json", "--out", str(out)]) == 0
    rows = {r["method"]: r for r in json.loads(out.read_text())}
    assert rows["metric"]["sigma_ptb"] == pytest.approx(0.106103, abs=1e-6)
    assert abs(rows["norm"]["sigma_ptb"]) <= 1e-8
    assert rows["metric"]["F"] == "adiabatic"


def test_output_is_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["sweep", "--preset", "eq6", "--k", "-1.1", "0.2", "1.5"]
    assert main(args + ["--out", str(a), "--jobs", "1"]) == 0
    assert main(args + ["--out", str(b), "--jobs", "2"]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.csv.meta.json").read_bytes() == (tmp_path / "b.csv.meta.json").read_bytes()
    meta = json.loads((tmp_path / "a.csv.meta.json").read_text())
    assert meta["rows"] == 3 and "time" not in json.dumps(meta)


def test_save_config_reproduces_run(tmp_path):
    saved, a, b = tmp_path / "c.cfg", tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--preset", "eq6", "--k", "0.5", "--save-config", str(saved),
                 "--out", str(a)]) == 0
    assert main(["sweep", "--config", str(saved), "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_float_format():
    assert cli.fmt_float(0.1) == "0.10000000000000001"
    assert cli.fmt_float(float("inf")) == "inf"
    assert float(cli.fmt_float(1 / 3)) == 1 / 3


def test_exit_codes(tmp_path, capsys):
    assert main(["sweep", "--k", "abc"]) == 1
    assert main(["nonsense"]) == 1
    assert main(["sweep"]) == 1  # no k values
    assert main(["sweep", "--k", "1", "--out", str(tmp_path / "missing" / "x.csv")]) == 1
    assert main(["evolve", "--k", "0.2", "--nonherm-scale", "25", "--route", "direct"]) == 2


def test_jobs_env(monkeypatch):
    monkeypatch.setenv("NHMETRIC_JOBS", "3")
    assert cli.default_jobs() == 3
    monkeypatch.setenv("NHMETRIC_JOBS", "zero")
    with pytest.raises(ConfigError):
        cli.default_jobs()


def test_console_script_validate_subset():
    r = subprocess.run([sys.executable, "-m", "nhmetric", "validate", "--criteria", "7"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert "criterion 7: PASS" in r.stdout
