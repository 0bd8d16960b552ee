import json
from pathlib import Path

import pytest

from hypmass.cli import main, run, write_report
from hypmass.config import ConfigError, RunConfig, Tolerances, load_config, parse_config
from hypmass.mass import DEFAULT_RADII

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


# ---------------------------------------------------------------------------
# configuration parsing


def test_minimal_config_defaults():
    cfg = parse_config("metric = reference\n")
    assert cfg.n == 3 and cfg.resolution == 32
    assert cfg.radii == tuple(DEFAULT_RADII)
    assert cfg.metric.name == "reference"
    assert cfg.checks == ("mass",)


def test_sections_and_literals():
    cfg = parse_config("[run]\nn = 4\nradii = [10, 20, 40]\nchecks = mass, spin\n"
                       "[metric]\nname = ads_schwarzschild\nmbar = 2\n[tolerances]\nfit = 1e-4\n")
    assert cfg.n == 4 and cfg.radii == (10.0, 20.0, 40.0)
    assert cfg.checks == ("mass", "spin")
    assert cfg.metric.mbar == 2.0 and isinstance(cfg.metric.mbar, float)
    assert cfg.tolerances.fit == 1e-4


@pytest.mark.parametrize("text,line,fragment", [
    ("n = 3\nn = 4\n", 2, "duplicate key"),
    ("[run]\nn = 3\n[metric]\nfoo = 1\n", 4, "unknown key"),
    ("n = 3\nthis is not a pair\n", 2, "malformed"),
    ("n = 3\n[extras]\nx = 1\n", 2, "unknown section"),
    ("n = 'three'\n", 1, "integer"),
    ("radii = 10\n", 1, "list of numbers"),
])
def test_config_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


@pytest.mark.parametrize("text,fragment", [
    ("radii = [10, 5, 20]\n", "radii not increasing"),
    ("radii = [5, 10, 20]\n", "10"),
    ("n = 2\n", "at least 3"),
    ("resolution = 4\n", "resolution"),
    ("checks = mass, telepathy\n", "telepathy"),
    ("metric = kerr\n", "kerr"),
    ("format = yaml\n", "yaml"),
    ("radii = [10, 20]\n", "radii"),
])
def test_semantic_validation(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert fragment in str(info.value)
    assert info.value.line == 1


def test_metric_named_twice():
    with pytest.raises(ConfigError):
        parse_config("metric = reference\n[metric]\nname = reference\n")


def test_sample_configs_parse():
    for path in sorted(CONFIGS.glob("*.ini")):
        assert isinstance(load_config(path), RunConfig)


# ---------------------------------------------------------------------------
# runs


def test_reference_run_passes(tmp_path):
    cfg = parse_config(f"metric = reference\nresolution = 16\nout = '{tmp_path}'\n")
    report, status = run(cfg)
    assert status == 0
    assert report.causal_class == "ZERO"
    assert report.checks["mass"]["passed"]


def test_unsupported_spin_dimension_fails():
    report, status = run(parse_config("n = 9\nchecks = spin\n"))
    assert status != 0
    assert "SpinError" in report.checks["spin"]["error"]
    assert report.causal_class == "NOT_COMPUTED"


def test_engine_failure_is_recorded():
    cfg = parse_config("[run]\nresolution = 16\n[metric]\nname = trace_perturbation\npower = 1.0\n")
    report, status = run(cfg)
    assert status == 1
    assert report.errors and not report.checks["mass"]["passed"]


def test_fault_injection_flips_status():
    base = "[run]\nresolution = 16\nchecks = mass, exactness\nsamples = 10\n[metric]\nname = ads_schwarzschild\n"
    assert run(parse_config(base))[1] == 0
    report, status = run(parse_config(base + "[tolerances]\nexactness = 1e-30\n"))
    assert status == 1
    assert report.checks["mass"]["passed"] and not report.checks["exactness"]["passed"]
    report, status = run(parse_config(base + "[tolerances]\nfit = 1e-12\n"))
    assert status == 1 and not report.checks["mass"]["passed"]


def test_reports_are_reproducible(tmp_path):
    text = "[run]\nresolution = 16\nchecks = mass, exactness\nsamples = 10\nseed = 7\nformat = both\n" \
           "[metric]\nname = ads_schwarzschild\n"
    blobs = []
    for _ in range(2):
        cfg = parse_config(text).with_overrides(out=str(tmp_path))
        paths = write_report(run(cfg)[0], cfg)
        blobs.append([p.read_bytes() for p in paths])
    assert blobs[0] == blobs[1]
    doc = json.loads(blobs[0][0])
    assert doc["config"]["seed"] == 7


def test_atomic_write_leaves_no_temporaries(tmp_path):
    cfg = parse_config(f"metric = reference\nresolution = 16\nformat = both\nout = '{tmp_path}'\n")
    write_report(run(cfg)[0], cfg)
    write_report(run(cfg)[0], cfg)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["report.json", "report.txt"]


def test_main_flags(tmp_path, capsys):
    cfg = tmp_path / "run.ini"
    cfg.write_text("metric = reference\nresolution = 16\n")
    out = tmp_path / "reports"
    assert main(["--config", str(cfg), "--out", str(out), "--format", "table", "--workers", "2", "--seed", "3"]) == 0
    assert (out / "report.txt").exists()
    assert "mass" in capsys.readouterr().out


def test_main_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("n = 3\nn = 4\n")
    assert main(["--config", str(cfg)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert main(["--config", str(tmp_path / "missing.ini")]) == 2


def test_conformal_config_resolves_relative_data(tmp_path):
    cfg = load_config(CONFIGS / "conformal.ini").with_overrides(out=str(tmp_path))
    report, status = run(cfg)
    assert status == 0
    assert report.causal_class == "TIMELIKE_FUTURE"


def test_tolerance_defaults():
    t = Tolerances()
    assert t.fit == 1e-3 and t.invariance == 1e-2 and t.killing == 1e-6
