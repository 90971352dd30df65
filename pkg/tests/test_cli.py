import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisoflow.cli import (
    EXPERIMENTS,
    SCHEMA,
    dispatch,
    emit_config,
    main,
    parse_config,
    random_ordered_pair,
)
from anisoflow.discretization import GraphGrid
from anisoflow.errors import ConfigError

MINIMAL = """\
[experiment]
id = grim_reaper

[grid]
N = 1
h = 0.02
"""


def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.get("grid", "h") == 0.02
    assert cfg.get("grid", "half_width") == 1.2
    assert cfg.get("mobility", "family") == "euclidean"
    assert cfg.get("flow", "cfl_factor") == 0.25
    text = emit_config(cfg)
    assert "[mobility]\nfamily = euclidean" in text


@pytest.mark.parametrize("text, match", [
    ("[experiment]\nid = rescaled_convergence\n\n[perturbation]\ndelta = 1.5\n",
     r"line 5, \[perturbation\] delta: delta out of \(0,1\)"),
    ("[experiment]\nid = grim_reaper\nwidth = 3\n", r"line 3, \[experiment\] width: unknown key"),
    ("[grid]\nh = 0.1\n", r"\[experiment\] id: missing required key"),
    ("[experiment]\nid = nope\n", r"line 2, \[experiment\] id"),
    ("[experiment]\nid = flow\n[grid]\nh = -1\n", r"line 4, \[grid\] h"),
    ("[experiment]\nid = flow\n[flow]\ncfl_factor = 0.9\n", r"cfl_factor out of \(0,0.5\]"),
    ("[experiment]\nid = flow\n[extras]\na = 1\n", r"\[extras\]: unknown section"),
    ("[experiment]\nid = flow\n[grid]\nh = abc\n", r"cannot parse"),
    ("[experiment]\nid = flow\n[anisotropy]\nfamily = elliptic\nmatrix = 1, 0, 0\n",
     r"\[anisotropy\] family: elliptic matrix needs 4 entries"),
])
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(text)


def test_overrides():
    cfg = parse_config(MINIMAL, ["grid.h=0.05", "flow.T=0.5"])
    assert cfg.get("grid", "h") == 0.05 and cfg.get("flow", "T") == 0.5
    with pytest.raises(ConfigError):
        parse_config(MINIMAL, ["h=0.05"])


@settings(max_examples=60, deadline=None)
@given(exp_id=st.sampled_from(EXPERIMENTS), h=st.floats(1e-3, 1.0), cfl=st.floats(1e-3, 0.5),
       T=st.floats(1e-3, 100.0), seed=st.one_of(st.none(), st.integers(0, 2**31)),
       family=st.sampled_from(["euclidean", "power"]))
def test_emit_parse_round_trip(exp_id, h, cfl, T, seed, family):
    cfg = parse_config(f"[experiment]\nid = {exp_id}\n", [
        f"grid.h={h!r}", f"flow.cfl_factor={cfl!r}", f"flow.T={T!r}",
        f"run.seed={seed}", f"anisotropy.family={family}",
    ])
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert emit_config(again) == emit_config(cfg)


def test_schema_has_defaults_for_every_key():
    for section, keys in SCHEMA.items():
        for key, spec in keys.items():
            assert len(spec) == 3, (section, key)


@pytest.mark.parametrize("seed", range(6))
def test_random_pairs_are_ordered_and_lipschitz(seed):
    grid = GraphGrid.periodic(1, 0.05, 4.0)
    u, v = random_ordered_pair(grid, np.random.default_rng(seed))
    assert np.all(u.values <= v.values)
    assert u.lipschitz <= 1.0 + 1e-12


def test_grim_reaper_run(tmp_path, capsys):
    code = main(["oracle", "--override", "grid.h=0.02", "--out", str(tmp_path)])
    assert code == 0
    files = {p.name for p in tmp_path.iterdir()}
    assert {"config_echo.ini", "grim_reaper_metrics.csv", "grim_reaper_summary.txt"} <= files
    assert "artifact: config_echo.ini" in (tmp_path / "grim_reaper_summary.txt").read_text()
    assert "PASS sup_error" in capsys.readouterr().out
    echoed = parse_config((tmp_path / "config_echo.ini").read_text())
    assert echoed.get("grid", "h") == 0.02


def test_config_file_and_emit(tmp_path, capsys):
    path = tmp_path / "run.ini"
    path.write_text(MINIMAL)
    assert main(["run", "--config", str(path), "--emit"]) == 0
    assert parse_config(capsys.readouterr().out) == parse_config(MINIMAL)


@pytest.mark.parametrize("argv, code", [
    (["run", "--override", "experiment.id=flow", "--override", "flow.cfl_factor=0.9"], 2),
    (["rescaled", "--override", "perturbation.delta=1.5"], 2),
    (["expander", "--override", "experiment.id=grim_reaper"], 2),
    (["run", "--config", "/nonexistent/file.ini"], 2),
    # the expander cannot become stationary by tau = 0.5: numerical category
    (["expander", "--override", "flow.tau_end=0.5", "--override", "grid.h=0.1"], 3),
    # an unattainable threshold: assertion category
    (["run", "--override", "experiment.id=scaling", "--override", "grid.h=0.1",
      "--override", "grid.half_width=16", "--override", "experiment.threshold=1e-12"], 4),
])
def test_exit_codes(tmp_path, argv, code):
    assert main(argv + ["--out", str(tmp_path)]) == code


def test_scaling_degenerate_exit_zero(tmp_path, capsys):
    cfg = parse_config("[experiment]\nid = scaling\nt1 = 2\nt2 = 2\n")
    assert dispatch(cfg, out=str(tmp_path)) == 0
    assert "degenerate" in capsys.readouterr().out


def test_comparison_run_with_seed(tmp_path):
    argv = ["barrier-check", "--override", "experiment.id=comparison",
            "--override", "experiment.n_pairs=4", "--seed", "7", "--out", str(tmp_path)]
    assert main(argv) == 0


def test_flow_run_writes_snapshot(tmp_path):
    argv = ["run", "--override", "experiment.id=flow", "--override", "grid.h=0.1",
            "--override", "grid.half_width=2", "--override", "flow.T=0.1",
            "--override", "perturbation.kind=vanishing", "--out", str(tmp_path)]
    assert main(argv) == 0
    assert (tmp_path / "flow_final.txt").exists() and (tmp_path / "flow_records.csv").exists()
