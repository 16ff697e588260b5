import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beclab.hermite import HermiteBasis
from beclab.lab import (
    ConfigError,
    ExperimentConfig,
    SnapshotError,
    load_snapshot,
    parse_text,
    run,
    run_sweep,
    save_snapshot,
)
from beclab.lab.cli import main
from beclab.manybody import ManyBodyState, ground_profile
from beclab.nls2d import Field2D, Grid2D
from beclab.scaling import v_of_beta


def scaling_config(tmp_path, **over):
    cfg = ExperimentConfig(
        kind="scaling-table", out_dir=str(tmp_path / "out"), params={"points": 64}
    )
    return cfg.with_overrides(**over)


# ---------------------------------------------------------------------------
# config


def test_config_round_trip_bit_exact():
    cfg = ExperimentConfig(
        kind="dimred3d",
        out_dir="out/x",
        seed=7,
        params={"omega_list": "4,16", "dt": "0.0005"},
        sweep={"coupling": ("0.0", "6.2831853071795862")},
    )
    text = cfg.to_text()
    again = parse_text(text)
    assert again == cfg
    assert again.to_text() == text


def test_config_field_level_errors():
    with pytest.raises(ConfigError, match="kind"):
        ExperimentConfig(kind="nope")
    with pytest.raises(ConfigError, match="params.dt"):
        ExperimentConfig(kind="nls2d", params={"dt": "-1"})
    with pytest.raises(ConfigError, match="params.beta"):
        ExperimentConfig(kind="manybody", params={"beta": "0.5"})
    with pytest.raises(ConfigError, match="unknown fields"):
        ExperimentConfig(kind="nls2d", params={"bogus": "1"})
    with pytest.raises(ConfigError, match="omega_list"):
        ExperimentConfig(kind="dimred3d", params={"omega_list": "16,4"})
    with pytest.raises(ConfigError, match="sweep"):
        ExperimentConfig(kind="nls2d", sweep={"bogus": ("1",)})


@settings(deadline=None, max_examples=25)
@given(
    st.sampled_from(["nls2d", "scaling-table", "mollifier-rate"]),
    st.integers(min_value=0, max_value=2**63),
    st.booleans(),
)
def test_config_round_trip_property(kind, seed, emit):
    cfg = ExperimentConfig(kind=kind, seed=seed, emit_plots=emit)
    assert parse_text(cfg.to_text()) == cfg


# ---------------------------------------------------------------------------
# snapshots


def snapshot_state():
    grid = Grid2D(n=4, L=4.0)
    basis = HermiteBasis(mode_count=2)
    zc = np.zeros(2, complex)
    zc[0] = 1.0
    return ManyBodyState.product(grid, basis, 2, ground_profile(grid), zc)


def test_snapshot_round_trip(tmp_path):
    state = snapshot_state()
    p1, p2 = tmp_path / "a.becl", tmp_path / "b.becl"
    save_snapshot(state, p1)
    arr, meta = load_snapshot(p1)
    assert np.array_equal(arr, state.amplitudes)
    assert meta["kind"] == "manybody" and meta["N"] == 2
    assert abs(meta["norm"] - np.linalg.norm(arr)) <= 1e-12
    restored = ManyBodyState(state.grid, state.basis, meta["N"], arr, time=meta["time"])
    save_snapshot(restored, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_snapshot_corruption_detected(tmp_path):
    state = snapshot_state()
    path = tmp_path / "s.becl"
    save_snapshot(state, path)
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF  # flip a payload byte
    bad = tmp_path / "bad.becl"
    bad.write_bytes(bytes(blob))
    with pytest.raises(SnapshotError, match="checksum"):
        load_snapshot(bad)
    trunc = tmp_path / "trunc.becl"
    trunc.write_bytes(path.read_bytes()[:-32])
    with pytest.raises(SnapshotError, match="truncated"):
        load_snapshot(trunc)


def test_snapshot_version_and_magic(tmp_path):
    state = snapshot_state()
    path = tmp_path / "s.becl"
    save_snapshot(state, path)
    blob = bytearray(path.read_bytes())
    blob[4] = 99
    versioned = tmp_path / "v.becl"
    versioned.write_bytes(bytes(blob))
    with pytest.raises(SnapshotError, match="unsupported snapshot version"):
        load_snapshot(versioned)
    notmagic = tmp_path / "m.becl"
    notmagic.write_bytes(b"XXXX" + bytes(blob[4:]))
    with pytest.raises(SnapshotError, match="magic"):
        load_snapshot(notmagic)


def test_snapshot_field2d(tmp_path):
    grid = Grid2D(n=8, L=4.0)
    f = Field2D(grid, ground_profile(grid) / np.sqrt(grid.cell_area), time=0.25)
    save_snapshot(f, tmp_path / "f.becl")
    arr, meta = load_snapshot(tmp_path / "f.becl")
    assert meta["kind"] == "field2d" and meta["time"] == 0.25
    assert np.array_equal(arr, f.values)


# ---------------------------------------------------------------------------
# runners


def test_scaling_table_run_matches_reference(tmp_path):
    cfg = scaling_config(tmp_path)
    result = run(cfg)
    assert result["status"] is None
    table = tmp_path / "out" / "scaling_table.csv"
    with open(table, newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 64
    for row in rows:
        beta = float(row["beta"])
        assert float(row["v"]) == pytest.approx(float(v_of_beta(beta)), rel=1e-15)
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest["kind"] == "scaling-table"
    assert manifest["claim"]
    assert "scaling_table.csv" in manifest["outputs"]


def test_run_is_deterministic(tmp_path):
    c1 = scaling_config(tmp_path, out_dir=str(tmp_path / "r1"), seed=42)
    c2 = scaling_config(tmp_path, out_dir=str(tmp_path / "r2"), seed=42)
    run(c1)
    run(c2)
    b1 = (tmp_path / "r1" / "scaling_table.csv").read_bytes()
    b2 = (tmp_path / "r2" / "scaling_table.csv").read_bytes()
    assert b1 == b2


def test_run_creates_output_dir_and_rejects_nondir(tmp_path):
    target = tmp_path / "deep" / "nested" / "dir"
    cfg = scaling_config(tmp_path, out_dir=str(target))
    run(cfg)
    assert (target / "manifest.json").exists()
    blocker = tmp_path / "blocker"
    blocker.write_text("file, not a dir")
    cfg2 = scaling_config(tmp_path, out_dir=str(blocker))
    with pytest.raises(Exception):
        run(cfg2)


def test_nls2d_run_and_plots(tmp_path):
    cfg = ExperimentConfig(
        kind="nls2d",
        out_dir=str(tmp_path / "out"),
        emit_plots=True,
        params={"n": 16, "t_final": 0.02, "sample_every": 10, "snapshot": "true"},
    )
    result = run(cfg)
    out = tmp_path / "out"
    assert (out / "observables.csv").exists()
    assert (out / "final_state.becl").exists()
    assert (out / "observables.png").exists()
    with open(out / "observables.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    masses = [float(r["mass"]) for r in rows]
    assert abs(masses[-1] - masses[0]) <= 1e-10


def test_manybody_runner_artifacts(tmp_path):
    cfg = ExperimentConfig(
        kind="manybody",
        out_dir=str(tmp_path / "mb"),
        params={"t_final": "0.01", "sample_every": "5", "initial": "saturating"},
    )
    run(cfg)
    with open(tmp_path / "mb" / "manybody.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) >= 2
    assert abs(float(rows[-1]["norm"]) - 1) <= 1e-10
    # saturating family at omega=4: one-excitation mass (1/omega)/2/(1+1/omega)
    assert float(rows[0]["p_diag_1"]) == pytest.approx(0.1, rel=1e-6)


def test_hierarchy_runner_gp2d(tmp_path):
    cfg = ExperimentConfig(
        kind="hierarchy-residual",
        out_dir=str(tmp_path / "gp"),
        params={"family": "gp2d", "n": 32, "L": "8.0", "orders": "1"},
    )
    result = run(cfg)
    assert result["status"] == "PASS"
    payload = json.loads((tmp_path / "gp" / "residuals.json").read_text())
    assert 4 * 0.7 <= payload["refinement_ratios"]["1"] <= 4 * 1.3
    assert all(r["residual"] >= 0 for r in payload["records"])


def test_dimred_runner_emits_table(tmp_path):
    cfg = ExperimentConfig(
        kind="dimred3d",
        out_dir=str(tmp_path / "dr"),
        params={"omega_list": "4,16", "t_final": "0.02", "n": "16", "modes": "4"},
    )
    result = run(cfg)
    assert result["status"] in ("PASS", "FAIL")  # tiny horizon need not be monotone
    with open(tmp_path / "dr" / "dimred.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [float(r["omega"]) for r in rows] == [4.0, 16.0]


def test_sweep_cartesian(tmp_path):
    cfg = ExperimentConfig(
        kind="scaling-table",
        out_dir=str(tmp_path / "sweep"),
        params={"points": 16},
        sweep={"eps": ("0.1", "0.2"), "points": ("8", "16")},
    )
    results = run_sweep(cfg)
    assert len(results) == 4
    dirs = sorted((tmp_path / "sweep").glob("run-*"))
    assert len(dirs) == 4
    assert all((d / "manifest.json").exists() for d in dirs)


def test_sweep_parallel_workers(tmp_path):
    cfg = ExperimentConfig(
        kind="scaling-table",
        out_dir=str(tmp_path / "par"),
        threads=2,
        params={"points": 8},
        sweep={"eps": ("0.1", "0.2")},
    )
    results = run_sweep(cfg)
    assert len(results) == 2
    assert all((tmp_path / "par" / f"run-{i:04d}" / "scaling_table.csv").exists() for i in range(2))


def test_three_body_config_gate():
    with pytest.raises(ConfigError, match="gated"):
        ExperimentConfig(kind="manybody", params={"N": "3"})
    ExperimentConfig(kind="manybody", params={"N": "3", "n": "6", "modes": "3"})


# ---------------------------------------------------------------------------
# CLI


def test_cli_validate_and_run(tmp_path, capsys):
    cfg_path = tmp_path / "exp.ini"
    cfg_path.write_text(
        "[experiment]\nkind = scaling-table\nout = {}\n\n[params]\npoints = 16\n".format(
            tmp_path / "cli-out"
        )
    )
    assert main(["validate", "--config", str(cfg_path)]) == 0
    assert main(["run", "--config", str(cfg_path)]) == 0
    assert (tmp_path / "cli-out" / "scaling_table.csv").exists()
    assert main(["report", "--out", str(tmp_path / "cli-out")]) == 0
    assert (tmp_path / "cli-out" / "summary.json").exists()


def test_cli_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nkind = bogus\n")
    assert main(["validate", "--config", str(bad)]) == 1
    assert main(["run", "--config", str(bad)]) == 1
    missing = main(["run", "--config", str(tmp_path / "absent.ini")])
    assert missing == 2  # runtime failure: unreadable path


def test_cli_set_overrides(tmp_path):
    cfg_path = tmp_path / "exp.ini"
    cfg_path.write_text("[experiment]\nkind = scaling-table\nout = unused\n")
    out = tmp_path / "flagged"
    code = main(
        ["run", "--config", str(cfg_path), "--out", str(out), "--set", "points=8"]
    )
    assert code == 0
    with open(out / "scaling_table.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8


def test_cli_env_override(tmp_path, monkeypatch):
    cfg_path = tmp_path / "exp.ini"
    cfg_path.write_text("[experiment]\nkind = scaling-table\nout = unused\n\n[params]\npoints = 8\n")
    env_out = tmp_path / "env-out"
    monkeypatch.setenv("BECLAB_OUT", str(env_out))
    assert main(["run", "--config", str(cfg_path)]) == 0
    assert (env_out / "scaling_table.csv").exists()


def test_cli_fail_status_exit_code(tmp_path):
    # omega range too small for the asymptotic exponents: slopes miss the
    # targets and the experiment reports FAIL (exit 3, not an exception)
    cfg_path = tmp_path / "sob.ini"
    cfg_path.write_text(
        "[experiment]\nkind = sobolev-sharpness\nout = {}\n\n[params]\n"
        "omega_list = 1.0,1.2\nn = 32\n".format(tmp_path / "sob-out")
    )
    assert main(["run", "--config", str(cfg_path)]) == 3
