"""Pipeline orchestration: configs, persistence, determinism, CLI."""

import json
import subprocess
import sys

import numpy as np
import pytest

from connorb import driver
from connorb.connectmap import flatten, unflatten
from connorb.interval import Interval
from connorb.problems import cubic_1d_config, lotka_volterra_config
from connorb.seqspace import Involution


def test_load_config_validates_nondegeneracy():
    cfg = cubic_1d_config()
    cfg["source"]["n_unstable"] = 2
    with pytest.raises(ValueError):
        driver.load_config(cfg)


def test_load_config_requires_flight_time():
    cfg = cubic_1d_config()
    del cfg["L"]
    with pytest.raises(ValueError):
        driver.load_config(cfg)


def test_iota_roundtrip():
    inv = Involution(3, 1)
    z = np.array([0.3, -0.2, 0.7])
    phi = driver.iota(z, inv)
    assert np.allclose(phi[0], 0.3 - 0.2j) and np.allclose(phi[1], 0.3 + 0.2j)
    assert np.allclose(driver.iota_inverse(phi, inv), z)
    # symmetric points map to real chart values
    assert np.allclose(np.conj(phi[inv.perm()]), phi)


@pytest.fixture(scope="module")
def cubic_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("cubic")
    art = driver.run_validate(cubic_1d_config(), out_dir=out)
    return art, out


def test_full_pipeline_certifies_cubic(cubic_run):
    art, out = cubic_run
    assert art.result.success and art.result.transversal
    assert art.result.r_lo <= 1e-6
    assert art.result.r_hi >= 1e-3
    assert (out / "checkpoint.json").exists()
    assert (out / "report.json").exists()
    assert (out / "orbit.csv").exists()


def test_checkpoint_roundtrip_bit_exact(cubic_run):
    art, out = cubic_run
    problem, xhat, obj = driver.load_checkpoint(out / "checkpoint.json")
    assert np.array_equal(xhat, art.xhat)
    assert problem.layout.kappa == art.problem.layout.kappa
    # flatten/unflatten reproduces the stored vector exactly
    assert np.array_equal(flatten(problem, unflatten(problem, xhat)), xhat)


def test_replay_reproduces_certificate(cubic_run):
    art, out = cubic_run
    res = driver.replay(out / "checkpoint.json")
    assert res.success == art.result.success
    assert np.isclose(res.r_lo, art.result.r_lo, rtol=1e-9)
    assert np.isclose(res.r_hi, art.result.r_hi, rtol=1e-9)


def test_determinism_same_config_same_candidate(cubic_run):
    art, _ = cubic_run
    art2 = driver.run_validate(cubic_1d_config())
    assert np.array_equal(art.xhat, art2.xhat)
    assert art.result.r_lo == art2.result.r_lo
    assert art.result.r_hi == art2.result.r_hi


def test_orbit_csv_is_monotone_front(cubic_run):
    art, out = cubic_run
    rows = np.loadtxt(out / "orbit.csv", delimiter=",", skiprows=1)
    t, u = rows[:, 0], rows[:, 1]
    assert abs(u[0]) < 0.2 and abs(u[-1] - 1.0) < 0.2
    assert np.all(np.diff(u) > -1e-8)


def test_emit_plotdata(cubic_run, tmp_path):
    art, out = cubic_run
    driver.emit_plotdata(out / "checkpoint.json", tmp_path)
    assert (tmp_path / "orbit.csv").exists()
    assert (tmp_path / "chart_unstable.csv").exists()
    assert (tmp_path / "chart_stable.csv").exists()
    curves = np.loadtxt(tmp_path / "radii_polynomials.csv", delimiter=",",
                        skiprows=1)
    assert curves.shape[1] == len(art.result.table) + 1


def test_kappa_audit_at_load():
    from connorb.connectmap import GalerkinIndexMap

    for (N, Ku, Ks, kappa) in [
        ((50, 47, 50), (13, 13), (9, 9, 9), 5382),
        ((55, 52, 62), (13, 13), (12, 12, 12), 10258),
        ((62, 61), (15, 15), (12, 12, 12), 10314),
    ]:
        assert GalerkinIndexMap(4, 2, 3, N, Ku, Ks).kappa == kappa


def test_cli_validate_and_plotdata(tmp_path):
    cfg_path = tmp_path / "cubic.json"
    with open(cfg_path, "w") as fh:
        json.dump(cubic_1d_config(), fh)
    out = tmp_path / "out"
    proc = subprocess.run(
        [sys.executable, "-m", "connorb", "validate", str(cfg_path),
         "--out", str(out), "--quiet"],
        capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "certified: True" in proc.stdout
    proc2 = subprocess.run(
        [sys.executable, "-m", "connorb", "plotdata",
         str(out / "checkpoint.json"), "--out", str(tmp_path / "plot")],
        capture_output=True, text=True)
    assert proc2.returncode == 0, proc2.stderr
    proc3 = subprocess.run(
        [sys.executable, "-m", "connorb", "replay",
         str(out / "checkpoint.json"), "--quiet"],
        capture_output=True, text=True)
    assert proc3.returncode == 0, proc3.stderr


def test_stage_error_reports_stage_and_suggestion():
    cfg = cubic_1d_config()
    cfg["L"] = "0.05"  # far too short to reach the stable chart
    with pytest.raises(driver.StageError) as exc:
        driver.run_validate(cfg)
    assert "suggestion" in str(exc.value)
