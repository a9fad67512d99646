import json
import subprocess
import sys

import numpy as np
import pytest

from conftest import disp, load_fixture, unc
from dualrefine import evalkit, fileio
from dualrefine.alignment import lu_kss
from dualrefine.cli import load_sample, main
from dualrefine.refinement import RefineConfig, run_refinement
from dualrefine.uncertainty import masking_sweep


@pytest.fixture(scope="module")
def sample_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sample")
    assert main(["gen", "--random", "3", "-o", str(out)]) == 0
    return out


def _write(path, values):
    fileio.write_pfm(np.asarray(values, dtype=np.float32), path)
    return str(path)


def test_eval_of_ground_truth_against_itself(sample_dir, capsys):
    gt = str(sample_dir / "disp_gt.pfm")
    assert main(["eval", gt, gt, "--occ", str(sample_dir / "occ.pfm")]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert "ALL.epe 0.000000" in lines
    assert "NOC.bp2 0.000000" in lines


def test_eval_json_matches_library(sample_dir, tmp_path):
    s = load_sample(sample_dir)
    pred = disp(np.clip(s.d_gt.values + np.sin(np.arange(s.d_gt.values.size)).reshape(s.d_gt.shape), 0, 31))
    pred_path = tmp_path / "pred.pfm"
    fileio.write_pfm(pred, pred_path)
    report_path = tmp_path / "r.json"
    assert main(["eval", str(pred_path), str(sample_dir / "disp_gt.pfm"),
                 "--occ", str(sample_dir / "occ.pfm"), "--bp", "1,2", "--json", str(report_path)]) == 0
    want = evalkit.compute_metrics(fileio.read_pfm(pred_path), s.d_gt, s.occ_mask, (1.0, 2.0)).as_dict()
    assert json.loads(report_path.read_text()) == json.loads(json.dumps(want))


def test_align_reproduces_the_exact_affine_fixture(tmp_path, capsys):
    inputs, expected, tol = load_fixture("harness.cli_align_affine")
    paths = [_write(tmp_path / f"{k}.pfm", inputs[k]) for k in ("d_next", "d_prev", "U")]
    out = tmp_path / "aligned.pfm"
    assert main(["align", *paths, "-o", str(out), "--theta", str(inputs["theta"]),
                 "--K", str(inputs["K"])]) == 0
    aligned = fileio.read_pfm(out).values
    np.testing.assert_allclose(aligned, expected["aligned"], atol=tol)
    np.testing.assert_allclose(aligned, inputs["d_prev"], atol=1e-5)
    assert capsys.readouterr().out.startswith("anchors ")

    lib = lu_kss(fileio.read_pfm(paths[0]), fileio.read_pfm(paths[1]),
                 unc(fileio.read_pfm_array(paths[2])), theta=inputs["theta"], K=inputs["K"])
    assert np.array_equal(aligned, lib.aligned.values)


def test_gradcheck_seed3(capsys):
    _, expected, tol = load_fixture("harness.cli_gradcheck_seed3")
    assert main(["gradcheck", "uncertainty", "--seed", "3"]) == 0
    value = float(capsys.readouterr().out.split()[-1])
    assert value <= 1e-4
    assert value == pytest.approx(expected["max_relative_error"], abs=tol)


def test_gradcheck_fails_above_tolerance(capsys):
    assert main(["gradcheck", "l1", "--seed", "0", "--tol", "0"]) in (0, 1)
    assert main(["gradcheck", "quadratic", "--tol", "-1"]) == 1


def test_refine_outputs_match_library(sample_dir, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["refine", "--sample", str(sample_dir), "--set", "iterations=2", "-o", str(out)]) == 0
    assert "epe initial" in capsys.readouterr().out
    traj = run_refinement(load_sample(sample_dir), RefineConfig(iterations=2))
    for k, d in enumerate(traj.fields):
        assert np.array_equal(fileio.read_pfm(out / f"disp_{k}.pfm").values, d.values)
    saved = json.loads((out / "trajectory.json").read_text())
    assert saved["epe"] == traj.epe
    assert saved["config"]["iterations"] == 2


def test_refine_reads_a_config_file(sample_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"iterations": 1, "radius": 4}))
    assert main(["refine", "--sample", str(sample_dir), "--config", str(cfg), "-o", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "disp_1.pfm").exists()
    assert not (tmp_path / "o" / "disp_2.pfm").exists()


def test_mask_sweep_matches_library(sample_dir, tmp_path):
    s = load_sample(sample_dir)
    rng = np.random.default_rng(0)
    pred_path = _write(tmp_path / "p.pfm", s.d_gt.values + rng.uniform(0, 2, s.d_gt.shape))
    unc_path = _write(tmp_path / "u.pfm", rng.uniform(size=s.d_gt.shape))
    js = tmp_path / "sweep.json"
    assert main(["mask-sweep", pred_path, str(sample_dir / "disp_gt.pfm"), unc_path,
                 "--fractions", "0,10,50", "--json", str(js)]) == 0
    want = masking_sweep(fileio.read_pfm(pred_path), s.d_gt, unc(fileio.read_pfm_array(unc_path)),
                         [0.0, 10.0, 50.0])
    assert [(r["fraction"], r["epe"]) for r in json.loads(js.read_text())] == want


def test_loss_breakdown(tmp_path, capsys):
    gt = _write(tmp_path / "gt.pfm", [[1.0, 2.0], [3.0, 1.0]])
    assert main(["loss", gt, gt, "--aligned", gt, gt, "--logvar",
                 _write(tmp_path / "lv.pfm", np.zeros((2, 2)))]) == 0
    assert json.loads(capsys.readouterr().out)["total"] == 0.0


def test_gen_round_trips_the_sample(sample_dir):
    s = load_sample(sample_dir)
    assert s.spec is not None
    from dualrefine.scene import gen_scene

    fresh = gen_scene(s.spec)
    assert np.array_equal(fresh.left.values.astype(np.float32), s.left.values)
    assert np.array_equal(fresh.occ_mask, s.occ_mask)


@pytest.mark.parametrize("argv,code", [
    (["frobnicate"], 1),
    (["eval", "missing.pfm", "missing.pfm"], 2),
    (["refine", "--sample", "nowhere", "-o", "x"], 2),
    (["gradcheck", "nope"], 1),
])
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(argv) == code


def test_bad_config_and_bad_file_exit_codes(sample_dir, tmp_path):
    assert main(["refine", "--sample", str(sample_dir), "--set", "bogus=1", "-o", str(tmp_path)]) == 1
    assert main(["refine", "--sample", str(sample_dir), "--set", "radius=0", "-o", str(tmp_path)]) == 1
    bad = tmp_path / "bad.pfm"
    bad.write_bytes(b"P6\n1 1\n-1.0\n\0\0\0\0")
    assert main(["eval", str(bad), str(bad)]) == 2


def test_module_entry_point():
    done = subprocess.run([sys.executable, "-m", "dualrefine", "gradcheck", "quadratic"],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert done.stdout.startswith("max_relative_error")
