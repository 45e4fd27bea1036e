import numpy as np
import pytest

from lada.cli import ARTIFACTS, main
from lada.raster import read_float_map, read_pgm, write_float_map, write_pgm, ScalarMap

CYLINDER_CFG = """
# small layered phantom
width=40
height=60
boundary_rows=20,40
layer_bases=100,300,500
layer_col_gradients=0.2,0.1,0.3
noise_sigma=4
void_half_width=3
"""

RING_CFG = """
width=48
height=48
center_row=23.5
center_col=23.5
radii=8,16
annulus_intensities=100,300,500
noise_sigma=3
void_half_width=2
"""


@pytest.fixture()
def cylinder_run(tmp_path):
    cfg = tmp_path / "cylinder.cfg"
    cfg.write_text(CYLINDER_CFG)
    phantom_dir = tmp_path / "phantom"
    code = main(["phantom", "cylinder", "--config", str(cfg), "--seed", "7",
                 "--out", str(phantom_dir)])
    assert code == 0
    return tmp_path, phantom_dir


def test_phantom_writes_deterministic_triple(cylinder_run, tmp_path):
    _, phantom_dir = cylinder_run
    for name in ("image.pgm", "mask.pgm", "truth.csv"):
        assert (phantom_dir / name).is_file()
    again = tmp_path / "again"
    cfg = tmp_path / "cylinder.cfg"
    assert main(["phantom", "cylinder", "--config", str(cfg), "--seed", "7",
                 "--out", str(again)]) == 0
    for name in ("image.pgm", "mask.pgm", "truth.csv"):
        assert (phantom_dir / name).read_bytes() == (again / name).read_bytes()
    truth = (phantom_dir / "truth.csv").read_text().splitlines()
    assert truth == ["interface_row", "19.5", "39.5"]


def test_segment_produces_full_artifact_set(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    out = tmp_path / "run"
    code = main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "-d", "6", "-n", "6", "--alpha", "0.05",
        "--out", str(out),
    ])
    assert code == 0
    for name in ARTIFACTS + ("run_report.txt",):
        assert (out / name).is_file(), name
    labels = read_pgm((out / "labels.pgm").read_bytes(), as_mask=True)
    assert set(np.unique(labels.labels).tolist()) <= {1, 2, 3, 4}
    mle = read_float_map((out / "mle_p.csv").read_bytes())
    assert mle.values.shape == (60, 40)
    report = (out / "run_report.txt").read_text()
    assert "bonus_fraction=" in report and "training_consistency=" in report
    assert "status=ok" in report
    rows = (out / "boundaries.csv").read_text().strip().splitlines()
    assert rows[0].startswith("class_a,class_b,model")
    assert len(rows) == 3  # header + the (1,2) and (2,3) interfaces


def test_reruns_and_thread_counts_are_byte_identical(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    outs = []
    for name, threads in (("a", "1"), ("b", "1"), ("c", "4")):
        out = tmp_path / name
        code = main([
            "segment",
            "--image", str(phantom_dir / "image.pgm"),
            "--mask", str(phantom_dir / "mask.pgm"),
            "-d", "6", "-n", "6", "--threads", threads,
            "--out", str(out),
        ])
        assert code == 0
        outs.append(out)
    for name in ARTIFACTS:  # run_report.txt carries timings, excluded
        blobs = [(o / name).read_bytes() for o in outs]
        assert blobs[0] == blobs[1] == blobs[2], name


def test_qda_subcommand_runs(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    out = tmp_path / "qda"
    code = main([
        "qda",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "--out", str(out),
    ])
    assert code == 0
    assert (out / "labels.pgm").is_file()
    assert "mode=qda" in (out / "run_report.txt").read_text()


def test_config_file_supplies_defaults_and_flags_override(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        f"image={phantom_dir / 'image.pgm'}\n"
        f"mask={phantom_dir / 'mask.pgm'}\n"
        "radius=6\nmax_samples=6\nalpha=0.1\n"
    )
    out = tmp_path / "cfg_run"
    assert main(["segment", "--config", str(cfg), "--alpha", "0.05",
                 "--out", str(out)]) == 0
    report = (out / "run_report.txt").read_text()
    assert "alpha=0.05" in report
    assert "radius=6" in report


def test_missing_mask_file_exits_2(cylinder_run, capsys):
    tmp_path, phantom_dir = cylinder_run
    code = main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(tmp_path / "nope.pgm"),
        "-d", "6", "-n", "6",
    ])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_missing_required_parameters_exit_2(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    assert main(["segment", "--image", str(phantom_dir / "image.pgm"),
                 "--mask", str(phantom_dir / "mask.pgm")]) == 2


def test_unknown_flag_exits_2(capsys):
    assert main(["segment", "--bogus"]) == 2
    capsys.readouterr()


def test_fit_failure_exits_3_with_partial_artifacts(tmp_path, capsys):
    # a 3x1 label map makes every interface collinear: circle fits must fail
    labels = np.array([[1], [2], [1]], dtype=np.int32)
    (tmp_path / "labels.pgm").write_bytes(write_pgm(labels))
    pmap = ScalarMap(np.full((3, 1), 0.5))
    (tmp_path / "p.csv").write_bytes(write_float_map(pmap))
    out = tmp_path / "bd"
    code = main([
        "boundaries",
        "--labels", str(tmp_path / "labels.pgm"),
        "--classes", "2",
        "--pmap", str(tmp_path / "p.csv"),
        "--boundary-model", "circle",
        "--out", str(out),
    ])
    assert code == 3
    assert (out / "boundaries.csv").is_file()  # partial artifacts retained
    assert (out / "overlay.pgm").is_file()
    assert "fit failed" in capsys.readouterr().err


def test_boundaries_subcommand_consumes_run_artifacts(cylinder_run):
    tmp_path, phantom_dir = cylinder_run
    run = tmp_path / "run2"
    assert main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "-d", "6", "-n", "6", "--out", str(run),
    ]) == 0
    out = tmp_path / "bounds"
    code = main([
        "boundaries",
        "--labels", str(run / "labels.pgm"),
        "--classes", "3",
        "--pmap", str(run / "mle_p.csv"),
        "--image", str(phantom_dir / "image.pgm"),
        "--proximity", "3",
        "--out", str(out),
    ])
    assert code == 0
    assert (out / "boundaries.csv").read_bytes() == (run / "boundaries.csv").read_bytes()


def test_report_subcommand(cylinder_run, capsys):
    tmp_path, phantom_dir = cylinder_run
    run = tmp_path / "run3"
    assert main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "-d", "6", "-n", "6", "--out", str(run),
    ]) == 0
    assert main(["report", "--dir", str(run)]) == 0
    assert "command=lada" in capsys.readouterr().out
    assert main(["report", "--dir", str(tmp_path / "missing")]) == 2
    capsys.readouterr()


def test_env_var_sets_threads(cylinder_run, monkeypatch):
    tmp_path, phantom_dir = cylinder_run
    monkeypatch.setenv("LADA_THREADS", "2")
    out = tmp_path / "env_run"
    assert main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "-d", "6", "-n", "6", "--out", str(out),
    ]) == 0
    assert "threads=2" in (out / "run_report.txt").read_text()


def test_ring_phantom_and_circle_models(tmp_path):
    cfg = tmp_path / "ring.cfg"
    cfg.write_text(RING_CFG)
    phantom_dir = tmp_path / "ring"
    assert main(["phantom", "ring", "--config", str(cfg), "--seed", "5",
                 "--out", str(phantom_dir)]) == 0
    truth = (phantom_dir / "truth.csv").read_text().splitlines()
    assert truth[0] == "center_row,center_col,radius"
    out = tmp_path / "ring_run"
    code = main([
        "segment",
        "--image", str(phantom_dir / "image.pgm"),
        "--mask", str(phantom_dir / "mask.pgm"),
        "-d", "7", "-n", "7",
        "--boundary-model", "circle",
        "--out", str(out),
    ])
    assert code == 0
    rows = (out / "boundaries.csv").read_text().strip().splitlines()
    assert all(",circle," in r for r in rows[1:])
