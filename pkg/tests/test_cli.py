import numpy as np
import pytest

from mcforge import (constant_trajectory, load_image, phantom, read_report,
                     save_image, save_trajectory, ssim)
from mcforge.cli import run


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["generate", "--bogus", "1"])
    assert exc.value.code == 2


def test_missing_subcommand_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        run([])
    assert exc.value.code == 2


def test_missing_input_exits_one(tmp_path, capsys):
    code = run(["corrupt", "--in", str(tmp_path / "nope.mcf"),
                "--traj", str(tmp_path / "t.txt"), "--out", str(tmp_path / "y.mcf")])
    assert code == 1
    assert "nope.mcf" in capsys.readouterr().err


def test_corrupt_zero_trajectory_is_identity(tmp_path, capsys):
    img = phantom("shepp_logan", 64)
    save_image(tmp_path / "x.mcf", img)
    save_trajectory(tmp_path / "zero.txt", constant_trajectory(64))
    code = run(["corrupt", "--in", str(tmp_path / "x.mcf"),
                "--traj", str(tmp_path / "zero.txt"),
                "--out", str(tmp_path / "y.mcf"),
                "--pgm", str(tmp_path / "y.pgm")])
    assert code == 0
    out = load_image(tmp_path / "y.mcf")
    assert ssim(out, img) >= 0.999
    assert (tmp_path / "y.pgm").exists()


def test_corrupt_trajectory_length_mismatch(tmp_path, capsys):
    save_image(tmp_path / "x.mcf", phantom("shepp_logan", 32))
    save_trajectory(tmp_path / "t.txt", constant_trajectory(16))
    code = run(["corrupt", "--in", str(tmp_path / "x.mcf"),
                "--traj", str(tmp_path / "t.txt"), "--out", str(tmp_path / "y.mcf")])
    assert code == 1


@pytest.fixture(scope="module")
def generated(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli") / "ds"
    code = run(["generate", "--out", str(root), "--images", "9",
                "--trajectories", "5", "--size", "32", "--seed", "11"])
    assert code == 0
    return root


def test_generate_then_evaluate_without_model(generated, tmp_path, capsys):
    report = tmp_path / "report.csv"
    code = run(["evaluate", "--data", str(generated / "manifest.csv"),
                "--out", str(report)])
    assert code == 0
    text = capsys.readouterr().out
    assert "ssim_in" in text and "ssim_out" not in text.split("vs severity")[0]
    rows = read_report(report)
    assert len(rows) == 9
    assert all(np.isnan(r.ssim_out) for r in rows)


def test_generate_deterministic(generated, tmp_path_factory):
    again = tmp_path_factory.mktemp("cli2") / "ds"
    code = run(["generate", "--out", str(again), "--images", "9",
                "--trajectories", "5", "--size", "32", "--seed", "11"])
    assert code == 0
    a = (generated / "manifest.csv").read_bytes()
    b = (again / "manifest.csv").read_bytes()
    assert a == b


def test_train_evaluate_infer_report_pipeline(generated, tmp_path, capsys):
    model = tmp_path / "model.mcp"
    hist = tmp_path / "hist.csv"
    code = run(["train", "--data", str(generated / "manifest.csv"),
                "--out", str(model), "--history", str(hist),
                "--depth", "2", "--base-channels", "4",
                "--stage1-epochs", "2", "--stage2-epochs", "1",
                "--batch", "4", "--seed", "3"])
    assert code == 0
    assert model.exists()
    assert hist.read_text().startswith("# stage stage1")

    report = tmp_path / "report.csv"
    code = run(["evaluate", "--data", str(generated / "manifest.csv"),
                "--model", str(model), "--split", "test", "--out", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert "ssim_out" in out
    rows = read_report(report)
    assert rows and all(not np.isnan(r.ssim_out) for r in rows)

    outdir = tmp_path / "fixed"
    clean0 = str(generated / "corrupted" / "img0000.mcf")
    code = run(["infer", "--model", str(model), "--in", clean0,
                "--out-dir", str(outdir)])
    assert code == 0
    assert (outdir / "img0000.mcf").exists()
    assert "ms/image" in capsys.readouterr().out

    code = run(["report", "--metrics", str(report)])
    assert code == 0
    out = capsys.readouterr().out
    assert "[0,5]" in out and "ssim_in" in out


def test_evaluate_model_fills_without_changing_in_columns(generated, tmp_path):
    model = tmp_path / "m.mcp"
    run(["train", "--data", str(generated / "manifest.csv"), "--out", str(model),
         "--depth", "2", "--base-channels", "4", "--stage1-epochs", "1",
         "--stage2-epochs", "0", "--batch", "4", "--seed", "4"])
    plain = tmp_path / "plain.csv"
    with_model = tmp_path / "model.csv"
    run(["evaluate", "--data", str(generated / "manifest.csv"), "--out", str(plain)])
    run(["evaluate", "--data", str(generated / "manifest.csv"),
         "--model", str(model), "--out", str(with_model)])
    a = read_report(plain)
    b = read_report(with_model)
    assert [(r.pair, r.ssim_in, r.psnr_in) for r in a] == \
        [(r.pair, r.ssim_in, r.psnr_in) for r in b]
