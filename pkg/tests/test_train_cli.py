import json
import os

import numpy as np
import pytest

from stepalign.checkpoint import load_checkpoint, save_checkpoint
from stepalign.cli import main
from stepalign.model import AlignmentModel
from stepalign.train import TrainConfig


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    rc = main(["synth", "--manuals", "8", "--d-raw", "16", "--sigma", "0.5",
               "--seed", "1", "--out", str(out)])
    assert rc == 0
    rc = main(["split", "--manifest", str(out / "manifest.json"), "--seed", "0"])
    assert rc == 0
    return out


def data_args(d):
    return ["--manifest", str(d / "manifest.json"), "--diagrams", str(d / "diagrams.emb"),
            "--clips", str(d / "clips.emb")]


def test_checkpoint_round_trip(tmp_path):
    model = AlignmentModel.create(10, 6, seed=3)
    path = tmp_path / "ckpt.emb"
    save_checkpoint(model, path)
    again = load_checkpoint(path)
    for (k1, v1), (k2, v2) in zip(sorted(model.params().items()), sorted(again.params().items())):
        assert k1 == k2
        np.testing.assert_allclose(v1, np.asarray(v2, dtype=np.float64), atol=1e-6)


def test_train_config_file_round_trip(tmp_path):
    cfg_path = tmp_path / "train.cfg"
    cfg_path.write_text("losses=vm,m\nbatch_size=32\nepochs=2\nlr=1e-3\nseed=9\n")
    cfg = TrainConfig.from_file(cfg_path)
    assert cfg.losses == ("vm", "m")
    assert cfg.batch_size == 32 and cfg.epochs == 2 and cfg.seed == 9
    assert cfg.lr == pytest.approx(1e-3)
    # defaults kept where unset
    assert cfg.weight_decay == pytest.approx(5e-3)
    assert cfg.epochs == 2


def test_train_config_defaults_match_published_settings():
    cfg = TrainConfig()
    assert cfg.lr == pytest.approx(5e-4)
    assert cfg.weight_decay == pytest.approx(5e-3)
    assert cfg.epochs == 20
    assert cfg.batch_size == 128


def test_train_config_rejects_unknown_key(tmp_path):
    cfg_path = tmp_path / "bad.cfg"
    cfg_path.write_text("bogus=1\n")
    with pytest.raises(ValueError):
        TrainConfig.from_file(cfg_path)


def test_train_smoke_and_artifacts(synth_dir, tmp_path):
    out = tmp_path / "run"
    rc = main(["train", *data_args(synth_dir), "--losses", "vm,m", "--epochs", "2",
               "--batch-size", "32", "--d-out", "16", "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert (out / "checkpoint.emb").exists()
    log = (out / "train_log.csv").read_text().splitlines()
    assert log[0].startswith("epoch,")
    assert len(log) == 3  # header + 2 epochs
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["command"] == "train"
    assert manifest["config"]["lr"] == pytest.approx(5e-4)
    assert manifest["config"]["weight_decay"] == pytest.approx(5e-3)


def test_align_and_evaluate_and_retrieve(synth_dir, tmp_path):
    run = tmp_path / "run"
    rc = main(["train", *data_args(synth_dir), "--losses", "vm", "--epochs", "1",
               "--batch-size", "16", "--d-out", "16", "--seed", "1", "--out", str(run)])
    assert rc == 0
    ckpt = str(run / "checkpoint.emb")

    align_out = tmp_path / "align"
    rc = main(["align", *data_args(synth_dir), "--checkpoint", ckpt, "--method", "dtw",
               "--dump-matrices", "--out", str(align_out)])
    assert rc == 0
    csv_lines = (align_out / "alignment_dtw.csv").read_text().splitlines()
    assert csv_lines[0] == "video_id,segment_id,predicted_index,score"
    assert len(csv_lines) > 1
    assert any(f.endswith("_S.emb") for f in os.listdir(align_out))

    eval_out = tmp_path / "eval"
    rc = main(["evaluate", *data_args(synth_dir), "--checkpoint", ckpt,
               "--method", "ot", "--out", str(eval_out)])
    assert rc == 0
    report = (eval_out / "report_test_ot.csv").read_text().splitlines()
    assert report[0] == "granularity,top1,aie,recall1,recall3,auroc_v2i,auroc_i2v"
    assert len(report) == 3  # step + page

    # retrieve against a known test segment
    manifest = json.loads((synth_dir / "manifest.json").read_text())
    test_vids = [v for v, s in manifest["splits"].items() if s == "test"]
    seg = next(v["segments"][0]["segment_id"] for v in manifest["videos"] if v["video_id"] == test_vids[0])
    rc = main(["retrieve", *data_args(synth_dir), "--checkpoint", ckpt, "--query", seg,
               "--direction", "V2I", "-k", "3"])
    assert rc == 0


def test_retrieve_unknown_query_exit_code(synth_dir, tmp_path):
    run = tmp_path / "run"
    main(["train", *data_args(synth_dir), "--losses", "vm", "--epochs", "1",
          "--batch-size", "16", "--d-out", "16", "--seed", "1", "--out", str(run)])
    rc = main(["retrieve", *data_args(synth_dir), "--checkpoint", str(run / "checkpoint.emb"),
               "--query", "nope", "--direction", "V2I", "-k", "1"])
    assert rc == 1


def test_gradcheck_command():
    assert main(["gradcheck", "--instances", "1"]) == 0


def test_missing_manifest_exit_code(tmp_path):
    rc = main(["train", "--manifest", str(tmp_path / "missing.json"),
               "--diagrams", "x", "--clips", "y", "--out", str(tmp_path / "o")])
    assert rc == 1
