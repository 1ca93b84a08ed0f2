import json

import numpy as np
import pytest

from stepalign.data import (
    EmbeddingFormatError,
    EmbeddingTable,
    ManifestError,
    load_manifest,
    manifest_from_dict,
    manifest_to_dict,
    read_embedding_table,
    save_manifest,
    validate_dataset,
    write_embedding_table,
)


def small_manifest():
    return {
        "manuals": [
            {"manual_id": "m1", "furniture_id": "f1", "steps": ["m1/s1", "m1/s2", "m1/s3"], "pages": ["m1/p1"]}
        ],
        "videos": [
            {
                "video_id": "v1",
                "manual_id": "m1",
                "duration": 30.0,
                "fps": 30,
                "segments": [
                    {"segment_id": "v1/seg0", "t_start": 0.0, "t_end": 10.0, "gt_step_index": 1, "gt_page_index": 1},
                    {"segment_id": "v1/seg1", "t_start": 10.0, "t_end": 20.0, "gt_step_index": 2, "gt_page_index": 1},
                ],
            }
        ],
        "splits": {"v1": "train"},
    }


def test_load_counts(tmp_path):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(small_manifest()))
    ds = load_manifest(path)
    assert ds.manuals["m1"].num_steps == 3
    assert len(ds.videos["v1"].segments) == 2


def test_unknown_manual_reported():
    doc = small_manifest()
    doc["videos"][0]["manual_id"] = "X"
    with pytest.raises(ManifestError, match="X"):
        manifest_from_dict(doc)


def test_invalid_step_index():
    doc = small_manifest()
    doc["videos"][0]["segments"][0]["gt_step_index"] = 9
    with pytest.raises(ManifestError, match="seg0"):
        manifest_from_dict(doc)


def test_iaw_scale_header_counts():
    # 420 furniture items, 1005 videos: counts echoed by summary
    doc = {"manuals": [], "videos": [], "splits": {}}
    for i in range(420):
        doc["manuals"].append({"manual_id": f"m{i}", "furniture_id": f"f{i}", "steps": [f"m{i}/s1"], "pages": []})
    for i in range(1005):
        doc["videos"].append({"video_id": f"v{i}", "manual_id": f"m{i % 420}", "duration": 10.0, "segments": []})
    ds = manifest_from_dict(doc)
    summary = ds.summary()
    assert summary["furniture"] == 420
    assert summary["videos"] == 1005


def test_manifest_round_trip(tmp_path):
    ds = manifest_from_dict(small_manifest())
    path = tmp_path / "m.json"
    save_manifest(ds, path)
    again = load_manifest(path)
    assert manifest_to_dict(again) == manifest_to_dict(ds)


def test_emb_round_trip(tmp_path):
    table = EmbeddingTable(2, {"a": [1.0, 0.0], "b": [0.0, 1.0]})
    path = tmp_path / "t.emb"
    write_embedding_table(table, path)
    again = read_embedding_table(path)
    assert again.dim == 2
    assert set(again.entries) == {"a", "b"}
    np.testing.assert_array_equal(again["a"], table["a"])
    # byte-exact: writing the reread table reproduces the file
    path2 = tmp_path / "t2.emb"
    write_embedding_table(again, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_emb_truncation_detected(tmp_path):
    table = EmbeddingTable(2, {"a": [1.0, 0.0], "b": [0.0, 1.0], "c": [1.0, 1.0]})
    path = tmp_path / "t.emb"
    write_embedding_table(table, path)
    raw = path.read_bytes()
    bad = tmp_path / "bad.emb"
    bad.write_bytes(raw[:-4])  # cut into the last vector
    with pytest.raises(EmbeddingFormatError, match="truncated"):
        read_embedding_table(bad)


def test_emb_bad_magic(tmp_path):
    path = tmp_path / "bad.emb"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(EmbeddingFormatError, match="magic"):
        read_embedding_table(path)


@pytest.mark.slow
def test_emb_step_diagram_scale(tmp_path):
    # 8,263 step diagrams at dim 1024
    rng = np.random.default_rng(0)
    entries = {f"d{i:05d}": rng.standard_normal(1024).astype(np.float32) for i in range(8263)}
    table = EmbeddingTable(1024, entries)
    path = tmp_path / "big.emb"
    write_embedding_table(table, path)
    again = read_embedding_table(path)
    assert len(again) == 8263
    np.testing.assert_array_equal(again["d04242"], table["d04242"])


def test_validate_complete_dataset():
    ds = manifest_from_dict(small_manifest())
    diagrams = EmbeddingTable(4, {d: [1, 0, 0, 0] for d in ["m1/s1", "m1/s2", "m1/s3", "m1/p1"]})
    clips = EmbeddingTable(4, {s: [0, 1, 0, 0] for s in ["v1/seg0", "v1/seg1"]})
    report = validate_dataset(ds, diagrams, clips)
    assert report.ok


def test_validate_missing_diagram():
    ds = manifest_from_dict(small_manifest())
    diagrams = EmbeddingTable(4, {d: [1, 0, 0, 0] for d in ["m1/s1", "m1/s2", "m1/p1"]})
    clips = EmbeddingTable(4, {s: [0, 1, 0, 0] for s in ["v1/seg0", "v1/seg1"]})
    report = validate_dataset(ds, diagrams, clips)
    assert report.missing_embeddings == ["diagram:m1/s3"]


def test_validate_split_leakage():
    doc = small_manifest()
    doc["videos"].append({"video_id": "v2", "manual_id": "m1", "duration": 5.0, "segments": []})
    doc["splits"] = {"train": ["v1", "v2"], "test": ["v2"]}
    ds = manifest_from_dict(doc)
    diagrams = EmbeddingTable(4, {d: [1, 0, 0, 0] for d in ["m1/s1", "m1/s2", "m1/s3", "m1/p1"]})
    clips = EmbeddingTable(4, {s: [0, 1, 0, 0] for s in ["v1/seg0", "v1/seg1"]})
    report = validate_dataset(ds, diagrams, clips)
    assert report.leakage == ["v2"]
