import numpy as np
import pytest

from stepalign.data import manifest_to_dict, validate_dataset
from stepalign.synth import SynthConfig, generate


def test_deterministic_under_seed():
    a = generate(SynthConfig(n_manuals=3, seed=5))
    b = generate(SynthConfig(n_manuals=3, seed=5))
    assert manifest_to_dict(a[0]) == manifest_to_dict(b[0])
    for ta, tb in ((a[1], b[1]), (a[2], b[2])):
        assert set(ta.entries) == set(tb.entries)
        for k in ta.entries:
            np.testing.assert_array_equal(ta[k], tb[k])


def test_generated_dataset_validates():
    ds, diagrams, clips = generate(SynthConfig(n_manuals=4, seed=0))
    report = validate_dataset(ds, diagrams, clips)
    assert report.ok
    for video in ds.videos.values():
        for seg in video.segments:
            assert seg.gt_step_index is not None


def test_noiseless_zero_drift_perfect_retrieval():
    ds, diagrams, clips = generate(SynthConfig(n_manuals=5, noise_sigma=0.0, drift=0.0, seed=1))
    correct = total = 0
    for video in ds.videos.values():
        manual = ds.manuals[video.manual_id]
        protos = np.stack([diagrams[d.diagram_id] for d in manual.steps])
        for seg in video.segments:
            sims = protos @ clips[seg.segment_id]
            correct += int(np.argmax(sims) + 1 == seg.gt_step_index)
            total += 1
    assert correct == total


def test_huge_noise_approaches_chance():
    ds, diagrams, clips = generate(
        SynthConfig(n_manuals=30, min_steps=6, max_steps=6, noise_sigma=1e4, drift=0.0, seed=2)
    )
    correct = total = 0
    for video in ds.videos.values():
        manual = ds.manuals[video.manual_id]
        protos = np.stack([diagrams[d.diagram_id] for d in manual.steps])
        for seg in video.segments:
            sims = protos @ clips[seg.segment_id]
            correct += int(np.argmax(sims) + 1 == seg.gt_step_index)
            total += 1
    rate = correct / total
    chance = 1 / 6
    sigma = np.sqrt(chance * (1 - chance) / total)
    assert abs(rate - chance) <= 4 * sigma


def test_high_drift_adjacent_similarity():
    cfg = SynthConfig(n_manuals=40, min_steps=5, max_steps=10, drift=0.95, seed=3)
    ds, diagrams, _ = generate(cfg)
    sims = []
    for manual in ds.manuals.values():
        protos = [diagrams[d.diagram_id] for d in manual.steps]
        for a, b in zip(protos, protos[1:]):
            sims.append(float(np.dot(a, b)))
    assert np.mean(sims) > 0.9


def test_drift_controls_adjacent_similarity():
    sims_by_drift = []
    for drift in (0.3, 0.7):
        ds, diagrams, _ = generate(SynthConfig(n_manuals=30, drift=drift, seed=4))
        sims = []
        for manual in ds.manuals.values():
            protos = [diagrams[d.diagram_id] for d in manual.steps]
            sims.extend(float(np.dot(a, b)) for a, b in zip(protos, protos[1:]))
        sims_by_drift.append(np.mean(sims))
        assert abs(sims_by_drift[-1] - drift) < 0.05
    assert sims_by_drift[0] < sims_by_drift[1]


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        generate(SynthConfig(min_steps=0))
    with pytest.raises(ValueError):
        generate(SynthConfig(drift=1.5))
