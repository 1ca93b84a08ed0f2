import numpy as np
import pytest
from hypothesis import given, strategies as st

from stepalign.features import (
    ProjectionHead,
    augment,
    progress_rate_diagram,
    progress_rate_video,
    project,
    project_backward,
    project_forward,
    sprf,
)


def test_progress_rate_video_values():
    assert progress_rate_video(2, 4, 10) == pytest.approx(0.3)
    assert progress_rate_video(0, 10, 10) == pytest.approx(0.5)
    assert progress_rate_video(0, 0, 10) == 0.0


def test_progress_rate_video_rejects_bad_times():
    with pytest.raises(ValueError):
        progress_rate_video(5, 3, 10)
    with pytest.raises(ValueError):
        progress_rate_video(0, 1, 0)


def test_progress_rate_diagram_values():
    assert progress_rate_diagram(1, 4) == pytest.approx(0.25)
    assert progress_rate_diagram(4, 4) == 1.0
    assert progress_rate_diagram(2, 3) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        progress_rate_diagram(0, 4)


def test_sprf_endpoints():
    np.testing.assert_allclose(sprf(0.0), [0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(sprf(0.5), [1.0, 0.0], atol=1e-15)
    np.testing.assert_allclose(sprf(1.0), [0.0, -1.0], atol=1e-15)


@given(st.floats(0, 1), st.floats(0, 1))
def test_sprf_dot_is_cosine_of_rate_gap(r1, r2):
    dot = float(sprf(r1) @ sprf(r2))
    assert abs(dot - np.cos(np.pi * (r1 - r2))) <= 1e-12


def test_augment_unit_vector_case():
    f = np.zeros(4)
    f[0] = 1.0
    out = augment(f, 0.0)
    np.testing.assert_allclose(out, np.array([1, 0, 0, 0, 0, 1]) / np.sqrt(2))


def test_augment_scale_invariant():
    rng = np.random.default_rng(0)
    f = rng.normal(size=8)
    np.testing.assert_allclose(augment(f, 0.3), augment(5.5 * f, 0.3), atol=1e-12)


def test_augment_output_unit_norm():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 6))
    out = augment(X, rng.uniform(0, 1, 10))
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


def test_augment_rejects_zero_vector():
    with pytest.raises(ValueError):
        augment(np.zeros(4), 0.5)


def test_project_identity_configuration():
    head = ProjectionHead(W1=np.eye(4), b1=np.zeros(4), W2=np.eye(4), b2=np.zeros(4))
    x = np.array([0.5, 0.5, 0.5, 0.5])
    np.testing.assert_allclose(project(head, x), x, atol=1e-12)


def test_project_output_unit_norm():
    rng = np.random.default_rng(2)
    head = ProjectionHead.create(6, 3, rng=rng)
    out = project(head, rng.normal(size=(7, 6)))
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-12)


def test_project_matches_scalar_oracle():
    rng = np.random.default_rng(3)
    head = ProjectionHead.create(4, 3, hidden=4, rng=rng)
    x = rng.normal(size=4)
    # independent scalar re-evaluation
    a = [sum(x[i] * head.W1[i, j] for i in range(4)) + head.b1[j] for j in range(4)]
    h = [max(v, 0.0) for v in a]
    y = [sum(h[i] * head.W2[i, j] for i in range(4)) + head.b2[j] for j in range(3)]
    norm = sum(v * v for v in y) ** 0.5
    expected = np.array([v / norm for v in y])
    np.testing.assert_allclose(project(head, x), expected, atol=1e-6)


def test_project_dim_mismatch():
    head = ProjectionHead.create(4, 3)
    with pytest.raises(ValueError):
        project(head, np.ones(5))


def test_projection_jacobian_matches_finite_differences():
    rng = np.random.default_rng(4)
    head = ProjectionHead.create(5, 4, rng=rng)
    x = rng.normal(size=(3, 5))
    w = rng.normal(size=(3, 4))  # random linear functional of the output

    f, cache = project_forward(head, x)
    grads = project_backward(head, cache, w)
    h = 1e-6
    for name, p in head.params().items():
        flat = p.reshape(-1)
        for k in rng.choice(flat.size, size=min(10, flat.size), replace=False):
            orig = flat[k]
            flat[k] = orig + h
            fp = float((project(head, x) * w).sum())
            flat[k] = orig - h
            fm = float((project(head, x) * w).sum())
            flat[k] = orig
            num = (fp - fm) / (2 * h)
            ana = grads[name].reshape(-1)[k]
            assert abs(num - ana) <= 1e-4 * max(1.0, abs(num)), (name, k)
