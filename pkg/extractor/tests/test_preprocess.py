import numpy as np
from PIL import Image

from embexport.preprocess import (
    pathway_indices,
    prepare_clip,
    prepare_diagram,
    prepare_frame,
    window_frames,
)


def test_diagram_long_side_downsampled_and_padded_white():
    image = Image.new("RGB", (448, 224), (0, 0, 0))
    arr = prepare_diagram(image)
    assert arr.shape == (3, 224, 224)
    # black content occupies a 224x112 band, white padding above and below
    assert np.all(arr[:, 56:168, :] == 0.0)
    assert np.all(arr[:, :56, :] == 1.0)
    assert np.all(arr[:, 168:, :] == 1.0)


def test_diagram_portrait_pads_sides():
    image = Image.new("RGB", (100, 400), (0, 0, 0))
    arr = prepare_diagram(image)
    assert arr.shape == (3, 224, 224)
    assert np.all(arr[:, :, 0] == 1.0) and np.all(arr[:, :, -1] == 1.0)


def test_frame_short_side_resized_and_cropped():
    frame = np.zeros((112, 400, 3), dtype=np.uint8)
    arr = prepare_frame(frame)
    assert arr.shape == (3, 224, 224)


def test_window_back_pads_with_last_frame():
    frames = np.stack([np.full((8, 8, 3), i, dtype=np.uint8) for i in range(40)])
    window = window_frames(frames, 10)
    assert window.shape[0] == 64
    assert np.all(window[29] == 39)
    assert np.all(window[30:] == 39)  # repeated final frame


def test_window_start_out_of_range():
    frames = np.zeros((10, 8, 8, 3), dtype=np.uint8)
    try:
        window_frames(frames, 10)
        assert False
    except IndexError:
        pass


def test_pathway_indices_uniform_and_increasing():
    slow, fast = pathway_indices()
    assert len(slow) == 8 and len(fast) == 32
    assert np.all(np.diff(slow) == 8) and np.all(np.diff(fast) == 2)
    assert slow[0] == 0 and fast[0] == 0


def test_prepare_clip_shapes():
    frames = np.zeros((70, 32, 32, 3), dtype=np.uint8)
    slow, fast = prepare_clip(frames, 0)
    assert slow.shape == (3, 8, 224, 224)
    assert fast.shape == (3, 32, 224, 224)
