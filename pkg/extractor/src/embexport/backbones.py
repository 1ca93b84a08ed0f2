"""Backbone constructors.

Image features come from a torchvision ResNet-50 with the classifier
removed (2048-d pooled output). Video features come from a compact
two-pathway 3D convolutional network: a slow pathway over 8 frames and
a fast pathway over 32, pooled and concatenated.

Weight files are optional; without one the backbone is seeded randomly,
which keeps exports deterministic and is sufficient for format and
pipeline testing."""

from __future__ import annotations

import torch
import torch.nn as nn
import torchvision


class PooledResNet(nn.Module):
    def __init__(self):
        super().__init__()
        base = torchvision.models.resnet50(weights=None)
        self.features = nn.Sequential(*list(base.children())[:-1])
        self.dim = 2048

    def forward(self, x):
        return self.features(x).flatten(1)


class _Pathway(nn.Module):
    def __init__(self, width: int):
        super().__init__()
        self.net = nn.Sequential(
            nn.Conv3d(3, width, kernel_size=(3, 7, 7), stride=(1, 4, 4), padding=(1, 3, 3)),
            nn.ReLU(inplace=True),
            nn.Conv3d(width, 2 * width, kernel_size=3, stride=(2, 2, 2), padding=1),
            nn.ReLU(inplace=True),
            nn.AdaptiveAvgPool3d(1),
        )
        self.dim = 2 * width

    def forward(self, x):
        return self.net(x).flatten(1)


class TwoPathwayVideoNet(nn.Module):
    def __init__(self, slow_width: int = 64, fast_width: int = 8):
        super().__init__()
        self.slow = _Pathway(slow_width)
        self.fast = _Pathway(fast_width)
        self.dim = self.slow.dim + self.fast.dim

    def forward(self, slow_frames, fast_frames):
        return torch.cat([self.slow(slow_frames), self.fast(fast_frames)], dim=1)


def build_image_backbone(name: str = "resnet50", weights_path=None, seed: int = 0) -> PooledResNet:
    if name != "resnet50":
        raise ValueError(f"unknown image backbone {name!r}")
    torch.manual_seed(seed)
    model = PooledResNet()
    if weights_path is not None:
        model.load_state_dict(torch.load(weights_path, map_location="cpu"))
    model.eval()
    return model


def build_video_backbone(name: str = "twopath", weights_path=None, seed: int = 0) -> TwoPathwayVideoNet:
    if name != "twopath":
        raise ValueError(f"unknown video backbone {name!r}")
    torch.manual_seed(seed)
    model = TwoPathwayVideoNet()
    if weights_path is not None:
        model.load_state_dict(torch.load(weights_path, map_location="cpu"))
    model.eval()
    return model
