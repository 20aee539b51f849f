"""Fully convolutional segmentation network for radar scan stacks.

Encoder-decoder with exactly four max-pooling stages (bottleneck at 1/16
of the input), dilated convolutions in the encoder to grow the receptive
field quickly, an atrous spatial pyramid pooling block whose branches are
concatenated and reduced to 256 channels, and a decoder that fuses the
upsampled context with a high-resolution skip (256 + 48 = 304 feature
maps) before the class logits are bilinearly upsampled to the input size.
Depthwise separable convolutions are used throughout.

The temporal signal enters purely through the three input channels
(consecutive aligned scans); there are no recurrent units.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn.functional as F
from torch import nn


class ConfigError(ValueError):
    """Network configuration or input shape violates an invariant."""


@dataclass(frozen=True)
class NetworkConfig:
    num_classes: int = 7
    input_channels: int = 3
    base_width: int = 16            # channel multiplier; 96 at full scale
    aspp_rates: tuple = (6, 12, 18)
    encoder_dilations: tuple = (1, 2, 4, 8)
    aspp_channels: int = 256
    skip_channels: int = 48

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError("need at least 2 classes")
        if self.input_channels < 1:
            raise ConfigError("need at least 1 input channel")
        if self.base_width < 1:
            raise ConfigError("base width must be positive")
        if len(self.encoder_dilations) != 4:
            raise ConfigError("one dilation per encoder stage (4 stages)")


FULL_SCALE = NetworkConfig(base_width=104)

POOL_FACTOR = 16  # four 2x max-pools


class DepthwiseSeparableConv(nn.Module):
    """3x3 depthwise + 1x1 pointwise convolution, BN and ReLU after each."""

    def __init__(self, in_ch, out_ch, dilation=1):
        super().__init__()
        self.depthwise = nn.Conv2d(in_ch, in_ch, 3, padding=dilation,
                                   dilation=dilation, groups=in_ch,
                                   bias=False)
        self.bn_dw = nn.BatchNorm2d(in_ch)
        self.pointwise = nn.Conv2d(in_ch, out_ch, 1, bias=False)
        self.bn_pw = nn.BatchNorm2d(out_ch)

    def forward(self, x):
        x = F.relu(self.bn_dw(self.depthwise(x)))
        return F.relu(self.bn_pw(self.pointwise(x)))


class Aspp(nn.Module):
    """Atrous spatial pyramid pooling: 1x1 + dilated branches + global
    average pooling, concatenated and reduced to ``out_ch`` channels."""

    def __init__(self, in_ch, out_ch, rates):
        super().__init__()
        self.conv1x1 = nn.Sequential(nn.Conv2d(in_ch, out_ch, 1, bias=False),
                                     nn.BatchNorm2d(out_ch), nn.ReLU())
        self.branches = nn.ModuleList(
            [DepthwiseSeparableConv(in_ch, out_ch, dilation=r)
             for r in rates])
        # no BN on the pooled branch: its maps are 1x1 and train-mode
        # batch statistics are undefined there
        self.gap = nn.Sequential(nn.AdaptiveAvgPool2d(1),
                                 nn.Conv2d(in_ch, out_ch, 1), nn.ReLU())
        n_branches = 2 + len(rates)
        self.merge = nn.Sequential(
            nn.Conv2d(n_branches * out_ch, out_ch, 1, bias=False),
            nn.BatchNorm2d(out_ch), nn.ReLU())

    def forward(self, x):
        h, w = x.shape[-2:]
        feats = [self.conv1x1(x)]
        feats += [branch(x) for branch in self.branches]
        pooled = self.gap(x)
        feats.append(F.interpolate(pooled, size=(h, w), mode="bilinear",
                                   align_corners=False))
        return self.merge(torch.cat(feats, dim=1))


class RadarSegNet(nn.Module):
    """See the module docstring; built from a NetworkConfig."""

    def __init__(self, cfg: NetworkConfig):
        super().__init__()
        self.cfg = cfg
        b = cfg.base_width
        widths = [b, 2 * b, 4 * b, 8 * b, 16 * b]
        d = cfg.encoder_dilations
        self.stem = nn.Sequential(
            DepthwiseSeparableConv(cfg.input_channels, widths[0]),
            DepthwiseSeparableConv(widths[0], widths[0]))
        self.pool = nn.MaxPool2d(2)
        self.stage1 = nn.Sequential(
            DepthwiseSeparableConv(widths[0], widths[1], dilation=d[0]),
            DepthwiseSeparableConv(widths[1], widths[1], dilation=d[0]))
        self.stage2 = nn.Sequential(
            DepthwiseSeparableConv(widths[1], widths[2], dilation=d[1]),
            DepthwiseSeparableConv(widths[2], widths[2], dilation=d[1]))
        self.stage3 = nn.Sequential(
            DepthwiseSeparableConv(widths[2], widths[3], dilation=d[2]),
            DepthwiseSeparableConv(widths[3], widths[3], dilation=d[2]))
        self.stage4 = nn.Sequential(
            DepthwiseSeparableConv(widths[3], widths[4], dilation=d[3]),
            DepthwiseSeparableConv(widths[4], widths[4], dilation=d[3]))
        self.aspp = Aspp(widths[4], cfg.aspp_channels, cfg.aspp_rates)
        # high-resolution skip taken at 1/4 resolution (after two pools)
        self.skip = nn.Sequential(
            nn.Conv2d(widths[2], cfg.skip_channels, 1, bias=False),
            nn.BatchNorm2d(cfg.skip_channels), nn.ReLU())
        fused = cfg.aspp_channels + cfg.skip_channels  # 256 + 48 = 304
        self.decoder = nn.Sequential(
            DepthwiseSeparableConv(fused, cfg.aspp_channels),
            DepthwiseSeparableConv(cfg.aspp_channels, cfg.aspp_channels))
        self.classifier = nn.Conv2d(cfg.aspp_channels, cfg.num_classes, 1)

    def forward(self, x):
        h, w = x.shape[-2:]
        if h < POOL_FACTOR or w < POOL_FACTOR:
            raise ConfigError(
                f"input size {h}x{w} cannot survive four pooling stages")
        # sizes divisible by 16 give a bottleneck of exactly input/16;
        # other sizes (e.g. the full-scale 1000 px raster) floor through
        # the pools and are restored exactly by the stored-size upsampling
        x = self.stem(x)
        x = self.stage1(self.pool(x))     # 1/2
        low = self.stage2(self.pool(x))   # 1/4, high-resolution features
        x = self.stage3(self.pool(low))   # 1/8
        x = self.stage4(self.pool(x))     # 1/16 bottleneck
        x = self.aspp(x)
        x = F.interpolate(x, size=low.shape[-2:], mode="bilinear",
                          align_corners=False)
        x = torch.cat([x, self.skip(low)], dim=1)  # 304 maps
        x = self.decoder(x)
        logits = self.classifier(x)
        return F.interpolate(logits, size=(h, w), mode="bilinear",
                             align_corners=False)

    def bottleneck_size(self, input_hw):
        return (input_hw[0] // POOL_FACTOR, input_hw[1] // POOL_FACTOR)


def build_network(cfg: NetworkConfig | None = None) -> RadarSegNet:
    return RadarSegNet(cfg or NetworkConfig())


def parameter_count(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())
