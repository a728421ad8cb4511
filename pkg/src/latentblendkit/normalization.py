"""Adaptive instance normalization: re-statistics one signal to match another.

``adain`` works channel-wise on feature maps; ``adain_rows`` applies the
same transform to token matrices, treating each feature dimension (column)
as a channel and the token rows as positions.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ChannelMismatch, DimensionMismatch, InputError
from .tensorcore import DEFAULT_EPS_STD, FeatureMap, Matrix, channel_stats


@dataclass(frozen=True)
class AdainConfig:
    """Variance floor for the normalizing division (constant channels)."""

    eps_std: float = DEFAULT_EPS_STD

    def __post_init__(self):
        if not self.eps_std > 0:
            raise InputError(f"eps_std must be > 0, got {self.eps_std}")


def adain(g: FeatureMap, s: FeatureMap, cfg: AdainConfig = AdainConfig()) -> FeatureMap:
    """Shift/scale every channel of ``g`` so its statistics match ``s``'s.

    out[c][n] = std_s[c] * (g[c][n] - mean_g[c]) / std_g[c] + mean_s[c]

    Spatial sizes may differ; the output keeps ``g``'s. Constant channels
    divide by the configured floor instead of zero.
    """
    if g.channels != s.channels:
        raise ChannelMismatch(f"channel counts differ: {g.channels} vs {s.channels}")
    gs = channel_stats(g, cfg.eps_std)
    ss = channel_stats(s, cfg.eps_std)
    out = ss.std[:, None] * (g.data - gs.mean[:, None]) / gs.std[:, None] + ss.mean[:, None]
    return FeatureMap(out)


def adain_rows(x: Matrix, ref: Matrix, cfg: AdainConfig = AdainConfig()) -> Matrix:
    """AdaIN over a token matrix: columns are channels, rows are positions.

    After the transform each column of ``x`` carries the per-dimension mean
    and std of the corresponding column of ``ref``.
    """
    if x.cols != ref.cols:
        raise DimensionMismatch(f"feature dims differ: {x.cols} vs {ref.cols}")
    normalized = adain(FeatureMap(x.data.T), FeatureMap(ref.data.T), cfg)
    return Matrix(normalized.data.T)
