"""Channel hardening: synthesis and analysis of massive MIMO channel gain statistics."""

from .core import (
    ChannelError,
    ChannelTensor,
    GainSeries,
    HardeningCurve,
    SubsetSelection,
    TensorMeta,
    hardening,
    normalize,
    std_gain,
    subset_gain,
)

__version__ = "0.1.0"
