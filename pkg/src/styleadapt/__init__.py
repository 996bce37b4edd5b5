"""Style-adaptation primitives for unsupervised domain adaptation.

Fourier domain adaptation, per-channel RGB mean adaptation, style adaptive
instance normalization (SAIN) and its content-biased loss, plus a seeded
parallel dataset-translation pipeline and domain-gap diagnostics.
"""

__version__ = "0.1.0"

from .errors import (
    BadMagicError,
    CorpusError,
    DimensionOverflowError,
    ImageReadError,
    PixelRangeError,
    PlanError,
    SpectrumError,
    StyleAdaptError,
    StyleBankFormatError,
    TensorFormatError,
    TruncatedPayloadError,
    UnsupportedImageError,
    VersionMismatchError,
)
from .tensor import (
    ChannelStats,
    FeatureMap,
    ImageTensor,
    load_image,
    load_raster,
    read_tensor,
    save_image,
    write_tensor,
)
from .spectral import BetaMask, Spectrum, decompose, fda_translate, recompose, resize_bilinear
from .style import (
    SainConfig,
    channel_mean,
    channel_stats,
    channel_std,
    rgb_adapt,
    sain,
    sain_cross_entropy,
    softmax_cross_entropy,
)
from .rng import SplitMix64
from .pipeline import (
    AGGREGATE,
    Corpus,
    RunReport,
    StyleBank,
    TranslationPlan,
    build_style_bank,
    execute_plan,
    make_plan,
    scan_corpus,
)
from .metrics import GapReport, gap_report, spectral_gap, style_gap
