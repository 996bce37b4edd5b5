"""Channel-statistic style operations.

Statistics are population moments over H*W computed in float64; results
are rounded back to the float32 raster of the input kind.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import ChannelStats

DEFAULT_EPSILON = 1e-5
IGNORE_INDEX = 255


@dataclass(frozen=True)
class SainConfig:
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def _flat(t) -> np.ndarray:
    return t.data.reshape(t.channels, -1).astype(np.float64)


def channel_moments(t):
    x = _flat(t)
    mu = x.mean(axis=1)
    var = np.square(x - mu[:, None]).mean(axis=1)
    return mu, var


def channel_mean(t) -> np.ndarray:
    return _flat(t).mean(axis=1)


def channel_std(t, cfg: SainConfig | float = SainConfig()) -> np.ndarray:
    """sqrt(population variance + epsilon) per channel.

    ``cfg`` may also be a bare epsilon; 0 gives the plain population std.
    """
    eps = cfg.epsilon if isinstance(cfg, SainConfig) else float(cfg)
    if not eps >= 0:
        raise ValueError(f"epsilon must be non-negative, got {eps}")
    _, var = channel_moments(t)
    return np.sqrt(var + eps)


def channel_stats(t, cfg: SainConfig = SainConfig()) -> ChannelStats:
    mu, var = channel_moments(t)
    return ChannelStats(tuple(mu), tuple(np.sqrt(var + cfg.epsilon)), cfg.epsilon)


def rgb_adapt(source, target_mean):
    """Shift each channel so its mean becomes ``target_mean``. No clamping."""
    target_mean = np.asarray(target_mean, dtype=np.float64).reshape(-1)
    if target_mean.shape[0] != source.channels:
        raise ValueError(
            f"target mean has {target_mean.shape[0]} channels, source has {source.channels}"
        )
    x = source.data.astype(np.float64)
    shift = target_mean - channel_mean(source)
    return type(source)(x + shift[:, None, None])


def sain(source, target, cfg: SainConfig = SainConfig()):
    """Re-normalize ``source`` to the per-channel mean/std of ``target``.

    Spatial sizes may differ; only channel counts must agree.
    """
    if source.channels != target.channels:
        raise ValueError(
            f"channel count mismatch: source {source.channels}, target {target.channels}"
        )
    mu_s, var_s = channel_moments(source)
    mu_t, var_t = channel_moments(target)
    sigma_s = np.sqrt(var_s + cfg.epsilon)
    sigma_t = np.sqrt(var_t + cfg.epsilon)
    x = source.data.astype(np.float64)
    out = (sigma_t / sigma_s)[:, None, None] * (x - mu_s[:, None, None]) + mu_t[:, None, None]
    return type(source)(out)


def _check_labels(labels, num_classes, shape, ignore_index):
    labels = np.asarray(labels)
    if labels.shape != shape:
        raise ValueError(f"labels shape {labels.shape} != score spatial shape {shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be integer class indices")
    labels = labels.astype(np.int64)
    keep = labels != ignore_index
    bad = keep & ((labels < 0) | (labels >= num_classes))
    if bad.any():
        raise ValueError(
            f"label values must lie in [0, {num_classes}) or equal {ignore_index}; "
            f"found {np.unique(labels[bad]).tolist()}"
        )
    if not keep.any():
        raise ValueError("every pixel carries the ignore index")
    return labels, keep


def softmax_cross_entropy(scores, labels, ignore_index: int = IGNORE_INDEX) -> float:
    """Mean NLL of the true class under a softmax over channels."""
    labels, keep = _check_labels(labels, scores.channels, scores.shape[1:], ignore_index)
    z = scores.data.astype(np.float64)
    z = z - z.max(axis=0, keepdims=True)
    log_prob = z - np.log(np.exp(z).sum(axis=0, keepdims=True))
    rows, cols = np.nonzero(keep)
    picked = log_prob[labels[rows, cols], rows, cols]
    return float(-picked.mean())


def sain_cross_entropy(source_scores, target_scores, labels,
                       cfg: SainConfig = SainConfig(),
                       ignore_index: int = IGNORE_INDEX) -> float:
    """Content-biased loss: cross-entropy of source scores restyled by SAIN.

    Softmax is inserted between SAIN and the log so the argument is a
    probability.
    """
    if source_scores.channels != target_scores.channels:
        raise ValueError("source and target scores must share the class count")
    _check_labels(labels, source_scores.channels, source_scores.shape[1:], ignore_index)
    restyled = sain(source_scores, target_scores, cfg)
    return softmax_cross_entropy(restyled, labels, ignore_index)
