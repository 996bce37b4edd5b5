"""Domain-gap diagnostics between two corpora."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorpusError
from .pipeline import Corpus, StyleBank, build_style_bank, pair_indices
from .spectral import BetaMask, decompose, resize_bilinear
from .style import DEFAULT_EPSILON
from .tensor import load_raster

SPECTRAL_COMPRESSION = "log(1 + amplitude)"


@dataclass(frozen=True)
class GapReport:
    mean_gap: tuple[float, ...]
    std_gap: tuple[float, ...]
    spectral_gap: float
    sample_count: int
    beta: float
    epsilon: float
    spectral_pairs: int = 0  # pairs with a non-empty window

    def to_text(self) -> str:
        def vec(v):
            return ",".join(repr(float(x)) for x in v)

        return "\n".join([
            "# gap-report version=1",
            f"# spectral_gap: mean |{SPECTRAL_COMPRESSION}_a - {SPECTRAL_COMPRESSION}_b| "
            "over beta-window bins, channels and sampled pairs",
            f"channels={len(self.mean_gap)}",
            f"mean_gap={vec(self.mean_gap)}",
            f"mean_gap_max={float(max(self.mean_gap))!r}",
            f"std_gap={vec(self.std_gap)}",
            f"std_gap_max={float(max(self.std_gap))!r}",
            f"spectral_gap={float(self.spectral_gap)!r}",
            f"beta={float(self.beta)!r}",
            f"epsilon={float(self.epsilon)!r}",
            f"sample_count={self.sample_count}",
            f"spectral_pairs={self.spectral_pairs}",
        ]) + "\n"


def style_gap(a: StyleBank, b: StyleBank) -> tuple[np.ndarray, np.ndarray]:
    """Per-channel |delta mean| and |delta std| between corpus aggregates."""
    if a.channels != b.channels:
        raise ValueError(f"channel mismatch: {a.channels} vs {b.channels}")
    if a.epsilon != b.epsilon:
        raise ValueError(f"epsilon mismatch: {a.epsilon} vs {b.epsilon}")
    mean_gap = np.abs(np.subtract(a.aggregate.means, b.aggregate.means))
    std_gap = np.abs(np.subtract(a.aggregate.stds, b.aggregate.stds))
    return mean_gap, std_gap


def _same_corpus(a: Corpus, b: Corpus) -> bool:
    return a.entries == b.entries and a.root.resolve() == b.root.resolve()


def sample_pairs(a: Corpus, b: Corpus, samples: int, seed: int,
                 pairing: str = "random-seeded") -> list[tuple[str, str]]:
    """Cross-corpus pairs, drawn exactly as a translation plan would draw them.

    Pair k uses source entry k mod len(a); its partner comes from
    ``pair_indices``. A corpus compared with itself is paired entry-to-entry.
    """
    if not a.entries or not b.entries:
        raise CorpusError("spectral gap needs two non-empty corpora")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    src = [a.entries[k % len(a)] for k in range(samples)]
    if _same_corpus(a, b):
        return list(zip(src, src))
    if pairing == "dataset-mean":
        pairing = "random-seeded"
    idx = pair_indices(samples, len(b), pairing, seed)
    return [(s, b.entries[j]) for s, j in zip(src, idx)]


def _window_log_amplitude_gap(x, y, mask: BetaMask) -> float | None:
    if x.channels != y.channels:
        raise ValueError(f"channel mismatch: {x.channels} vs {y.channels}")
    y = resize_bilinear(y, x.height, x.width)
    win = mask.window(x.height, x.width)
    if not win.any():
        return None
    da = np.log1p(decompose(x).amplitude[:, win]) - np.log1p(decompose(y).amplitude[:, win])
    return float(np.abs(da).mean())


def spectral_gap_detail(a: Corpus, b: Corpus, beta: float, samples: int | None = None,
                        seed: int = 0, pairing: str = "random-seeded") -> tuple[float, int]:
    """Spectral gap plus the number of pairs whose beta window was non-empty.

    Pairs whose window selects no bins (beta too small for the image size)
    are skipped; when none remain the gap is vacuously 0.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"beta must lie in (0, 1], got {beta}")
    if samples is None:
        samples = len(a)
    mask = BetaMask(beta)
    gaps = []
    for p, q in sample_pairs(a, b, samples, seed, pairing):
        g = _window_log_amplitude_gap(load_raster(a.path(p)), load_raster(b.path(q)), mask)
        if g is not None:
            gaps.append(g)
    return (float(np.mean(gaps)) if gaps else 0.0), len(gaps)


def spectral_gap(a: Corpus, b: Corpus, beta: float, samples: int | None = None,
                 seed: int = 0, pairing: str = "random-seeded") -> float:
    return spectral_gap_detail(a, b, beta, samples, seed, pairing)[0]


def gap_report(a: Corpus, b: Corpus, beta: float = 0.01, epsilon: float = DEFAULT_EPSILON,
               seed: int = 0, pairing: str = "random-seeded",
               samples: int | None = None) -> GapReport:
    mean_gap, std_gap = style_gap(build_style_bank(a, epsilon), build_style_bank(b, epsilon))
    if samples is None:
        samples = len(a)
    sg, used = spectral_gap_detail(a, b, beta, samples, seed, pairing)
    return GapReport(tuple(map(float, mean_gap)), tuple(map(float, std_gap)), float(sg),
                     samples, float(beta), float(epsilon), used)
