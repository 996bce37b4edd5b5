import cmath
import math
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from styleadapt.tensor import _encode


def write_png(path: Path, pixels: np.ndarray) -> Path:
    """Write uint8 (H, W) or (H, W, 3) pixels with PIL directly."""
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(pixels, dtype=np.uint8)).save(path, format="PNG")
    return path


def write_sstf(path: Path, data: np.ndarray) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(_encode(np.asarray(data, dtype=np.float32)))
    return path


def direct_dft(x) -> np.ndarray:
    """Double-loop DFT of a 2-D array, returned DC-centered."""
    h, w = len(x), len(x[0])
    out = np.empty((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            acc = 0j
            for r in range(h):
                for c in range(w):
                    acc += float(x[r][c]) * cmath.exp(-2j * math.pi * (u * r / h + v * c / w))
            out[(u + h // 2) % h, (v + w // 2) % w] = acc
    return out


def plain_cross_entropy(scores, labels, ignore_index=255) -> float:
    c, h, w = scores.shape
    total, n = 0.0, 0
    for i in range(h):
        for j in range(w):
            y = int(labels[i][j])
            if y == ignore_index:
                continue
            z = [float(scores[k, i, j]) for k in range(c)]
            m = max(z)
            total += -(z[y] - m - math.log(sum(math.exp(v - m) for v in z)))
            n += 1
    return total / n


def tree_bytes(root: Path) -> dict:
    return {p.relative_to(root).as_posix(): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture
def rng():
    return np.random.default_rng(20241017)
