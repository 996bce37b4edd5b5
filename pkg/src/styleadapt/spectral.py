"""Per-channel 2D Fourier analysis and Fourier domain adaptation (FDA).

Spectra are kept in float64 with the zero frequency at ``(H // 2, W // 2)``
(``np.fft.fftshift`` layout).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpectrumError
from .tensor import FeatureMap, ImageTensor, write_tensor

IMAG_TOLERANCE = 1e-4


@dataclass(frozen=True, eq=False)
class Spectrum:
    amplitude: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitude, dtype=np.float64)
        pha = np.array(self.phase, dtype=np.float64)
        if amp.ndim != 3 or amp.shape != pha.shape:
            raise ValueError(f"amplitude {amp.shape} and phase {pha.shape} must be equal (C, H, W)")
        if not (np.isfinite(amp).all() and np.isfinite(pha).all()):
            raise ValueError("spectrum contains NaN or Inf")
        if (amp < 0).any():
            raise ValueError("amplitude must be non-negative")
        amp.setflags(write=False)
        pha.setflags(write=False)
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", pha)

    @property
    def shape(self):
        return self.amplitude.shape


def _wrap_phase(phase):
    # np.angle gives [-pi, pi]; fold -pi onto pi
    return np.where(phase <= -np.pi, np.pi, phase)


def decompose(img: ImageTensor) -> Spectrum:
    f = np.fft.fftshift(np.fft.fft2(img.data.astype(np.float64)), axes=(-2, -1))
    return Spectrum(np.abs(f), _wrap_phase(np.angle(f)))


def recompose(spec: Spectrum) -> ImageTensor:
    f = spec.amplitude * np.exp(1j * spec.phase)
    x = np.fft.ifft2(np.fft.ifftshift(f, axes=(-2, -1)))
    residue = float(np.abs(x.imag).max())
    if residue > IMAG_TOLERANCE:
        raise SpectrumError(
            f"imaginary residue {residue:.3g} exceeds {IMAG_TOLERANCE:g}; "
            "spectrum is not conjugate-symmetric"
        )
    return ImageTensor(x.real)


def _window_1d(n: int, beta: float) -> np.ndarray:
    """Centered window of floor(beta*n) bins, reduced to its mirror-symmetric core."""
    length = int(np.floor(beta * n))
    c = n // 2
    start = c - length // 2
    idx = np.arange(n)
    nominal = (idx >= start) & (idx < start + length)
    # frequency f sits at c + f; its conjugate -f at (2c - i) mod n
    mirrored = nominal[(2 * c - idx) % n]
    return nominal & mirrored


@dataclass(frozen=True)
class BetaMask:
    """Low-frequency window selecting which amplitude bins FDA replaces.

    The nominal window is a ``floor(beta*H) x floor(beta*W)`` rectangle
    centered on DC (even lengths reach one bin further toward negative
    frequencies). Bins whose conjugate partner falls outside the nominal
    window are dropped, so the swapped spectrum stays Hermitian and the
    translated image stays real.
    """

    beta: float

    def __post_init__(self):
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must lie in [0, 1], got {self.beta}")

    def window(self, height: int, width: int) -> np.ndarray:
        rows = _window_1d(height, self.beta)
        cols = _window_1d(width, self.beta)
        return rows[:, None] & cols[None, :]


def resize_bilinear(img, height: int, width: int):
    """Bilinear resampling with half-pixel centers and edge clamping."""
    c, h, w = img.shape
    if (h, w) == (height, width):
        return img
    src = img.data.astype(np.float64)

    def coords(n_out, n_in):
        x = (np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5
        x = np.clip(x, 0, n_in - 1)
        lo = np.floor(x).astype(np.intp)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, x - lo

    y0, y1, fy = coords(height, h)
    x0, x1, fx = coords(width, w)
    top = src[:, y0][:, :, x0] * (1 - fx) + src[:, y0][:, :, x1] * fx
    bot = src[:, y1][:, :, x0] * (1 - fx) + src[:, y1][:, :, x1] * fx
    out = top * (1 - fy)[:, None] + bot * fy[:, None]
    return type(img)(out)


def swap_amplitude(source: Spectrum, target: Spectrum, mask: BetaMask) -> Spectrum:
    if source.shape != target.shape:
        raise ValueError(f"spectrum shapes differ: {source.shape} vs {target.shape}")
    win = mask.window(*source.shape[1:])
    amp = np.where(win, target.amplitude, source.amplitude)
    return Spectrum(amp, source.phase)


def fda_translate(source: ImageTensor, target: ImageTensor, beta: float) -> ImageTensor:
    """Give ``source`` the low-frequency amplitude of ``target``, keeping source phase."""
    if source.channels != target.channels:
        raise ValueError(
            f"channel count mismatch: source {source.channels}, target {target.channels}"
        )
    mask = BetaMask(beta)
    target = resize_bilinear(target, source.height, source.width)
    out = recompose(swap_amplitude(decompose(source), decompose(target), mask))
    return type(source)(out.data)


def save_spectrum(spec: Spectrum, amplitude_path, phase_path) -> None:
    """Dump amplitude and phase as two float32 SSTF tensors (debugging aid)."""
    write_tensor(FeatureMap(spec.amplitude), amplitude_path)
    write_tensor(FeatureMap(spec.phase), phase_path)
