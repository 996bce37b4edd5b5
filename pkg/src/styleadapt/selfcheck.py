"""Built-in invariant and oracle checks, run by ``styleadapt verify``.

The oracles here (direct-summation DFT, scalar-loop loss) never call the
code paths they check.
"""
from __future__ import annotations

import math
import tempfile
from pathlib import Path

import numpy as np

from .errors import BadMagicError, TruncatedPayloadError
from .pipeline import Corpus, make_plan
from .rng import SplitMix64
from .spectral import BetaMask, decompose, fda_translate, recompose
from .style import SainConfig, channel_mean, channel_std, rgb_adapt, sain, sain_cross_entropy
from .tensor import FeatureMap, ImageTensor, load_image, read_tensor, save_image, write_tensor


def naive_dft(x: np.ndarray) -> np.ndarray:
    """Direct O((HW)^2) DFT of a 2-D array, DC-centered."""
    h, w = x.shape
    out = np.zeros((h, w), dtype=np.complex128)
    hh, ww = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    for u in range(h):
        for v in range(w):
            phase = -2.0 * np.pi * (u * hh / h + v * ww / w)
            out[u, v] = np.sum(x * (np.cos(phase) + 1j * np.sin(phase)))
    return np.roll(out, (h // 2, w // 2), axis=(0, 1))


def scalar_sain_loss(src, tgt, labels, epsilon, ignore_index=255) -> float:
    """SAIN -> softmax -> NLL evaluated with plain Python loops."""
    c, h, w = src.shape
    _, ht, wt = tgt.shape

    def stats(a, ch, hh, ww):
        vals = [float(a[ch, i, j]) for i in range(hh) for j in range(ww)]
        mu = sum(vals) / len(vals)
        var = sum((v - mu) ** 2 for v in vals) / len(vals)
        return mu, math.sqrt(var + epsilon)

    s_stats = [stats(src, k, h, w) for k in range(c)]
    t_stats = [stats(tgt, k, ht, wt) for k in range(c)]
    total, count = 0.0, 0
    for i in range(h):
        for j in range(w):
            y = int(labels[i][j])
            if y == ignore_index:
                continue
            z = [t_stats[k][1] * (float(src[k, i, j]) - s_stats[k][0]) / s_stats[k][1]
                 + t_stats[k][0] for k in range(c)]
            m = max(z)
            lse = m + math.log(sum(math.exp(v - m) for v in z))
            total -= z[y] - lse
            count += 1
    return total / count


# -- checks -----------------------------------------------------------------

def _close(a, b, tol, what):
    err = float(np.max(np.abs(np.asarray(a) - np.asarray(b))))
    if not err <= tol:
        raise AssertionError(f"{what}: max abs error {err:.3g} > {tol:g}")


def check_tensor_file(rng, tmp):
    fm = FeatureMap(rng.normal(size=(3, 5, 7)))
    write_tensor(fm, tmp / "t.sstf")
    back = read_tensor(tmp / "t.sstf")
    if back.data.tobytes() != fm.data.tobytes():
        raise AssertionError("tensor roundtrip is not bit-exact")
    (tmp / "bad.sstf").write_bytes(b"XXXX" + (tmp / "t.sstf").read_bytes()[4:])
    try:
        read_tensor(tmp / "bad.sstf")
    except BadMagicError:
        pass
    else:
        raise AssertionError("bad magic accepted")
    raw = (tmp / "t.sstf").read_bytes()
    (tmp / "short.sstf").write_bytes(raw[:-4])
    try:
        read_tensor(tmp / "short.sstf")
    except TruncatedPayloadError:
        pass
    else:
        raise AssertionError("truncated payload accepted")


def check_image_roundtrip(rng, tmp):
    q = rng.integers(0, 256, size=(3, 6, 5)).astype(np.float32)
    save_image(ImageTensor(q / 255), tmp / "a.png")
    img = load_image(tmp / "a.png")
    _close(img.data * 255, q, 1e-4, "8-bit load")
    save_image(img, tmp / "b.png")
    if not np.array_equal(load_image(tmp / "b.png").data, img.data):
        raise AssertionError("load -> save changed pixel values")


def check_fft_oracle(rng, tmp):
    for h in range(1, 9):
        for w in range(1, 9):
            x = ImageTensor(rng.random((1, h, w)))
            spec = decompose(x)
            ref = naive_dft(x.data[0].astype(np.float64))
            _close(spec.amplitude[0] * np.exp(1j * spec.phase[0]), ref, 1e-6, f"DFT {h}x{w}")
            _close(spec.amplitude[0], np.abs(ref), 1e-6, f"amplitude {h}x{w}")


def check_recompose(rng, tmp):
    x = ImageTensor(rng.random((3, 17, 12)))
    _close(recompose(decompose(x)).data, x.data, 1e-4, "recompose(decompose(x))")


def check_fda_identities(rng, tmp):
    s = ImageTensor(rng.random((3, 16, 20)))
    t = ImageTensor(rng.random((3, 16, 20)))
    _close(fda_translate(s, t, 0.0).data, s.data, 1e-4, "beta=0 identity")
    _close(fda_translate(s, s, 0.3).data, s.data, 1e-4, "self translation")
    out = fda_translate(ImageTensor(np.full((1, 4, 4), 0.4)), ImageTensor(np.full((1, 4, 4), 0.9)), 0.25)
    _close(out.data, 0.9, 1e-4, "constant DC swap")


def check_fda_mask(rng, tmp):
    s = ImageTensor(rng.random((3, 24, 31)))
    t = ImageTensor(rng.random((3, 24, 31)))
    beta = 0.37
    out = decompose(fda_translate(s, t, beta))
    win = BetaMask(beta).window(24, 31)
    ds, dt = decompose(s), decompose(t)
    _close(out.amplitude[:, win], dt.amplitude[:, win], 1e-4, "window amplitude")
    _close(out.amplitude[:, ~win], ds.amplitude[:, ~win], 1e-4, "outside amplitude")
    live = out.amplitude > 1e-6
    dphi = np.angle(np.exp(1j * (out.phase - ds.phase)))[live]
    _close(dphi, 0.0, 1e-3, "phase")


def check_rgb_adapt(rng, tmp):
    x = ImageTensor(rng.random((3, 20, 13)))
    m = rng.random(3)
    _close(channel_mean(rgb_adapt(x, m)), m, 1e-6, "rgb_adapt mean")
    _close(rgb_adapt(x, channel_mean(x)).data, x.data, 1e-7, "zero shift")


def check_sain(rng, tmp):
    cfg = SainConfig()
    x = FeatureMap(rng.normal(1.0, 2.0, size=(4, 9, 11)))
    y = FeatureMap(rng.normal(-3.0, 0.5, size=(4, 7, 5)))
    if not np.array_equal(sain(x, x, cfg).data, x.data):
        raise AssertionError("sain(x, x) != x")
    out = sain(x, y, cfg)
    _close(channel_mean(out), channel_mean(y), 1e-5, "sain mean")
    rel = np.abs(channel_std(out, cfg) / channel_std(y, cfg) - 1)
    _close(rel, 0.0, 1e-4, "sain std (relative)")


def check_loss_oracle(rng, tmp):
    cfg = SainConfig()
    src = FeatureMap(rng.normal(size=(4, 3, 3)))
    tgt = FeatureMap(rng.normal(0.5, 2.0, size=(4, 3, 3)))
    labels = rng.integers(0, 4, size=(3, 3))
    labels[0, 0] = 255
    got = sain_cross_entropy(src, tgt, labels, cfg)
    ref = scalar_sain_loss(src.data, tgt.data, labels, cfg.epsilon)
    _close(got, ref, 1e-6, "content-biased loss")
    uniform = FeatureMap(np.zeros((5, 2, 2)))
    _close(sain_cross_entropy(uniform, uniform, np.zeros((2, 2), int), cfg), math.log(5), 1e-12,
           "uniform scores")


def check_plan_determinism(rng, tmp):
    r = SplitMix64(0)
    if r.next_u64() != 0xE220A8397B1DCDAF:
        raise AssertionError("SplitMix64 reference vector mismatch")
    src = Corpus(Path("s"), tuple(f"{i:03d}.png" for i in range(17)))
    tgt = Corpus(Path("t"), tuple(f"{i:03d}.png" for i in range(5)))
    a = make_plan(src, tgt, "fda", "random-seeded", seed=42)
    b = make_plan(src, tgt, "fda", "random-seeded", seed=42)
    if a.assignments != b.assignments:
        raise AssertionError("same seed produced different plans")
    rr = make_plan(src, tgt, "rgb", "round-robin")
    if [x.target for x in rr.assignments[:6]] != [tgt.entries[i % 5] for i in range(6)]:
        raise AssertionError("round-robin pairing is not modular")


CHECKS = [
    ("tensor-file", check_tensor_file),
    ("image-roundtrip", check_image_roundtrip),
    ("fft-oracle", check_fft_oracle),
    ("recompose-roundtrip", check_recompose),
    ("fda-identities", check_fda_identities),
    ("fda-mask-semantics", check_fda_mask),
    ("rgb-exact-mean", check_rgb_adapt),
    ("sain-statistics", check_sain),
    ("loss-oracle", check_loss_oracle),
    ("plan-determinism", check_plan_determinism),
]


def run_selfcheck(emit=print, seed: int = 0) -> int:
    """Run every check, emit one PASS/FAIL line each, return the failure count."""
    failures = 0
    with tempfile.TemporaryDirectory() as d:
        for name, fn in CHECKS:
            rng = np.random.default_rng(seed)
            try:
                fn(rng, Path(d))
            except Exception as exc:
                failures += 1
                emit(f"FAIL {name}: {type(exc).__name__}: {exc}")
            else:
                emit(f"PASS {name}")
    emit(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return failures
