"""Corpus scanning, style banks, seeded pairing and parallel batch translation."""
from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorpusError, PlanError, StyleBankFormatError
from .rng import SplitMix64
from .spectral import fda_translate
from .style import DEFAULT_EPSILON, SainConfig, channel_mean, channel_moments, rgb_adapt, sain
from .tensor import (
    IMAGE_SUFFIXES,
    TENSOR_SUFFIX,
    ChannelStats,
    load_raster,
    save_image,
    write_tensor,
)

log = logging.getLogger(__name__)

SUPPORTED_SUFFIXES = IMAGE_SUFFIXES + (TENSOR_SUFFIX,)
AGGREGATE = "@aggregate"
MODES = ("fda", "rgb", "sain")
PAIRINGS = ("random-seeded", "round-robin", "dataset-mean")
REPORT_NAME = "translate_report.tsv"


# -- corpora ----------------------------------------------------------------

@dataclass(frozen=True)
class Corpus:
    root: Path
    entries: tuple[str, ...]  # posix paths relative to root, sorted

    def path(self, entry: str) -> Path:
        return self.root / entry

    def __len__(self):
        return len(self.entries)


def scan_corpus(root) -> Corpus:
    root = Path(root)
    if not root.is_dir():
        raise CorpusError(f"{root}: not a directory")
    found = []
    for dirpath, _, filenames in os.walk(root):
        for name in filenames:
            if Path(name).suffix.lower() in SUPPORTED_SUFFIXES:
                found.append((Path(dirpath) / name).relative_to(root).as_posix())
    if not found:
        raise CorpusError(f"{root}: no images found")
    # codepoint order on posix strings: identical on every platform
    return Corpus(root, tuple(sorted(found)))


# -- style banks ------------------------------------------------------------

BANK_VERSION = 1


@dataclass(frozen=True)
class StyleBank:
    per_image: tuple[tuple[str, ChannelStats], ...]
    aggregate: ChannelStats
    epsilon: float

    @property
    def channels(self) -> int:
        return self.aggregate.channels

    def to_text(self) -> str:
        c = self.channels
        lines = [f"stylebank version={BANK_VERSION} channels={c} epsilon={self.epsilon!r}"]
        for path, st in self.per_image:
            if "\n" in path:
                raise StyleBankFormatError(f"path {path!r} contains a newline")
            lines.append(" ".join([path, *map(repr, st.means), *map(repr, st.stds)]))
        agg = self.aggregate
        lines.append(" ".join([AGGREGATE, *map(repr, agg.means), *map(repr, agg.stds)]))
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_text(), encoding="utf-8")

    @classmethod
    def from_text(cls, text: str) -> StyleBank:
        lines = text.splitlines()
        if not lines:
            raise StyleBankFormatError("empty style bank")
        head = lines[0].split()
        try:
            if head[0] != "stylebank":
                raise ValueError
            fields = dict(kv.split("=", 1) for kv in head[1:])
            version = int(fields["version"])
            c = int(fields["channels"])
            eps = float(fields["epsilon"])
        except (ValueError, KeyError, IndexError):
            raise StyleBankFormatError(f"bad header line: {lines[0]!r}") from None
        if version != BANK_VERSION:
            raise StyleBankFormatError(f"unsupported style bank version {version}")

        def parse(line):
            parts = line.rsplit(" ", 2 * c)
            if len(parts) != 2 * c + 1:
                raise StyleBankFormatError(f"expected path and {2 * c} values: {line!r}")
            try:
                vals = [float(v) for v in parts[1:]]
                return parts[0], ChannelStats(vals[:c], vals[c:], eps)
            except ValueError as exc:
                raise StyleBankFormatError(f"{exc}: {line!r}") from None

        rows = [parse(line) for line in lines[1:] if line]
        if not rows or rows[-1][0] != AGGREGATE:
            raise StyleBankFormatError("missing aggregate line")
        per_image = tuple(rows[:-1])
        if any(p == AGGREGATE for p, _ in per_image):
            raise StyleBankFormatError("aggregate line must come last")
        return cls(per_image, rows[-1][1], eps)

    @classmethod
    def read(cls, path) -> StyleBank:
        return cls.from_text(Path(path).read_text(encoding="utf-8"))


def aggregate_moments(means, variances, epsilon) -> ChannelStats:
    """Corpus statistics as an equal-weight mixture of per-image moments.

    Mean is the mean of per-image means; variance is the pooled second
    moment about that mean (within-image variance plus spread of means).
    """
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    mu = means.mean(axis=0)
    var = (variances + np.square(means - mu)).mean(axis=0)
    return ChannelStats(tuple(mu), tuple(np.sqrt(var + epsilon)), epsilon)


def build_style_bank(corpus: Corpus, epsilon: float = DEFAULT_EPSILON) -> StyleBank:
    if not corpus.entries:
        raise CorpusError(f"{corpus.root}: empty corpus")
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    per_image, means, variances = [], [], []
    channels = None
    for entry in corpus.entries:
        img = load_raster(corpus.path(entry))
        if channels is None:
            channels = img.channels
        elif img.channels != channels:
            raise CorpusError(
                f"{corpus.path(entry)}: {img.channels} channels, corpus has {channels}"
            )
        mu, var = channel_moments(img)
        per_image.append((entry, ChannelStats(tuple(mu), tuple(np.sqrt(var + epsilon)), epsilon)))
        means.append(mu)
        variances.append(var)
    return StyleBank(tuple(per_image), aggregate_moments(means, variances, epsilon), epsilon)


# -- plans ------------------------------------------------------------------

def pair_indices(n_sources: int, n_targets: int, pairing: str, seed: int) -> list[int]:
    """Target index for each source position.

    random-seeded draws ``SplitMix64(seed).below(n_targets)`` once per source,
    in source order.
    """
    if n_targets < 1:
        raise PlanError("no targets to pair with")
    if pairing == "round-robin":
        return [i % n_targets for i in range(n_sources)]
    if pairing == "random-seeded":
        rng = SplitMix64(seed)
        return [rng.below(n_targets) for _ in range(n_sources)]
    raise PlanError(f"pairing {pairing!r} does not assign individual targets")


@dataclass(frozen=True)
class Assignment:
    source: str
    target: str  # entry of the target corpus, or AGGREGATE


@dataclass(frozen=True)
class TranslationPlan:
    mode: str
    pairing: str
    seed: int
    beta: float
    epsilon: float
    clamp: bool
    source: Corpus
    target: Corpus
    assignments: tuple[Assignment, ...]


def check_plan_params(mode, pairing, seed=0, beta=0.01, epsilon=DEFAULT_EPSILON):
    if mode not in MODES:
        raise PlanError(f"unknown mode {mode!r}; expected one of {MODES}")
    if pairing not in PAIRINGS:
        raise PlanError(f"unknown pairing {pairing!r}; expected one of {PAIRINGS}")
    if pairing == "dataset-mean" and mode != "rgb":
        raise PlanError("dataset-mean pairing is only valid with mode=rgb")
    if not 0 <= seed < 2**64:
        raise PlanError(f"seed must be a u64, got {seed}")
    if not 0.0 <= beta <= 1.0:
        raise PlanError(f"beta must lie in [0, 1], got {beta}")
    if not epsilon > 0:
        raise PlanError(f"epsilon must be positive, got {epsilon}")


def make_plan(source: Corpus, target: Corpus, mode: str, pairing: str = "random-seeded",
              seed: int = 0, beta: float = 0.01, epsilon: float = DEFAULT_EPSILON,
              clamp: bool = False) -> TranslationPlan:
    check_plan_params(mode, pairing, seed, beta, epsilon)
    if not source.entries or not target.entries:
        raise PlanError("source and target corpora must be non-empty")
    if pairing == "dataset-mean":
        assignments = tuple(Assignment(s, AGGREGATE) for s in source.entries)
    else:
        idx = pair_indices(len(source), len(target), pairing, seed)
        assignments = tuple(Assignment(s, target.entries[j]) for s, j in zip(source.entries, idx))
    return TranslationPlan(mode, pairing, int(seed), float(beta), float(epsilon), bool(clamp),
                           source, target, assignments)


# -- execution --------------------------------------------------------------

@dataclass
class FileRecord:
    index: int
    source: str
    target: str
    output: str
    status: str  # "ok" or "failed"
    means: tuple[float, ...] = ()
    message: str = ""


@dataclass
class RunReport:
    plan: TranslationPlan
    records: list[FileRecord] = field(default_factory=list)

    @property
    def total(self) -> int:
        return len(self.records)

    @property
    def failed(self) -> int:
        return sum(r.status != "ok" for r in self.records)

    @property
    def ok(self) -> int:
        return self.total - self.failed

    @property
    def exit_status(self) -> int:
        return 0 if self.failed == 0 else 1

    def output_mean(self) -> tuple[float, ...]:
        ok = [r.means for r in self.records if r.status == "ok"]
        if not ok or len({len(m) for m in ok}) != 1:
            return ()
        return tuple(float(v) for v in np.mean(np.asarray(ok), axis=0))

    def to_text(self) -> str:
        p = self.plan
        lines = [
            "# run-report version=1",
            f"# mode={p.mode} pairing={p.pairing} seed={p.seed} beta={p.beta!r} "
            f"epsilon={p.epsilon!r} clamp={int(p.clamp)}",
            f"# total={self.total} ok={self.ok} failed={self.failed}",
            "# output_mean=" + ",".join(map(repr, self.output_mean())),
            "index\tsource\ttarget\toutput\tstatus\tmeans\tmessage",
        ]
        for r in self.records:
            msg = r.message.replace("\t", " ").replace("\n", " ")
            lines.append(
                f"{r.index}\t{r.source}\t{r.target}\t{r.output}\t{r.status}\t"
                f"{','.join(map(repr, r.means))}\t{msg}"
            )
        return "\n".join(lines) + "\n"


def output_entry(entry: str) -> str:
    """Relative output path: same as the source, JPEG re-encoded as PNG."""
    p = Path(entry)
    if p.suffix.lower() in (".jpg", ".jpeg"):
        p = p.with_suffix(".png")
    return p.as_posix()


_target_cache: dict[str, object] = {}
_TARGET_CACHE_SIZE = 32


def _reset_cache():
    _target_cache.clear()


def _load_target(path: str):
    img = _target_cache.get(path)
    if img is None:
        img = load_raster(path)
        if len(_target_cache) >= _TARGET_CACHE_SIZE:
            _target_cache.pop(next(iter(_target_cache)))
        _target_cache[path] = img
    return img


def _translate_one(task):
    index, src_path, tgt_path, out_path, mode, beta, eps, clamp, target_mean = task
    try:
        src = load_raster(src_path)
        if target_mean is not None:
            out = rgb_adapt(src, target_mean)
        else:
            tgt = _load_target(tgt_path)
            if mode == "fda":
                out = fda_translate(src, tgt, beta)
            elif mode == "rgb":
                out = rgb_adapt(src, channel_mean(tgt))
            else:
                out = sain(src, tgt, SainConfig(eps))
        means = tuple(float(m) for m in channel_mean(out))
        out_path = Path(out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        if out_path.suffix.lower() == TENSOR_SUFFIX:
            write_tensor(out, out_path)
        else:
            save_image(out, out_path, clamp=clamp)
        return index, "ok", means, ""
    except Exception as exc:  # isolate per-file failures
        return index, "failed", (), f"{type(exc).__name__}: {exc}"


def execute_plan(plan: TranslationPlan, out_dir, workers: int = 1,
                 target_bank: StyleBank | None = None) -> RunReport:
    """Translate every assignment into ``out_dir``.

    Outputs are pure functions of their assignment, so the written bytes do
    not depend on ``workers``. Records are merged in assignment order.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    target_mean = None
    if plan.pairing == "dataset-mean":
        if target_bank is None:
            target_bank = build_style_bank(plan.target, plan.epsilon)
        target_mean = target_bank.aggregate.means

    report = RunReport(plan)
    tasks, claimed = [], {}
    for i, a in enumerate(plan.assignments):
        out_rel = output_entry(a.source)
        rec = FileRecord(i, a.source, a.target, out_rel, "pending")
        report.records.append(rec)
        if out_rel in claimed:
            rec.status = "failed"
            rec.message = f"output path collides with {claimed[out_rel]}"
            continue
        claimed[out_rel] = a.source
        tgt = None if a.target == AGGREGATE else str(plan.target.path(a.target))
        tasks.append((i, str(plan.source.path(a.source)), tgt, str(out_dir / out_rel),
                      plan.mode, plan.beta, plan.epsilon, plan.clamp, target_mean))

    if workers == 1 or len(tasks) <= 1:
        _reset_cache()
        try:
            results = [_translate_one(t) for t in tasks]
        finally:
            _reset_cache()
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks)),
                                 initializer=_reset_cache) as pool:
            results = list(pool.map(_translate_one, tasks))

    for index, status, means, message in results:
        rec = report.records[index]
        rec.status, rec.means, rec.message = status, means, message
        if status != "ok":
            log.warning("%s: %s", rec.source, message)
    return report
