"""BPSK/AWGN channel, seeded trial engine and offline statistics.

Randomness: trial ``i`` of a run with seed ``s`` reads the Philox4x64-10
stream keyed by ``s`` at raw-word offset ``i * WORDS_PER_TRIAL``.  The first
``n`` words become standard normals through the inverse Gaussian CDF of a
53-bit uniform; the next ``ceil(k/64)`` words supply the message bits.  A
trial's channel realisation therefore depends only on ``(seed, i)``, never on
chunking or worker count.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from scipy.special import ndtri

from . import _kernels
from .chase import ReliabilityView, hard_decision, sort_reliability  # noqa: F401  (re-exported)
from .galois_bch import CodeSpec, FieldTables, build_field, encode_batch
from .ida_policy import (
    ConfigError,
    IdaConfig,
    LevelKind,
    MDIdaConfig,
    MIdaConfig,
    MultiThresholdConfig,
    ParallelismLevel,
    SelectorKind,
    complexity_levels,
    ida_levels,
    ladder_levels,
    level_fractions,
)
from .orbgrand import PatternBook

log = logging.getLogger(__name__)

DEFAULT_CHUNK = 8192
MIN_BLOCK_ERRORS = 100


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    if not 0 < rate <= 1:
        raise ValueError(f"rate must lie in (0, 1], got {rate}")
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


@dataclass(frozen=True)
class ChannelConfig:
    ebn0_db: float
    rate: float
    seed: int = 0

    @property
    def sigma(self) -> float:
        return ebn0_to_sigma(self.ebn0_db, self.rate)

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.sigma ** 2


def words_per_trial(n: int, k: int) -> int:
    w = n + -(-k // 64)
    return -(-w // 4) * 4


def _raw_block(seed: int, start: int, count: int, n: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    wpt = words_per_trial(n, k)
    gen = np.random.Philox(key=seed, counter=start * (wpt // 4))
    raw = gen.random_raw(count * wpt).reshape(count, wpt)
    u = ((raw[:, :n] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
    z = ndtri(u)
    bits = np.unpackbits(raw[:, n:].copy().view(np.uint8), axis=1, bitorder="little")[:, :k]
    return z, bits


@dataclass(frozen=True)
class TrialStream:
    """The dedicated random source of one trial."""

    seed: int
    index: int
    n: int = 255
    k: int = 239

    def draws(self) -> tuple[np.ndarray, np.ndarray]:
        z, bits = _raw_block(self.seed, self.index, 1, self.n, self.k)
        return z[0], bits[0]

    def normal(self) -> np.ndarray:
        return self.draws()[0]

    def message(self) -> np.ndarray:
        return self.draws()[1]


def transmit(c, cfg: ChannelConfig, stream: TrialStream | np.ndarray) -> np.ndarray:
    """LLRs ``2/sigma^2 * (1 - 2c + e)`` with ``e ~ N(0, sigma^2)``.

    ``stream`` may also be a standard-normal array, e.g. zeros for a noiseless stub.
    """
    z = stream.normal() if isinstance(stream, TrialStream) else np.asarray(stream, dtype=np.float64)
    c = np.asarray(c)
    return cfg.llr_scale * (1.0 - 2.0 * c + cfg.sigma * z)


@dataclass(frozen=True)
class OracleDepth:
    """What each trial records.

    ``p_max`` < 0 disables the Chase oracle; ``book`` None disables ORBGRAND.
    ``n_store`` is the length of the stored sorted-magnitude prefix and
    ``gamma_grid`` the magnitudes at which below-threshold counts are kept.
    """

    p_max: int = 6
    book: PatternBook | None = None
    n_store: int = 8
    gamma_grid: tuple[float, ...] = tuple(np.round(np.arange(0.5, 15.01, 0.5), 6))


@dataclass
class TrialRecords:
    """Columnar per-trial oracle data for one Eb/N0 point."""

    ebn0_db: float
    seed: int
    p_max: int
    book_size: int
    gamma_grid: np.ndarray
    trial_index: np.ndarray
    minp_mask: np.ndarray
    sorted_mag: np.ndarray
    counts: np.ndarray
    orb_true: np.ndarray
    orb_any: np.ndarray
    n_errors: np.ndarray

    COLUMNS = ("trial_index", "minp_mask", "sorted_mag", "counts", "orb_true", "orb_any", "n_errors")

    def __len__(self) -> int:
        return int(self.trial_index.size)

    @property
    def n_store(self) -> int:
        return int(self.sorted_mag.shape[1])

    @classmethod
    def concat(cls, parts: Sequence["TrialRecords"]) -> "TrialRecords":
        first = parts[0]
        cols = {c: np.concatenate([getattr(p, c) for p in parts]) for c in cls.COLUMNS}
        return replace(first, **cols)

    def head(self, count: int) -> "TrialRecords":
        return replace(self, **{c: getattr(self, c)[:count] for c in self.COLUMNS})

    def required_p(self) -> np.ndarray:
        """Smallest successful P per trial, -1 if none up to ``p_max``."""
        m = self.minp_mask
        if m.shape[1] == 0:
            return np.full(len(self), -1)
        first = m.argmax(axis=1)
        return np.where(m.any(axis=1), first, -1)

    def success(self, level: ParallelismLevel) -> np.ndarray:
        if level.kind is LevelKind.CHASE_P:
            if level.value > self.p_max:
                raise ConfigError(f"Chase P={level.value} exceeds recorded p_max={self.p_max}")
            return self.minp_mask[:, level.value]
        if level.kind is LevelKind.ORB_NPAT:
            if level.value > self.book_size:
                raise ConfigError(f"nPat={level.value} exceeds recorded book size {self.book_size}")
            return (self.orb_any >= 0) & (self.orb_any <= level.value) & (self.orb_any == self.orb_true)
        raise ConfigError("generic levels have no recorded outcome")

    def count_column(self, gamma: float) -> np.ndarray:
        hit = np.flatnonzero(np.isclose(self.gamma_grid, gamma, rtol=0, atol=1e-9))
        if hit.size == 0:
            raise ConfigError(f"gamma={gamma} is not in the recorded grid {self.gamma_grid.tolist()}")
        return self.counts[:, hit[0]]

    def statistic(self, kind: SelectorKind, rank: int) -> np.ndarray:
        if not 0 <= rank < self.n_store:
            raise ConfigError(f"observe rank {rank} not recorded (stored prefix {self.n_store})")
        s = self.sorted_mag[:, rank]
        return s if kind is SelectorKind.M else s - self.sorted_mag[:, 0]

    def save(self, path) -> None:
        meta = dict(ebn0_db=self.ebn0_db, seed=self.seed, p_max=self.p_max, book_size=self.book_size)
        np.savez(path, meta=json.dumps(meta), gamma_grid=self.gamma_grid,
                 **{c: getattr(self, c) for c in self.COLUMNS})

    @classmethod
    def load(cls, path) -> "TrialRecords":
        with np.load(path) as z:
            meta = json.loads(str(z["meta"]))
            return cls(gamma_grid=z["gamma_grid"], **meta, **{c: z[c] for c in cls.COLUMNS})


def _empty_like_depth(depth: OracleDepth, count: int, n_store: int):
    return dict(
        minp_mask=np.zeros((count, max(depth.p_max + 1, 0)), dtype=bool),
        sorted_mag=np.zeros((count, n_store), dtype=np.float64),
        counts=np.zeros((count, len(depth.gamma_grid)), dtype=np.int16),
        orb_true=np.full(count, -1, dtype=np.int32),
        orb_any=np.full(count, -1, dtype=np.int32),
        n_errors=np.zeros(count, dtype=np.int16),
    )


def simulate_block(spec: CodeSpec, channel: ChannelConfig, depth: OracleDepth, start: int, count: int,
                   all_zero: bool = False, noiseless: bool = False,
                   tables: FieldTables | None = None) -> TrialRecords:
    tables = tables or build_field(spec.field_poly)
    z, bits = _raw_block(channel.seed, start, count, spec.n, spec.k)
    if all_zero:
        bits[:] = 0
    if noiseless:
        z[:] = 0.0
    tx = encode_batch(bits, spec)
    y = channel.llr_scale * (1.0 - 2.0 * tx + channel.sigma * z)
    parts, lengths, masks, mask_index, orb_rank = _kernels.book_arrays(depth.book)
    n_store = max(depth.n_store, 1)
    out = _empty_like_depth(depth, count, n_store)
    _kernels.trial_oracles(
        y, tx, depth.p_max, tables.exp.astype(np.int64), tables.log.astype(np.int64),
        tables.half_trace_roots.astype(np.int64),
        parts, lengths, masks, mask_index, orb_rank,
        n_store, np.asarray(depth.gamma_grid, dtype=np.float64),
        out["minp_mask"], out["sorted_mag"], out["counts"], out["orb_true"], out["orb_any"], out["n_errors"],
    )
    return TrialRecords(
        ebn0_db=channel.ebn0_db, seed=channel.seed, p_max=depth.p_max,
        book_size=len(depth.book) if depth.book is not None else 0,
        gamma_grid=np.asarray(depth.gamma_grid, dtype=np.float64),
        trial_index=np.arange(start, start + count, dtype=np.int64), **out,
    )


def _block_job(args):
    return simulate_block(*args)


def _chunks(start: int, total: int, chunk: int) -> Iterator[tuple[int, int]]:
    i = start
    while i < start + total:
        yield i, min(chunk, start + total - i)
        i += chunk


def run_trials(spec: CodeSpec, channel: ChannelConfig, trial_count: int, depth: OracleDepth,
               workers: int = 1, chunk: int = DEFAULT_CHUNK, min_errors: int = 0,
               stop_level: ParallelismLevel | None = None, max_trials: int | None = None,
               all_zero: bool = False, noiseless: bool = False, sink: Path | None = None) -> TrialRecords:
    """Simulate ``trial_count`` trials (more if ``min_errors`` is not yet met).

    After the budget is spent, chunks keep coming until ``stop_level`` has
    accumulated ``min_errors`` block errors or ``max_trials`` is reached.  The
    stopping point is decided in chunk order, so results do not depend on
    ``workers``.  ``sink``, if given, is a directory receiving one ``.npz``
    part per chunk plus a manifest.
    """
    if trial_count < 1:
        raise ValueError("trial_count must be >= 1")
    cap = max(trial_count, max_trials or 0)
    tables = build_field(spec.field_poly)
    parts: list[TrialRecords] = []
    errors = 0
    done = 0
    if sink is not None:
        sink = Path(sink)
        sink.mkdir(parents=True, exist_ok=True)

    def need_more():
        if done < trial_count:
            return True
        return min_errors > 0 and stop_level is not None and errors < min_errors and done < cap

    def take(rec):
        nonlocal errors, done
        parts.append(rec)
        done += len(rec)
        if stop_level is not None:
            errors += int((~rec.success(stop_level)).sum())
        if sink is not None:
            _write_part(sink, rec, len(parts) - 1)

    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        next_start = 0
        while need_more():
            want = trial_count - done if done < trial_count else chunk * max(workers, 1)
            want = min(want, cap - done)
            jobs = [(spec, channel, depth, s, c, all_zero, noiseless, None)
                    for s, c in _chunks(next_start, want, chunk)]
            next_start += want
            results = pool.map(_block_job, jobs) if pool else (simulate_block(*j[:-1], tables) for j in jobs)
            for rec in results:
                if not need_more():
                    break
                take(rec)
    except OSError as exc:
        if sink is not None:
            _write_sink_manifest(sink, len(parts), failed=str(exc))
        raise
    finally:
        if pool:
            pool.shutdown()
    if sink is not None:
        _write_sink_manifest(sink, len(parts))
    return TrialRecords.concat(parts)


def _write_part(sink: Path, rec: TrialRecords, i: int):
    rec.save(sink / f"part-{i:05d}.npz")


def _write_sink_manifest(sink: Path, n_parts: int, failed: str | None = None):
    body = {"parts": [f"part-{i:05d}.npz" for i in range(n_parts)], "complete": failed is None}
    if failed:
        body["error"] = failed
    (sink / "records.json").write_text(json.dumps(body, indent=2))


def load_records(path) -> TrialRecords:
    """Load a single ``.npz`` file or a streamed record directory."""
    path = Path(path)
    if path.is_dir():
        manifest = json.loads((path / "records.json").read_text())
        return TrialRecords.concat([TrialRecords.load(path / p) for p in manifest["parts"]])
    return TrialRecords.load(path)


# ---------------------------------------------------------------------------
# offline policy evaluation


@dataclass(frozen=True)
class FixedLevel:
    """Degenerate policy: always the same level, accounted against ``high``."""

    level: ParallelismLevel
    high: ParallelismLevel


Policy = IdaConfig | MIdaConfig | MDIdaConfig | MultiThresholdConfig | FixedLevel


def policy_levels(policy) -> tuple[ParallelismLevel, ...]:
    if isinstance(policy, MultiThresholdConfig):
        return policy.levels
    if isinstance(policy, FixedLevel):
        return (policy.level, policy.high) if policy.level != policy.high else (policy.high,)
    return policy.low, policy.high


def select_level_index(records: TrialRecords, policy) -> np.ndarray:
    """Index into ``policy_levels(policy)`` chosen for each record."""
    if isinstance(policy, FixedLevel):
        return np.zeros(len(records), dtype=np.int64)
    if isinstance(policy, IdaConfig):
        return ida_levels(records.count_column(policy.gamma), policy.phi)
    if isinstance(policy, (MIdaConfig, MDIdaConfig)):
        policy = MultiThresholdConfig.from_two_level(policy)
    stat = records.statistic(policy.selector, policy.observe_rank)
    return ladder_levels(stat, policy.thresholds)


@dataclass(frozen=True)
class BlerComplexityPoint:
    ebn0_db: float
    bler: float
    bler_ci: float
    complexity_pct: float
    deltas: tuple[float, ...]
    trials: int
    block_errors: int

    @property
    def low_confidence(self) -> bool:
        return self.block_errors < MIN_BLOCK_ERRORS


def bler_point(ebn0_db: float, fails: np.ndarray, deltas, complexity: float) -> BlerComplexityPoint:
    trials = int(fails.size)
    errs = int(fails.sum())
    p = errs / trials if trials else 0.0
    ci = 1.96 * math.sqrt(p * (1 - p) / trials) if trials else 0.0
    return BlerComplexityPoint(ebn0_db, p, ci, complexity, tuple(float(d) for d in deltas), trials, errs)


def estimate_bler_complexity(records: TrialRecords, policy) -> BlerComplexityPoint:
    levels = policy_levels(policy)
    idx = select_level_index(records, policy)
    ok = np.stack([records.success(lv) for lv in levels], axis=1)
    fails = ~ok[np.arange(len(records)), idx]
    delta = level_fractions(idx, len(levels))
    if isinstance(policy, FixedLevel):
        comp = 100.0 * policy.level.cost / policy.high.cost
    else:
        comp = complexity_levels(delta, levels)
    return bler_point(records.ebn0_db, fails, delta, comp)


def minp_table(records: TrialRecords, p_max: int | None = None, given_errors: bool = False) -> dict:
    """Fraction of trials whose minimum successful P equals each value.

    Key ``None`` holds trials not decoded at any P <= ``p_max``.  With
    ``given_errors`` the denominator is restricted to trials whose hard
    decision contains at least one bit error.
    """
    p_max = records.p_max if p_max is None else p_max
    if p_max > records.p_max:
        raise ConfigError(f"p_max={p_max} exceeds recorded p_max={records.p_max}")
    sub = records.minp_mask[:, : p_max + 1]
    req = np.where(sub.any(axis=1), sub.argmax(axis=1), -1)
    if given_errors:
        req = req[records.n_errors > 0]
    total = max(req.size, 1)
    table = {p: float(np.count_nonzero(req == p)) / total for p in range(p_max + 1)}
    table[None] = float(np.count_nonzero(req < 0)) / total
    return table


@dataclass(frozen=True)
class DistributionStats:
    condition: int
    mean_mag: np.ndarray
    mean_diff: np.ndarray
    sample_count: int


def orb_required_weight(records: TrialRecords, book: PatternBook) -> np.ndarray:
    """Logistic weight of the pattern that first yields the transmitted word (-1 if never)."""
    ok = (records.orb_any >= 0) & (records.orb_any == records.orb_true)
    w = np.concatenate([[0], book.weights])
    return np.where(ok, w[np.clip(records.orb_true, 0, None)], -1)


def reliability_distributions(records: TrialRecords, ranks: int, condition: str = "chase_p",
                              book: PatternBook | None = None) -> list[DistributionStats]:
    """Mean ``|y~_i|`` and ``|y~_i| - |y~_0|`` for ``i < ranks`` per required-level bucket.

    Empty buckets are kept with ``sample_count == 0`` and NaN means and logged.
    """
    if ranks > records.n_store:
        raise ConfigError(f"{ranks} ranks requested, only {records.n_store} stored")
    if condition == "chase_p":
        req = records.required_p()
        buckets = range(records.p_max + 1)
    elif condition == "orb_weight":
        if book is None:
            raise ConfigError("orb_weight conditioning needs the pattern book")
        req = orb_required_weight(records, book)
        buckets = range(int(book.weights[-1]) + 1)
    else:
        raise ConfigError(f"unknown condition {condition!r}")
    mags = records.sorted_mag[:, :ranks]
    out = []
    for b in buckets:
        sel = req == b
        cnt = int(sel.sum())
        if cnt == 0:
            log.warning("empty bucket %s=%d", condition, b)
            nan = np.full(ranks, np.nan)
            out.append(DistributionStats(b, nan, nan, 0))
            continue
        mean = mags[sel].mean(axis=0)
        diff = (mags[sel] - mags[sel, :1]).mean(axis=0)
        out.append(DistributionStats(b, mean, diff, cnt))
    return out
