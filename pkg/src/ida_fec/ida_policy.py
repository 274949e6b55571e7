"""Input-distribution-aware parallelism selectors and complexity accounting.

Three selectors pick a decoder parallelism level before decoding:

* IDA counts channel LLRs with ``|y_i| <= gamma`` and picks the low level
  when that count is below ``phi``.
* M-IDA looks at one sorted magnitude ``|y~_r|`` and picks low when it
  exceeds ``gamma_m``.
* MD-IDA uses the gap ``|y~_r| - |y~_0|`` against ``gamma_md``.

Multi-threshold ladders generalise M/MD to several levels.  The scalar
selectors act on a single received vector; the ``*_levels`` helpers act on
arrays of precomputed statistics and return level indices, which is what the
Monte-Carlo evaluation uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .chase import ReliabilityView


class ConfigError(ValueError):
    pass


class LevelKind(str, Enum):
    CHASE_P = "chase_p"
    ORB_NPAT = "orb_npat"
    GENERIC_L = "generic_l"


@dataclass(frozen=True, order=True)
class ParallelismLevel:
    kind: LevelKind
    value: int

    def __post_init__(self):
        if self.value < 0:
            raise ConfigError(f"parallelism value must be >= 0, got {self.value}")

    @property
    def cost(self) -> int:
        """Active decoding paths: 2**P for Chase, nPat or L otherwise."""
        return 2 ** self.value if self.kind is LevelKind.CHASE_P else self.value


def chase_p(p: int) -> ParallelismLevel:
    return ParallelismLevel(LevelKind.CHASE_P, p)


def orb_npat(n: int) -> ParallelismLevel:
    return ParallelismLevel(LevelKind.ORB_NPAT, n)


def _check_pair(low: ParallelismLevel, high: ParallelismLevel):
    if low.kind is not high.kind:
        raise ConfigError("low and high levels must be of the same kind")
    if not low.value < high.value:
        raise ConfigError(f"low level {low.value} must be below high level {high.value}")


@dataclass(frozen=True)
class IdaConfig:
    gamma: float
    phi: int
    low: ParallelismLevel
    high: ParallelismLevel

    def __post_init__(self):
        if not self.gamma > 0:
            raise ConfigError("gamma must be > 0")
        if self.phi < 1:
            raise ConfigError("phi must be >= 1")
        _check_pair(self.low, self.high)


@dataclass(frozen=True)
class MIdaConfig:
    gamma_m: float
    observe_rank: int
    low: ParallelismLevel
    high: ParallelismLevel

    def __post_init__(self):
        if not self.gamma_m > 0:
            raise ConfigError("gamma_m must be > 0")
        if self.observe_rank < 0:
            raise ConfigError("observe_rank must be >= 0")
        _check_pair(self.low, self.high)


@dataclass(frozen=True)
class MDIdaConfig:
    gamma_md: float
    observe_rank: int
    low: ParallelismLevel
    high: ParallelismLevel

    def __post_init__(self):
        if not self.gamma_md > 0:
            raise ConfigError("gamma_md must be > 0")
        if self.observe_rank < 0:
            raise ConfigError("observe_rank must be >= 0")
        _check_pair(self.low, self.high)


class SelectorKind(str, Enum):
    M = "M"
    MD = "MD"


@dataclass(frozen=True)
class MultiThresholdConfig:
    selector: SelectorKind
    observe_rank: int
    thresholds: tuple[float, ...]
    levels: tuple[ParallelismLevel, ...]

    def __post_init__(self):
        th, lv = self.thresholds, self.levels
        if len(lv) != len(th) + 1:
            raise ConfigError(f"need len(levels) == len(thresholds) + 1, got {len(lv)} and {len(th)}")
        if any(a <= b for a, b in zip(th, th[1:])):
            raise ConfigError(f"thresholds must be strictly descending: {th}")
        if any(a.kind is not b.kind or a.value >= b.value for a, b in zip(lv, lv[1:])):
            raise ConfigError("levels must share a kind and be strictly ascending")
        if self.observe_rank < 0:
            raise ConfigError("observe_rank must be >= 0")

    @classmethod
    def from_two_level(cls, cfg: MIdaConfig | MDIdaConfig) -> "MultiThresholdConfig":
        if isinstance(cfg, MIdaConfig):
            return cls(SelectorKind.M, cfg.observe_rank, (cfg.gamma_m,), (cfg.low, cfg.high))
        return cls(SelectorKind.MD, cfg.observe_rank, (cfg.gamma_md,), (cfg.low, cfg.high))


def m_statistic(view: ReliabilityView, rank: int) -> float:
    return float(view.sorted_mag[rank])


def md_statistic(view: ReliabilityView, rank: int) -> float:
    return float(view.sorted_mag[rank] - view.sorted_mag[0])


def ida_select(y, cfg: IdaConfig) -> ParallelismLevel:
    count = int(np.count_nonzero(np.abs(np.asarray(y)) <= cfg.gamma))
    return cfg.low if count < cfg.phi else cfg.high


def mida_select(view: ReliabilityView, cfg: MIdaConfig) -> ParallelismLevel:
    return cfg.low if m_statistic(view, cfg.observe_rank) > cfg.gamma_m else cfg.high


def mdida_select(view: ReliabilityView, cfg: MDIdaConfig) -> ParallelismLevel:
    return cfg.low if md_statistic(view, cfg.observe_rank) > cfg.gamma_md else cfg.high


def multi_select(view: ReliabilityView, cfg: MultiThresholdConfig) -> ParallelismLevel:
    if cfg.selector is SelectorKind.M:
        s = m_statistic(view, cfg.observe_rank)
    else:
        s = md_statistic(view, cfg.observe_rank)
    return cfg.levels[int(ladder_levels(np.array([s]), cfg.thresholds)[0])]


def ladder_levels(stat: np.ndarray, thresholds: Sequence[float]) -> np.ndarray:
    """Level index per statistic: number of thresholds ``>= s``."""
    asc = np.sort(np.asarray(thresholds, dtype=np.float64))
    return len(asc) - np.searchsorted(asc, np.asarray(stat, dtype=np.float64), side="left")


def ida_levels(counts: np.ndarray, phi: int) -> np.ndarray:
    """0 (low) where the below-gamma count is under ``phi``, else 1 (high)."""
    return (np.asarray(counts) >= phi).astype(np.int64)


def level_fractions(level_index: np.ndarray, n_levels: int) -> np.ndarray:
    if level_index.size == 0:
        return np.zeros(n_levels)
    return np.bincount(level_index, minlength=n_levels)[:n_levels] / level_index.size


def _check_fractions(delta):
    delta = np.asarray(delta, dtype=np.float64)
    if np.any(delta < -1e-12) or np.any(delta > 1 + 1e-12) or abs(delta.sum() - 1.0) > 1e-9:
        raise ValueError(f"level fractions must lie in [0, 1] and sum to 1, got {delta.tolist()}")
    return delta


def complexity_two_level(delta: float, low: ParallelismLevel, high: ParallelismLevel) -> float:
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    return 100.0 * (delta * low.cost + (1.0 - delta) * high.cost) / high.cost


def complexity_levels(delta, levels: Sequence[ParallelismLevel]) -> float:
    """Percentage of active paths relative to the largest level."""
    delta = _check_fractions(delta)
    costs = np.array([lv.cost for lv in levels], dtype=np.float64)
    return float(100.0 * np.dot(delta, costs) / costs[-1])


def complexity_multi_chase(delta, p_levels: Sequence[int], p_high: int) -> float:
    delta = _check_fractions(delta)
    costs = np.exp2(np.asarray(p_levels, dtype=np.float64))
    return float(100.0 * np.dot(delta, costs) / 2.0 ** p_high)


def complexity_multi_orbgrand(delta, npat_levels: Sequence[int], npat_high: int) -> float:
    delta = _check_fractions(delta)
    return float(100.0 * np.dot(delta, np.asarray(npat_levels, dtype=np.float64)) / npat_high)
