"""Offline threshold search over recorded trials.

All candidates are scored against the same records, so the BLER ceiling is a
paired comparison: a threshold is feasible when its block-error count does not
exceed ``slack * errors(reference)``.  Records are sorted by the selector
statistic once; each candidate ladder is then scored in O(levels) from prefix
sums.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .channel_sim import TrialRecords, estimate_bler_complexity, FixedLevel
from .ida_policy import (
    ConfigError,
    IdaConfig,
    MultiThresholdConfig,
    ParallelismLevel,
    SelectorKind,
)


class InfeasibleError(RuntimeError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class TuneObjective:
    reference: ParallelismLevel
    slack: float = 1.0
    grid: tuple[float, ...] | None = None
    extra: tuple[float, ...] = ()

    def __post_init__(self):
        if self.slack < 1.0:
            raise ConfigError("slack factor must be >= 1")
        if self.grid is not None and len(self.grid) == 0:
            raise ConfigError("threshold grid must not be empty")


@dataclass(frozen=True)
class TuneResult:
    thresholds: tuple[float, ...]
    levels: tuple[ParallelismLevel, ...]
    bler: float
    complexity_pct: float
    block_errors: int
    ceiling_errors: float
    feasible: bool
    feasible_count: int
    reference_bler: float
    phi: int | None = None
    selector: SelectorKind | None = None
    observe_rank: int | None = None
    policy: object = field(default=None, compare=False)

    @property
    def threshold(self) -> float:
        return self.thresholds[0]


def quantile_grid(stat: np.ndarray, extra: Sequence[float] = ()) -> np.ndarray:
    """Empirical quantiles every 0.5 percentile, plus ``extra`` values."""
    q = np.quantile(stat, np.linspace(0.0, 1.0, 201)) if stat.size else np.zeros(0)
    return np.unique(np.concatenate([q, np.asarray(extra, dtype=np.float64)]))


class _LadderScorer:
    """Scores threshold ladders on records sorted by the statistic."""

    def __init__(self, stat: np.ndarray, ok: np.ndarray, costs: np.ndarray):
        order = np.argsort(stat, kind="stable")
        self.s = stat[order]
        fail = ~ok[order]
        self.cumfail = np.vstack([np.zeros(ok.shape[1], dtype=np.int64), np.cumsum(fail, axis=0)])
        self.costs = costs.astype(np.float64)
        self.T = stat.size

    def cut(self, thresholds) -> np.ndarray:
        """Boundaries: records ``[cut[j+1], cut[j])`` (sorted) go to level ``j``."""
        c = np.searchsorted(self.s, np.asarray(thresholds, dtype=np.float64), side="right")
        return np.concatenate([[self.T], c, [0]])

    def score(self, thresholds) -> tuple[int, float]:
        cut = self.cut(thresholds)
        fails = 0
        cost = 0.0
        for j in range(len(self.costs)):
            hi, lo = cut[j], cut[j + 1]
            if hi > lo:
                fails += int(self.cumfail[hi, j] - self.cumfail[lo, j])
                cost += (hi - lo) * self.costs[j]
        return fails, 100.0 * cost / (self.T * self.costs[-1])

    def cells(self, grid: np.ndarray):
        """Record counts and per-level failures in the cells ``(grid[k-1], grid[k]]``."""
        c = np.concatenate([[0], np.searchsorted(self.s, grid, side="right")])
        return np.diff(c), np.diff(self.cumfail[c], axis=0)

    def sweep_two_level(self, grid: np.ndarray):
        """Vectorised (fails, complexity) for every single threshold in ``grid``."""
        c = np.searchsorted(self.s, grid, side="right")
        fails = self.cumfail[c, 1] + (self.cumfail[self.T, 0] - self.cumfail[c, 0])
        comp = 100.0 * (c * self.costs[1] + (self.T - c) * self.costs[0]) / (self.T * self.costs[1])
        return fails, comp


def _ceiling(records: TrialRecords, objective: TuneObjective):
    ref_fail = int((~records.success(objective.reference)).sum())
    return ref_fail * objective.slack, ref_fail / max(len(records), 1)


def compact_ladder(thresholds, levels, selector: SelectorKind, rank: int):
    """Exact policy for a non-strict ladder: levels left empty by ties or +inf are dropped.

    Level ``j`` receives statistics in ``(th[j], th[j-1]]``, so it is empty
    when ``th[j] == th[j-1]`` (or ``th[0]`` is +inf).  The largest level is
    always kept, so complexity stays normalised to it.
    """
    th = [float(t) for t in thresholds]
    m = len(th)
    kept = [j for j in range(m) if not (th[j] == (th[j - 1] if j > 0 else np.inf))] + [m]
    if len(kept) == 1:
        return FixedLevel(levels[-1], levels[-1])
    return MultiThresholdConfig(selector, rank, tuple(th[b - 1] for b in kept[1:]),
                                tuple(levels[j] for j in kept))


def _result(records, thresholds, levels, phi, ceiling, ref_bler, feasible_count, selector, rank):
    if phi is not None:
        policy = IdaConfig(thresholds[0], phi, levels[0], levels[1])
    else:
        policy = compact_ladder(thresholds, levels, selector, rank)
    point = estimate_bler_complexity(records, policy)
    return TuneResult(
        thresholds=tuple(float(t) for t in thresholds), levels=tuple(levels), bler=point.bler,
        complexity_pct=point.complexity_pct, block_errors=point.block_errors, ceiling_errors=ceiling,
        feasible=point.block_errors <= ceiling, feasible_count=feasible_count, reference_bler=ref_bler, phi=phi,
        selector=selector, observe_rank=rank, policy=policy,
    )


def sweep_single_threshold(records: TrialRecords, selector: SelectorKind, observe_rank: int,
                           low: ParallelismLevel, high: ParallelismLevel,
                           objective: TuneObjective) -> TuneResult:
    """Lowest-complexity feasible threshold for a two-level M or MD selector.

    Equal complexities resolve to the larger (more conservative) threshold.
    """
    selector = SelectorKind(selector)
    stat = records.statistic(selector, observe_rank)
    grid = np.asarray(objective.grid, dtype=np.float64) if objective.grid is not None \
        else quantile_grid(stat, objective.extra)
    grid = np.unique(np.concatenate([grid, [np.inf]]))
    ok = np.stack([records.success(low), records.success(high)], axis=1)
    scorer = _LadderScorer(stat, ok, np.array([low.cost, high.cost]))
    fails, comp = scorer.sweep_two_level(grid)
    ceiling, ref_bler = _ceiling(records, objective)
    feas = fails <= ceiling
    if not feas.any():
        best = int(np.lexsort((-grid, fails))[0])
        witness = _result(records, (grid[best],), (low, high), None, ceiling, ref_bler, 0, selector, observe_rank)
        raise InfeasibleError("no threshold in the grid meets the BLER ceiling", witness)
    cand = np.flatnonzero(feas)
    best = cand[np.lexsort((-grid[cand], comp[cand]))[0]]
    return _result(records, (grid[best],), (low, high), None, ceiling, ref_bler, int(feas.sum()),
                   selector, observe_rank)


def sweep_ida(records: TrialRecords, low: ParallelismLevel, high: ParallelismLevel,
              objective: TuneObjective, phis: Sequence[int] | None = None) -> TuneResult:
    """Grid search of (gamma, phi) for count-based IDA over the recorded gamma grid.

    Ties resolve to larger gamma, then smaller phi (both favour ``high``).
    """
    ok_low, ok_high = records.success(low), records.success(high)
    ceiling, ref_bler = _ceiling(records, objective)
    phis = list(phis) if phis is not None else list(range(1, int(records.counts.max(initial=0)) + 2))
    rows = []
    for gi, g in enumerate(records.gamma_grid):
        c = records.counts[:, gi]
        for phi in phis:
            use_low = c < phi
            fails = int(np.count_nonzero(np.where(use_low, ~ok_low, ~ok_high)))
            d = use_low.mean()
            comp = 100.0 * (d * low.cost + (1 - d) * high.cost) / high.cost
            rows.append((fails <= ceiling, comp, -g, phi, fails, g))
    feasible = [r for r in rows if r[0]]
    if not feasible:
        r = min(rows, key=lambda r: (r[4], r[2], r[3]))
        witness = _result(records, (r[5],), (low, high), r[3], ceiling, ref_bler, 0, None, None)
        raise InfeasibleError("no (gamma, phi) pair meets the BLER ceiling", witness)
    r = min(feasible, key=lambda r: (r[1], r[2], r[3]))
    return _result(records, (r[5],), (low, high), r[3], ceiling, ref_bler, len(feasible), None, None)


EXACT_FAIL_BUDGET = 20000


def _cells_to_ladder(lv: np.ndarray, grid: np.ndarray, m: int) -> np.ndarray:
    th = np.full(m, -np.inf)
    for j in range(m):
        ks = np.flatnonzero(lv >= j + 1)
        if ks.size:
            th[j] = grid[ks.max()]
    return th


def constrained_ladder(n: np.ndarray, fails: np.ndarray, costs: np.ndarray, grid: np.ndarray,
                       budget: int) -> np.ndarray | None:
    """Cheapest ladder on ``grid`` with at most ``budget`` failures, or None.

    Cells ``(grid[k-1], grid[k]]`` are ordered by ascending statistic and must
    take non-increasing level indices.  Dynamic programme over
    (cell, level, failures used); exact for the given grid.
    """
    C, L = fails.shape
    F = int(budget) + 1
    unit = costs / costs[-1]
    inf = np.inf
    V = np.full((L, F), inf)
    for l in range(L):
        if fails[0, l] < F:
            V[l, fails[0, l]] = n[0] * unit[l]
    back = np.zeros((C, L, F), dtype=np.int8)
    for k in range(1, C):
        # suffix minimum over levels l' >= l, lowest index on ties
        W = V.copy()
        arg = np.broadcast_to(np.arange(L)[:, None], (L, F)).copy()
        for l in range(L - 2, -1, -1):
            take = W[l + 1] < W[l]
            W[l] = np.where(take, W[l + 1], W[l])
            arg[l] = np.where(take, arg[l + 1], arg[l])
        V = np.full((L, F), inf)
        for l in range(L):
            d = int(fails[k, l])
            if d < F:
                V[l, d:] = W[l, : F - d] + n[k] * unit[l]
                back[k, l, d:] = arg[l, : F - d]
    flat = int(np.argmin(V))
    if not np.isfinite(V.flat[flat]):
        return None
    l, f = divmod(flat, F)
    lv = np.empty(C, dtype=np.int64)
    lv[-1] = l
    for k in range(C - 1, 0, -1):
        prev = int(back[k, l, f])
        f -= int(fails[k, l])
        l = prev
        lv[k - 1] = l
    return _cells_to_ladder(lv, grid, L - 1)


def lagrangian_ladder(n: np.ndarray, fails: np.ndarray, costs: np.ndarray, grid: np.ndarray,
                      lam: float) -> np.ndarray:
    """Ladder minimising ``cost + lam * failures`` over monotone cell assignments."""
    C, L = fails.shape
    cc = n[:, None] * (costs / costs[-1])[None, :] + lam * fails
    best = cc[0].copy()
    back = np.zeros((C, L), dtype=np.int64)
    for k in range(1, C):
        arg = np.empty(L, dtype=np.int64)
        arg[L - 1] = L - 1
        for l in range(L - 2, -1, -1):
            arg[l] = l if best[l] <= best[arg[l + 1]] else arg[l + 1]
        back[k] = arg
        best = cc[k] + best[arg]
    lv = np.empty(C, dtype=np.int64)
    lv[-1] = int(np.argmin(best))
    for k in range(C - 1, 0, -1):
        lv[k - 1] = back[k, lv[k]]
    return _cells_to_ladder(lv, grid, L - 1)


def _global_seed(scorer: "_LadderScorer", grid: np.ndarray, ceiling: float, steps: int = 40):
    """Exact on-grid optimum when the failure budget is small, else the best
    feasible point of the Lagrangian hull (bisection on ``lam``)."""
    n, fails = scorer.cells(grid)
    if ceiling <= EXACT_FAIL_BUDGET:
        return constrained_ladder(n, fails, scorer.costs, grid, int(np.floor(ceiling)))
    best = None

    def solve(lam):
        nonlocal best
        th = lagrangian_ladder(n, fails, scorer.costs, grid, lam)
        f, c = scorer.score(th)
        if f <= ceiling and (best is None or c < best[1] - 1e-12):
            best = (th, c)
        return f <= ceiling

    lo, hi = 0.0, 1.0
    while not solve(hi) and hi < 1e12:
        lo, hi = hi, hi * 10.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if solve(mid):
            hi = mid
        else:
            lo = mid
    return None if best is None else best[0]


def sweep_multi_threshold(records: TrialRecords, selector: SelectorKind, observe_rank: int,
                          levels: Sequence[ParallelismLevel], objective: TuneObjective,
                          max_passes: int = 20) -> TuneResult:
    """Coordinate descent over a descending threshold ladder.

    The primary start has every threshold at +inf (all trials on the largest
    level); thresholds are lowered greedily from the one guarding the largest
    level down to the smallest, then refined one coordinate at a time until
    nothing improves.  Because a single greedy step can spend the whole
    error budget, descent is also run from a global on-grid solution
    (``constrained_ladder``, or the Lagrangian hull for large budgets); the
    cheaper result wins, ties going to the primary start.
    """
    selector = SelectorKind(selector)
    levels = tuple(sorted(levels, key=lambda lv: lv.value))
    m = len(levels) - 1
    if not 1 <= m <= 4:
        raise ConfigError("ladder must have between 2 and 5 levels")
    stat = records.statistic(selector, observe_rank)
    grid = np.asarray(objective.grid, dtype=np.float64) if objective.grid is not None \
        else quantile_grid(stat, objective.extra)
    grid = np.unique(np.concatenate([grid, [np.inf]]))
    ok = np.stack([records.success(lv) for lv in levels], axis=1)
    scorer = _LadderScorer(stat, ok, np.array([lv.cost for lv in levels]))
    ceiling, ref_bler = _ceiling(records, objective)

    start = np.full(m, np.inf)
    if scorer.score(start)[0] > ceiling:
        witness = _result(records, tuple(start), levels, None, ceiling, ref_bler, 0, selector, observe_rank)
        raise InfeasibleError("even the largest level exceeds the BLER ceiling", witness)
    feasible_seen = 0

    def descend(th, greedy):
        nonlocal feasible_seen
        th = th.copy()
        best_comp = scorer.score(th)[1]

        def improve(j):
            nonlocal best_comp, feasible_seen
            upper = th[j - 1] if j > 0 else np.inf
            lower = th[j + 1] if j < m - 1 else -np.inf
            changed = False
            # descending scan so equal complexity keeps the larger threshold
            for g in grid[::-1]:
                if g > upper or g < lower or g == th[j]:
                    continue
                trial = th.copy()
                trial[j] = g
                f, c = scorer.score(trial)
                if f <= ceiling:
                    feasible_seen += 1
                    if c < best_comp - 1e-12:
                        th[j] = g
                        best_comp = c
                        changed = True
            return changed

        if greedy:
            for j in range(m - 1, -1, -1):
                improve(j)
        for _ in range(max_passes):
            if not any([improve(j) for j in range(m - 1, -1, -1)]):
                break
        return th, best_comp

    th, comp = descend(start, greedy=True)
    seed = _global_seed(scorer, grid, ceiling) if m > 1 else None
    if seed is not None:
        th2, comp2 = descend(seed, greedy=False)
        if comp2 < comp - 1e-12:
            th = th2
    return _result(records, tuple(th), levels, None, ceiling, ref_bler, feasible_seen, selector, observe_rank)
