"""Run configuration: one YAML (or JSON) file drives a whole experiment."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any

import yaml

from .channel_sim import FixedLevel, OracleDepth
from .galois_bch import FIELD_POLY, GEN_POLY, CodeSpec
from .ida_policy import (
    ConfigError,
    IdaConfig,
    LevelKind,
    MDIdaConfig,
    MIdaConfig,
    MultiThresholdConfig,
    ParallelismLevel,
    SelectorKind,
)
from .orbgrand import PatternBook, generate_pattern_book


@dataclass
class CodeSection:
    n: int = 255
    k: int = 239
    t: int = 2
    gen_poly: str = f"{GEN_POLY:#x}"
    field_poly: str = f"{FIELD_POLY:#x}"


@dataclass
class ChannelSection:
    ebn0_db: list = field(default_factory=lambda: [6.5])
    seed: int = 1


@dataclass
class SimulationSection:
    trials: int = 10000
    min_errors: int = 0
    stop_level: int | None = None
    max_trials: int | None = None
    workers: int = 1
    chunk: int = 8192
    all_zero: bool = False
    save_records: bool = False


@dataclass
class OracleSection:
    p_max: int = 6
    w_max: int = 0
    max_count: int | None = None
    n_store: int = 8
    gamma_grid: list | None = None


@dataclass
class DistributionSection:
    ranks: int = 6
    condition: str = "chase_p"


@dataclass
class TuneSection:
    selector: str = "M"
    observe_rank: int | None = None
    levels: list = field(default_factory=lambda: [4, 5])
    reference: int = 5
    slack: float = 1.0
    extra: list = field(default_factory=list)


@dataclass
class RunConfig:
    code: CodeSection = field(default_factory=CodeSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    simulation: SimulationSection = field(default_factory=SimulationSection)
    oracle: OracleSection = field(default_factory=OracleSection)
    decoder: str = "chase"
    references: list = field(default_factory=list)
    policies: list = field(default_factory=list)
    distribution: DistributionSection = field(default_factory=DistributionSection)
    tune: TuneSection | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """SHA-256 of the canonical configuration; ``simulation.workers`` is
        excluded because it never changes results."""
        d = self.to_dict()
        d["simulation"].pop("workers")
        canon = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    @property
    def level_kind(self) -> LevelKind:
        return LevelKind.ORB_NPAT if self.decoder == "orbgrand" else LevelKind.CHASE_P

    def level(self, value: int) -> ParallelismLevel:
        return ParallelismLevel(self.level_kind, int(value))

    def code_spec(self) -> CodeSpec:
        return CodeSpec.from_config(asdict(self.code))

    def book(self) -> PatternBook | None:
        o = self.oracle
        return generate_pattern_book(o.w_max, o.max_count, self.code.n) if o.w_max > 0 else None

    def depth(self) -> OracleDepth:
        o = self.oracle
        kw = dict(p_max=o.p_max, book=self.book(), n_store=o.n_store)
        if o.gamma_grid is not None:
            kw["gamma_grid"] = tuple(float(g) for g in o.gamma_grid)
        return OracleDepth(**kw)

    def default_rank(self, high: int) -> int:
        """Observed sorted rank: P_high-1 for Chase, w(nPat_high)-1 for ORBGRAND."""
        if self.decoder == "orbgrand":
            book = self.book()
            if not 1 <= high <= len(book):
                raise ConfigError(f"nPat={high} outside the pattern book (size {len(book)})")
            return int(book.weights[high - 1]) - 1
        return high - 1


_SECTIONS = {
    "code": CodeSection, "channel": ChannelSection, "simulation": SimulationSection,
    "oracle": OracleSection, "distribution": DistributionSection, "tune": TuneSection,
}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(f'{path}.{u}' if path else u for u in unknown)}")
    return cls(**data)


def _policy(raw: dict, i: int, cfg: RunConfig):
    path = f"policies[{i}]"
    allowed = {
        "ida": {"name", "kind", "gamma", "phi", "low", "high"},
        "m": {"name", "kind", "gamma", "low", "high", "observe_rank"},
        "md": {"name", "kind", "gamma", "low", "high", "observe_rank"},
        "multi_m": {"name", "kind", "thresholds", "levels", "observe_rank"},
        "multi_md": {"name", "kind", "thresholds", "levels", "observe_rank"},
        "fixed": {"name", "kind", "level", "high"},
    }
    kind = raw.get("kind")
    if kind not in allowed:
        raise ConfigError(f"{path}.kind: expected one of {sorted(allowed)}, got {kind!r}")
    unknown = sorted(set(raw) - allowed[kind])
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(f'{path}.{u}' for u in unknown)}")
    try:
        high = max(raw["levels"]) if kind.startswith("multi") else raw["high"]
        rank = raw.get("observe_rank")
        rank = cfg.default_rank(int(high)) if rank is None else int(rank)
        if kind == "ida":
            phi = raw["phi"]
            if int(phi) < 1:
                raise ConfigError(f"{path}.phi: phi must be >= 1, got {phi}")
            return IdaConfig(float(raw["gamma"]), int(phi), cfg.level(raw["low"]), cfg.level(raw["high"]))
        if kind == "m":
            return MIdaConfig(float(raw["gamma"]), rank, cfg.level(raw["low"]), cfg.level(raw["high"]))
        if kind == "md":
            return MDIdaConfig(float(raw["gamma"]), rank, cfg.level(raw["low"]), cfg.level(raw["high"]))
        if kind in ("multi_m", "multi_md"):
            sel = SelectorKind.M if kind == "multi_m" else SelectorKind.MD
            return MultiThresholdConfig(sel, rank, tuple(float(t) for t in raw["thresholds"]),
                                        tuple(cfg.level(v) for v in raw["levels"]))
        return FixedLevel(cfg.level(raw["level"]), cfg.level(raw["high"]))
    except KeyError as exc:
        raise ConfigError(f"{path}.{exc.args[0]}: required key missing") from None
    except ConfigError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(path) else f"{path}: {msg}") from None


def policy_name(raw: dict, i: int) -> str:
    return str(raw.get("name", f"{raw.get('kind')}-{i}"))


def parse_config(data: dict[str, Any]) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a mapping")
    top = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(data) - top)
    if unknown:
        raise ConfigError(f"unknown key(s) {', '.join(unknown)}")
    kw = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kw[key] = None if value is None and key == "tune" else _build(_SECTIONS[key], value or {}, key)
        else:
            kw[key] = value
    cfg = RunConfig(**kw)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    if cfg.decoder not in ("chase", "orbgrand"):
        raise ConfigError(f"decoder: expected 'chase' or 'orbgrand', got {cfg.decoder!r}")
    if not isinstance(cfg.channel.ebn0_db, list):
        cfg.channel.ebn0_db = [cfg.channel.ebn0_db]
    if cfg.simulation.trials < 1:
        raise ConfigError("simulation.trials: must be >= 1")
    if cfg.simulation.workers < 1:
        raise ConfigError("simulation.workers: must be >= 1")
    if cfg.decoder == "orbgrand" and cfg.oracle.w_max < 1:
        raise ConfigError("oracle.w_max: ORBGRAND runs need a pattern book (w_max >= 1)")
    try:
        cfg.code_spec()
    except ValueError as exc:
        raise ConfigError(f"code: {exc}") from None
    for i, raw in enumerate(cfg.policies):
        if not isinstance(raw, dict):
            raise ConfigError(f"policies[{i}]: expected a mapping")
        _policy(raw, i, cfg)
    if cfg.distribution.condition not in ("chase_p", "orb_weight"):
        raise ConfigError("distribution.condition: expected 'chase_p' or 'orb_weight'")
    if cfg.tune is not None and cfg.tune.selector not in ("M", "MD", "IDA"):
        raise ConfigError("tune.selector: expected 'M', 'MD' or 'IDA'")


def policies(cfg: RunConfig) -> list[tuple[str, Any]]:
    return [(policy_name(raw, i), _policy(raw, i, cfg)) for i, raw in enumerate(cfg.policies)]


def load_config(path, overrides: dict | None = None) -> RunConfig:
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = data
        *head, last = dotted.split(".")
        for h in head:
            node = node.setdefault(h, {})
        node[last] = value
    return parse_config(data)
