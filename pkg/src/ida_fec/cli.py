"""``ida-fec`` command line: simulate, aggregate, tune and emit reports.

Exit codes: 0 success, 2 configuration error, 3 infeasible tuning, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import report
from .channel_sim import (
    ChannelConfig,
    FixedLevel,
    estimate_bler_complexity,
    load_records,
    minp_table,
    policy_levels,
    reliability_distributions,
    run_trials,
)
from .config import RunConfig, load_config, policies
from .ida_policy import ConfigError, SelectorKind
from .orbgrand import generate_pattern_book
from .tuner import InfeasibleError, TuneObjective, sweep_ida, sweep_multi_threshold, sweep_single_threshold

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_IO = 0, 2, 3, 4
EMITTERS = ("bler", "table1", "dist", "patterns")

log = logging.getLogger("ida_fec")


def _fmt_db(x: float) -> str:
    return f"{x:g}".replace(".", "p").replace("-", "m")


def table1_rows(records) -> tuple[dict, dict, dict]:
    req = records.required_p()
    counts = {p: int(np.count_nonzero(req == (-1 if p is None else p))) for p in list(range(records.p_max + 1)) + [None]}
    return minp_table(records), minp_table(records, given_errors=True), counts


def simulate(cfg: RunConfig, emit: list[str], out_dir: Path, manifest: report.RunManifest) -> None:
    spec = cfg.code_spec()
    depth = cfg.depth()
    sim = cfg.simulation
    named = policies(cfg)
    highs = [policy_levels(p)[-1] for _, p in named] + [cfg.level(v) for v in cfg.references]
    top = max(highs, key=lambda lv: lv.value) if highs else None
    refs = [(f"{cfg.decoder}-{v}", FixedLevel(cfg.level(v), top)) for v in cfg.references]
    stop_level = cfg.level(sim.stop_level) if sim.stop_level is not None else None

    points, t1, dists = [], [], []
    for ebn0 in cfg.channel.ebn0_db:
        channel = ChannelConfig(float(ebn0), spec.rate, int(cfg.channel.seed))
        sink = out_dir / f"records-{_fmt_db(ebn0)}" if sim.save_records else None
        rec = run_trials(spec, channel, sim.trials, depth, workers=sim.workers, chunk=sim.chunk,
                         min_errors=sim.min_errors, stop_level=stop_level, max_trials=sim.max_trials,
                         all_zero=sim.all_zero, sink=sink)
        if sink is not None:
            manifest.outputs.append(str(sink))
        log.info("Eb/N0 %s dB: %d trials", ebn0, len(rec))
        if "bler" in emit:
            for name, pol in refs + named:
                points.append((name, estimate_bler_complexity(rec, pol)))
        if "table1" in emit:
            if depth.p_max < 0:
                raise ConfigError("table1 needs the Chase oracle (oracle.p_max >= 0)")
            t1.append((float(ebn0), *table1_rows(rec)))
        if "dist" in emit:
            for d in reliability_distributions(rec, cfg.distribution.ranks, cfg.distribution.condition, depth.book):
                dists.append((float(ebn0), cfg.distribution.condition, d))

    if "bler" in emit:
        manifest.outputs.append(str(report.atomic_write(out_dir / "bler.csv", report.bler_csv(points))))
    if "table1" in emit:
        manifest.outputs.append(str(report.atomic_write(out_dir / "table1.csv", report.table1_csv(t1))))
    if "dist" in emit:
        manifest.outputs.append(str(report.atomic_write(out_dir / "dist.csv", report.dist_csv(dists))))
    if "patterns" in emit:
        book = depth.book or generate_pattern_book(22)
        manifest.outputs.append(str(report.atomic_write(out_dir / "patterns.csv", report.patterns_csv(book))))


def tune(cfg: RunConfig, records_path: Path, out_dir: Path, manifest: report.RunManifest) -> dict:
    if cfg.tune is None:
        raise ConfigError("tune: section missing from configuration")
    t = cfg.tune
    records = load_records(records_path)
    levels = [cfg.level(v) for v in sorted(t.levels)]
    objective = TuneObjective(cfg.level(t.reference), t.slack, extra=tuple(float(x) for x in t.extra))
    try:
        if t.selector == "IDA":
            if len(levels) != 2:
                raise ConfigError("tune.levels: IDA tuning takes exactly two levels")
            res = sweep_ida(records, levels[0], levels[1], objective)
        else:
            rank = cfg.default_rank(levels[-1].value) if t.observe_rank is None else t.observe_rank
            if len(levels) == 2:
                res = sweep_single_threshold(records, SelectorKind(t.selector), rank, levels[0], levels[1], objective)
            else:
                res = sweep_multi_threshold(records, SelectorKind(t.selector), rank, levels, objective)
        body = _tune_body(res, feasible=True)
    except InfeasibleError as exc:
        body = _tune_body(exc.witness, feasible=False) if exc.witness else {"feasible": False}
        body["error"] = str(exc)
    path = report.atomic_write(out_dir / "tune.json", json.dumps(body, indent=2, sort_keys=True) + "\n")
    manifest.outputs.append(str(path))
    return body


def _tune_body(res, feasible: bool) -> dict:
    d = asdict(res)
    d.pop("policy", None)
    d["selector"] = res.selector.value if res.selector is not None else "IDA"
    d["levels"] = [lv.value for lv in res.levels]
    d["thresholds"] = [t if np.isfinite(t) else ("inf" if t > 0 else "-inf") for t in res.thresholds]
    d["feasible"] = feasible and res.feasible
    return d


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ida-fec", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, emit_default):
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--out-dir", type=Path, default=Path("out"))
        if emit_default is not None:
            sp.add_argument("--emit", action="append", choices=EMITTERS, default=None,
                            help=f"outputs to write (repeatable, default {emit_default})")
            sp.add_argument("--save-records", action="store_true", default=None)

    common(sub.add_parser("run", help="simulate and emit reports"), "bler")
    common(sub.add_parser("table1", help="minimum-P histogram"), "table1")
    common(sub.add_parser("dist", help="conditional sorted-magnitude statistics"), "dist")
    tp = sub.add_parser("tune", help="tune thresholds on a records file")
    common(tp, None)
    tp.add_argument("--records", required=True, type=Path)
    pp = sub.add_parser("patterns", help="dump the ORBGRAND pattern book as CSV")
    pp.add_argument("--w-max", type=int, default=22)
    pp.add_argument("--max-count", type=int)
    pp.add_argument("--out-dir", type=Path, default=Path("out"))
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out_dir: Path = args.out_dir

    if args.command == "patterns":
        try:
            book = generate_pattern_book(args.w_max, args.max_count)
            report.atomic_write(out_dir / "patterns.csv", report.patterns_csv(book))
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as exc:
            print(f"I/O failure: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK

    overrides = {"channel.seed": args.seed, "simulation.trials": args.trials, "simulation.workers": args.workers}
    if getattr(args, "save_records", None):
        overrides["simulation.save_records"] = True
    manifest = report.RunManifest(config_digest="", seed=args.seed or 0, command=args.command)
    code = EXIT_OK
    try:
        cfg = load_config(args.config, overrides)
        manifest.config_digest = cfg.digest()
        manifest.seed = cfg.channel.seed
        if args.command == "tune":
            body = tune(cfg, args.records, out_dir, manifest)
            if not body.get("feasible"):
                code = EXIT_INFEASIBLE
                manifest.finish("infeasible", body.get("error"))
        else:
            emit = args.emit or {"run": ["bler"], "table1": ["table1"], "dist": ["dist"]}[args.command]
            simulate(cfg, emit, out_dir, manifest)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        manifest.finish("config_error", str(exc))
        code = EXIT_CONFIG
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        manifest.finish("io_error", str(exc))
        code = EXIT_IO
    if code == EXIT_OK:
        manifest.finish()
    try:
        manifest.write(out_dir)
    except OSError as exc:
        print(f"I/O failure writing manifest: {exc}", file=sys.stderr)
        return EXIT_IO
    return code


if __name__ == "__main__":
    sys.exit(main())
