"""Shared helpers for the experiment scripts."""

import argparse
import logging
from pathlib import Path

from ida_fec.channel_sim import ChannelConfig, OracleDepth, TrialRecords, run_trials
from ida_fec.galois_bch import CodeSpec
from ida_fec.orbgrand import generate_pattern_book

SEED = 20240611


def parser(doc: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=doc.splitlines()[0])
    p.add_argument("--seed", type=int, default=SEED)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    p.add_argument("--cache", type=Path, help="reuse/save records under this directory")
    return p


def records(args, decoder: str, ebn0: float, trials: int, p_max: int = 6, n_store: int = 8) -> TrialRecords:
    """Simulate (or load from ``--cache``) one Eb/N0 point."""
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    spec = CodeSpec()
    if decoder == "chase":
        depth = OracleDepth(p_max=p_max, n_store=n_store)
    else:
        depth = OracleDepth(p_max=-1, book=generate_pattern_book(22), n_store=n_store)
    path = None
    if args.cache is not None:
        path = args.cache / f"{decoder}-{ebn0:g}dB-{trials}-s{args.seed}-p{depth.p_max}-n{n_store}.npz"
        if path.exists():
            return TrialRecords.load(path)
    logging.info("simulating %s at %g dB, %d trials", decoder, ebn0, trials)
    rec = run_trials(spec, ChannelConfig(ebn0, spec.rate, args.seed), trials, depth, workers=args.workers)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        rec.save(path)
    return rec
