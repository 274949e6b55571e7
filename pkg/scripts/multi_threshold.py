"""Tune the 4-threshold M-IDA-Chase and MD-IDA-ORBGRAND ladders.

Tuning uses the first half of the records; the second half is held out to
show how the tuned ladder generalises.
"""

from dataclasses import replace

from _common import parser, records

from ida_fec.channel_sim import FixedLevel, estimate_bler_complexity
from ida_fec.ida_policy import SelectorKind, chase_p, orb_npat
from ida_fec.tuner import TuneObjective, sweep_multi_threshold, sweep_single_threshold


def halves(rec):
    h = len(rec) // 2
    return rec.head(h), replace(rec, **{c: getattr(rec, c)[h:] for c in rec.COLUMNS})


def run(name, rec, selector, rank, levels, reference):
    tune, hold = halves(rec)
    obj = TuneObjective(reference)
    multi = sweep_multi_threshold(tune, selector, rank, levels, obj)
    single = sweep_single_threshold(tune, selector, rank, levels[-2], levels[-1], obj)
    out = estimate_bler_complexity(hold, multi.policy)
    ref = estimate_bler_complexity(hold, FixedLevel(reference, levels[-1]))
    th = ", ".join(f"{t:.3f}" for t in multi.thresholds)
    print(f"{name}: thresholds [{th}]")
    print(f"  tuning half  complexity {multi.complexity_pct:6.2f}%  errors {multi.block_errors} / ceiling "
          f"{multi.ceiling_errors:g}  (best single threshold {single.complexity_pct:.2f}%)")
    print(f"  held-out     complexity {out.complexity_pct:6.2f}%  BLER {out.bler:.3e} vs reference {ref.bler:.3e}")
    full = sweep_multi_threshold(rec, selector, rank, levels, obj)
    print(f"  all records  complexity {full.complexity_pct:6.2f}%  errors {full.block_errors} / {full.ceiling_errors:g}")


def main():
    p = parser(__doc__)
    p.add_argument("--chase-trials", type=int, default=2_000_000)
    p.add_argument("--orb-trials", type=int, default=1_000_000)
    args = p.parse_args()
    chase = records(args, "chase", 6.5, args.chase_trials, p_max=5)
    run("M-IDA-Chase 6.5 dB", chase, SelectorKind.M, 4, [chase_p(q) for q in range(1, 6)], chase_p(4))
    orb = records(args, "orbgrand", 7.0, args.orb_trials, n_store=24)
    run("MD-IDA-ORBGRAND 7 dB", orb, SelectorKind.MD, 21, [orb_npat(n) for n in (168, 252, 306, 369, 500)],
        orb_npat(446))


if __name__ == "__main__":
    main()
