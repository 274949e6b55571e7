"""Mean sorted LLR magnitudes conditioned on the required Chase P.

Prints, for each rank i, the P_low bucket with the smallest mean |y~_i|
(the trend inversion point) and writes ``dist.csv``.
"""

import numpy as np
from _common import parser, records

from ida_fec import report
from ida_fec.channel_sim import reliability_distributions


def main():
    p = parser(__doc__)
    p.add_argument("--ebn0", type=float, default=6.5)
    p.add_argument("--trials", type=int, default=2_000_000)
    p.add_argument("--ranks", type=int, default=6)
    args = p.parse_args()
    rec = records(args, "chase", args.ebn0, args.trials)
    stats = reliability_distributions(rec, args.ranks)
    print("bucket  count   " + "  ".join(f"|y~_{i}|" for i in range(args.ranks)))
    for d in stats:
        print(f"{d.condition:>6} {d.sample_count:>7}   " + "  ".join(f"{m:6.3f}" for m in d.mean_mag))
    nonzero = [d for d in stats if d.condition > 0 and d.sample_count > 0]
    for i in range(args.ranks):
        b = min(nonzero, key=lambda d: d.mean_mag[i]).condition
        print(f"rank {i}: minimum mean at P_low = {b}")
    rows = [(args.ebn0, "chase_p", d) for d in stats]
    print(f"wrote {report.atomic_write(args.out_dir / 'dist.csv', report.dist_csv(rows))}")


if __name__ == "__main__":
    main()
