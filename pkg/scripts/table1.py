"""Minimum-P histogram of Chase decoding at 6.5 dB.

Prints the fractions over all frames and over frames whose hard decision
carries at least one bit error, and writes ``table1.csv``.
"""

from _common import parser, records

from ida_fec import report
from ida_fec.cli import table1_rows


def main():
    p = parser(__doc__)
    p.add_argument("--ebn0", type=float, default=6.5)
    p.add_argument("--trials", type=int, default=2_000_000)
    args = p.parse_args()
    rec = records(args, "chase", args.ebn0, args.trials)
    frac_all, frac_noisy, counts = table1_rows(rec)
    print(f"{'P_low':>14} {'count':>9} {'all frames':>11} {'given errors':>13}")
    for key in frac_all:
        name = "uncorrectable" if key is None else str(key)
        print(f"{name:>14} {counts[key]:>9} {100 * frac_all[key]:>10.3f}% {100 * frac_noisy[key]:>12.3f}%")
    out = report.atomic_write(args.out_dir / "table1.csv", report.table1_csv([(args.ebn0, frac_all, frac_noisy, counts)]))
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
