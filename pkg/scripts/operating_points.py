"""Complexity and paired BLER of reference IDA operating points.

Chase points are evaluated over ``--chase-ebn0``; ORBGRAND points at
``--orb-ebn0``.  Results go to ``operating_points.csv``.
"""

from _common import parser, records

from ida_fec import report
from ida_fec.channel_sim import FixedLevel, estimate_bler_complexity
from ida_fec.ida_policy import IdaConfig, MDIdaConfig, MIdaConfig, chase_p, orb_npat

P = chase_p
CHASE = [
    ("IDA g=7.5 phi=12 P4/5", IdaConfig(7.5, 12, P(4), P(5)), P(5)),
    ("IDA g=4.5 phi=7 P3/5", IdaConfig(4.5, 7, P(3), P(5)), P(4)),
    ("M 5.0 P4/5", MIdaConfig(5.0, 4, P(4), P(5)), P(5)),
    ("MD 3.6 P4/5", MDIdaConfig(3.6, 4, P(4), P(5)), P(5)),
    ("M 5.0 P3/5", MIdaConfig(5.0, 4, P(3), P(5)), P(5)),
    ("MD 3.6 P3/5", MDIdaConfig(3.6, 4, P(3), P(5)), P(5)),
    ("M 3.0 P3/5", MIdaConfig(3.0, 4, P(3), P(5)), P(4)),
    ("MD 2.2 P3/5", MDIdaConfig(2.2, 4, P(3), P(5)), P(4)),
]
N = orb_npat
ORB = [
    ("MD 8.2 252/500", MDIdaConfig(8.2, 21, N(252), N(500)), N(500)),
    ("M 10 252/500", MIdaConfig(10.0, 21, N(252), N(500)), N(500)),
    ("MD 7.6 168/500", MDIdaConfig(7.6, 21, N(168), N(500)), N(446)),
    ("M 9.2 168/500", MIdaConfig(9.2, 21, N(168), N(500)), N(446)),
]


def evaluate(rec, table, points):
    for name, cfg, ref_level in table:
        pt = estimate_bler_complexity(rec, cfg)
        ref = estimate_bler_complexity(rec, FixedLevel(ref_level, cfg.high))
        ratio = pt.block_errors / max(ref.block_errors, 1)
        print(f"{rec.ebn0_db:5.2f} dB  {name:<22} complexity {pt.complexity_pct:6.2f}%  BLER {pt.bler:.3e}"
              f"  ref {ref_level.value} {ref.bler:.3e}  ratio {ratio:.2f}")
        points.append((name, pt))


def main():
    p = parser(__doc__)
    p.add_argument("--chase-ebn0", type=float, nargs="+", default=[6.0, 6.5, 7.0, 7.5])
    p.add_argument("--orb-ebn0", type=float, nargs="+", default=[7.0])
    p.add_argument("--trials", type=int, default=1_000_000)
    args = p.parse_args()
    points = []
    for e in args.chase_ebn0:
        evaluate(records(args, "chase", e, args.trials, p_max=5), CHASE, points)
    for e in args.orb_ebn0:
        evaluate(records(args, "orbgrand", e, args.trials, n_store=24), ORB, points)
    print(f"wrote {report.emit_report(points, args.out_dir / 'operating_points.csv')}")


if __name__ == "__main__":
    main()
