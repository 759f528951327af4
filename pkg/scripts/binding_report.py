"""Binding records along dyadic approaches to zeta_0: periods, margins and the (e) shortfall."""

import argparse
import math

from henon_lab import MapConfig
from henon_lab.binding import critical_cocycle, dyadic_records, scale_report
from henon_lab.manifolds import build_regions


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, default=1e-4)
    ap.add_argument("--j-min", type=int, default=8)
    ap.add_argument("--j-max", type=int, default=24)
    args = ap.parse_args()
    r = build_regions(MapConfig(b=args.b))
    c = r.cfg
    cc = critical_cocycle(c, r)
    sr = scale_report(c, cc)
    print(f"a* = {c.a!r}  tau = {c.tau:.6f}  p0 = {sr.p0}  growth ratios in [{sr.ratio_min:.6f}, {sr.ratio_max:.6f}]")
    print(f"{'side':>4} {'j':>3} {'p':>3} {'q':>2} {'off/d^2':>9} " + " ".join(f"{k:>8}" for k in "abcdef")
          + f" {'log|Dfp v|':>11} {'needed':>8}")
    for rec in dyadic_records(c, r, cc, range(args.j_min, args.j_max + 1)):
        j = round(-math.log2(rec.distance))
        side = "+" if rec.delta[0] > 0 else "-"
        m = " ".join(f"{rec.checks[k]['margin']:8.3f}" for k in "abcdef")
        need = 0.5 * rec.p * math.log(4 - c.eps)
        print(f"{side:>4} {j:3d} {rec.p:3d} {rec.q:2d} {rec.offset / rec.distance ** 2:9.5f} {m} "
              f"{rec.log_growth[rec.p - 1]:11.4f} {need:8.4f}")


if __name__ == "__main__":
    main()
