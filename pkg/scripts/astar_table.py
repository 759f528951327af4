"""Tangency parameter a*, zeta_0 and the saddle multipliers for a list of b values."""

import argparse
import math

from henon_lab import MapConfig
from henon_lab.core import fixed_saddles
from henon_lab.manifolds import build_regions


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, nargs="+", default=[1e-2, 1e-3, 1e-4, 1e-5, 1e-6])
    args = ap.parse_args()
    print(f"{'b':>8} {'a*':>20} {'a*-2':>12} {'zeta0_x':>12} {'zeta0_y':>12} {'lam_Q-log4':>12} {'lam_P-log2':>12}")
    for b in args.b:
        r = build_regions(MapConfig(b=b))
        P, Q = fixed_saddles(r.cfg)
        print(f"{b:8.0e} {r.cfg.a:20.16f} {r.cfg.a - 2:12.4e} {r.zeta0[0]:12.4e} {r.zeta0[1]:12.4e} "
              f"{Q.log_multiplier - math.log(4):12.4e} {P.log_multiplier - math.log(2):12.4e}")


if __name__ == "__main__":
    main()
