"""P_n(t) tables for several b, with t^u, t_0 and the Chebyshev limit for comparison."""

import argparse

import numpy as np

from henon_lab import MapConfig
from henon_lab.coding import enumerate_periodic
from henon_lab.manifolds import build_regions
from henon_lab.thermo import PressureCurve, chebyshev_pressure, find_t_roots


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, nargs="+", default=[1e-2, 1e-4, 1e-6])
    ap.add_argument("--n", type=int, default=12)
    ap.add_argument("--t", type=float, nargs="+", default=list(np.linspace(0, 3, 7)))
    args = ap.parse_args()
    curves = {}
    for b in args.b:
        r = build_regions(MapConfig(b=b))
        curves[b] = (r.cfg, PressureCurve(r.cfg, enumerate_periodic(r.cfg, r, args.n), args.n))
    print(f"{'t':>6} " + " ".join(f"{'b=' + format(b, '.0e'):>12}" for b in args.b) + f" {'chebyshev':>12}")
    for t in args.t:
        row = " ".join(f"{curves[b][1](t):12.8f}" for b in args.b)
        print(f"{t:6.2f} {row} {chebyshev_pressure(args.n, t):12.8f}")
    for b, (c, curve) in curves.items():
        rep = find_t_roots(c, curve)
        print(f"b={b:.0e}: t^u = {rep.t_u:.6f}  t0 = {rep.t0_curve:.4f}  t0 bound = {rep.t0_bound:.4f}")


if __name__ == "__main__":
    main()
