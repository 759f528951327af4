"""Excursion window scan over (k, M) and the mixture bounds for the 0^m 1 family."""

import argparse

from henon_lab import MapConfig
from henon_lab.coding import enumerate_periodic
from henon_lab.experiments import drop_suite, excursion_suite
from henon_lab.manifolds import build_regions


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, default=1e-4)
    ap.add_argument("--t-nu", type=float, default=1.0)
    args = ap.parse_args()
    r = build_regions(MapConfig(b=args.b))
    ex = excursion_suite(r)
    print(f"window [{ex['window'][0]:.6f}, {ex['window'][1]:.6f}]  k0 = {ex['k0']}  M0 = {ex['M0']}")
    for g in ex["grid"]:
        print(f"  k={g['k']} M={g['M']} excursions={g['excursions']:3d} violations={g['violations']}")
    orbs = enumerate_periodic(r.cfg, r, 12)
    rep = drop_suite(r, ex["_family"], ex["k0"], ex["M0"], orbs, t=args.t_nu)
    print(f"lambda(nu) = {rep['lambda_nu']:.6f}  violations = {rep['violations']}")
    for row in rep["rows"]:
        print(f"  m={row['m']:2d} u={row['u']:.4f} lambda={row['lambda_u']:.6f} "
              f"[{row['lower']:.6f}, {row['upper']:.6f}]")


if __name__ == "__main__":
    main()
