"""Bound/free decomposition of random orbit segments of K (1000 orbits take a few minutes)."""

import argparse
import json

from henon_lab import MapConfig
from henon_lab.experiments import orbit_growth_suite
from henon_lab.io import dumps
from henon_lab.manifolds import build_regions


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--b", type=float, default=1e-4)
    ap.add_argument("--orbits", type=int, default=1000)
    ap.add_argument("--length", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    r = build_regions(MapConfig(b=args.b))
    rep = orbit_growth_suite(r, args.orbits, args.length, args.seed)
    print(dumps(json.loads(dumps(rep))))


if __name__ == "__main__":
    main()
