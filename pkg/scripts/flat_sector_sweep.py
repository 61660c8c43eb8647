"""Sup of |exp(-1/z)| / |z|^n over a sector, compared with the closed form.

    python3 scripts/flat_sector_sweep.py [--count 4000] [--max-order 8]

For the sector |arg z| < theta the supremum is (n / (c e))^n with
c = cos(theta), reached at |z| = c / n on the real axis.
"""

from __future__ import annotations

import argparse
import math

from multiasym import expr as ex
from multiasym.expansion import flat_bound_constant, verify_flat
from multiasym.family import majima
from multiasym.geometry import MultiCone, SectorCone


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=4000)
    ap.add_argument("--max-order", type=int, default=8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    fam = majima(2)
    print(f"{'theta':>8} {'n':>3} {'sup':>12} {'closed form':>12} {'ratio':>7} flagged")
    for theta in (math.pi / 8, math.pi / 4, math.pi / 3):
        Sp = MultiCone(fam, (50.0, 0.9), 0.9, (SectorCone(1, 0.0, theta), SectorCone(2, 0.0, 0.5)), 0.4)
        S = MultiCone(fam, (60.0, 1.0), 1.0,
                      (SectorCone(1, 0.0, min(theta * 1.3, 1.5), 1.5), SectorCone(2, 0.0, 0.7, 1.5)), 0.5)
        orders = [(n, 0) for n in range(args.max_order + 1)]
        rep = verify_flat(ex.parse("exp(-1/z1)"), fam, Sp, orders, count=args.count, seed=args.seed, ambient=S)
        for rec in rep.records:
            C = flat_bound_constant(rec.N[0], theta)
            print(f"{theta:8.4f} {rec.N[0]:3d} {rec.sup_ratio:12.6g} {C:12.6g} {rec.sup_ratio / C:7.4f} {rec.flagged}")


if __name__ == "__main__":
    main()
