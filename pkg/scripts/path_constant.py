"""Worst observed path-length ratio L(gamma) / |z - w| in random multi-cones.

    python3 scripts/path_constant.py [--pairs 2000]

The ratio is compared with the bound sqrt(l) (1 + pi) + 1.
"""

from __future__ import annotations

import argparse

import numpy as np

from multiasym.family import majima, mixed, takeuchi, validate_family
from multiasym.geometry import MultiCone, SectorCone, path, path_constant, sample_cone


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--pairs", type=int, default=2000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(args.seed)
    cases = {"majima(3,2)": majima(3, 2), "takeuchi2": validate_family(3, [[1], [1, 2]]),
             "takeuchi3": takeuchi(3), "mixed": mixed()}
    for name, fam in cases.items():
        S = MultiCone(fam, (1.0,) * fam.ell, 1.0,
                      tuple(SectorCone(min(fam.structure.hat[j]), rng.uniform(-3, 3), rng.uniform(0.2, 1.2))
                            for j in fam.blocks), 0.5)
        Z, W = sample_cone(S, args.pairs, rng), sample_cone(S, args.pairs, rng)
        worst = max(path(S, z, w).length / float(np.linalg.norm(z - w)) for z, w in zip(Z, W))
        print(f"{name:>12}: worst ratio {worst:.4f}, bound {path_constant(fam.ell):.4f}")


if __name__ == "__main__":
    main()
