"""Families of coordinate index sets and their combinatorics.

A family is a list of index sets ``I_1, ..., I_l`` inside ``{1, ..., n}``;
``I_j`` names the coordinates that vanish on the linear submanifold ``M_j``.
Indices are 1-based everywhere in the public interface.

Ordering conventions used below: a *smaller* index set is a *larger*
submanifold.  ``parents(j)`` are the immediate larger submanifolds of
``M_j`` (immediate proper index subsets), ``child(j)`` the immediate smaller
one (at most one element for a valid family).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

from .errors import (
    DuplicateSet,
    EmptyHatSet,
    EmptySubset,
    FamilyError,
    IndexOutOfRange,
    InvalidFamily,
    OverlapViolation,
)


@dataclass(frozen=True)
class IndexFamily:
    n: int
    sets: tuple[frozenset[int], ...]

    @property
    def ell(self) -> int:
        return len(self.sets)

    def I(self, j: int) -> frozenset[int]:
        return self.sets[j - 1]

    @property
    def blocks(self) -> range:
        return range(1, self.ell + 1)

    def I_of(self, J: Iterable[int]) -> frozenset[int]:
        """Union of ``I_j`` over ``j`` in ``J``."""
        out: set[int] = set()
        for j in J:
            out |= self.sets[j - 1]
        return frozenset(out)

    def subset_of(self, j: int, k: int) -> bool:
        """``I_j`` strictly inside ``I_k`` (``M_j`` strictly contains ``M_k``)."""
        return self.sets[j - 1] < self.sets[k - 1]

    @cached_property
    def structure(self) -> "FamilyStructure":
        return structure(self)

    def to_json(self) -> dict:
        return {"n": self.n, "sets": [sorted(s) for s in self.sets]}


@dataclass(frozen=True)
class FamilyStructure:
    hat: dict[int, frozenset[int]]
    J_of: dict[int, frozenset[int]]
    iota: dict[int, frozenset[int]]
    parents: dict[int, frozenset[int]]
    child: dict[int, frozenset[int]]
    depth: dict[int, int]
    block_of: dict[int, int] = field(default_factory=dict)

    def to_json(self) -> dict:
        def sets(d):
            return {str(k): sorted(v) for k, v in sorted(d.items())}

        return {
            "hat": sets(self.hat),
            "J": sets(self.J_of),
            "iota": sets(self.iota),
            "parents": sets(self.parents),
            "child": sets(self.child),
            "depth": {str(k): v for k, v in sorted(self.depth.items())},
        }


def diagnose(n: int, sets: Sequence[Iterable[int]]) -> list[FamilyError]:
    """Every violated condition, in a deterministic order."""
    fs = [frozenset(int(i) for i in s) for s in sets]
    out: list[FamilyError] = []
    for j, s in enumerate(fs, 1):
        for i in sorted(s):
            if not 1 <= i <= n:
                out.append(IndexOutOfRange(j, i))
    for (j, a), (k, b) in combinations(enumerate(fs, 1), 2):
        if a == b:
            out.append(DuplicateSet(j, k))
        elif not (a < b or b < a or not (a & b)):
            out.append(OverlapViolation(j, k))
    for j, a in enumerate(fs, 1):
        covered: set[int] = set()
        for b in fs:
            if b < a:
                covered |= b
        if not a - covered:
            out.append(EmptyHatSet(j))
    return out


def validate_family(n: int, sets: Sequence[Iterable[int]]) -> IndexFamily:
    if n < 1:
        raise InvalidFamily([IndexOutOfRange(0, n)])
    problems = diagnose(n, sets)
    if problems:
        raise InvalidFamily(problems)
    return IndexFamily(n, tuple(frozenset(int(i) for i in s) for s in sets))


def structure(fam: IndexFamily) -> FamilyStructure:
    ell = fam.ell
    blocks = range(1, ell + 1)
    below = {j: [k for k in blocks if fam.subset_of(k, j)] for j in blocks}
    iota = {}
    hat = {}
    for j in blocks:
        cover = frozenset().union(*(fam.I(k) for k in below[j]))
        iota[j] = cover
        hat[j] = fam.I(j) - cover
    J_of = {i: frozenset(j for j in blocks if i in fam.I(j)) for i in range(1, fam.n + 1)}
    parents = {
        j: frozenset(
            k for k in below[j]
            if not any(fam.subset_of(k, m) and fam.subset_of(m, j) for m in blocks)
        )
        for j in blocks
    }
    child = {j: frozenset(k for k in blocks if j in parents[k]) for j in blocks}

    depth: dict[int, int] = {}

    def d(j: int) -> int:
        if j not in depth:
            depth[j] = 1 + max((d(k) for k in parents[j]), default=0)
        return depth[j]

    for j in blocks:
        d(j)
    block_of = {i: j for j in blocks for i in hat[j]}
    return FamilyStructure(hat, J_of, iota, parents, child, depth, block_of)


def extremal(fam: IndexFamily, J: Iterable[int]) -> tuple[frozenset[int], frozenset[int]]:
    """Indices of the maximal and minimal submanifolds among ``{M_j : j in J}``.

    Returns ``(sup_set, inf_set)``: ``sup_set`` holds the maximal manifolds
    (minimal index sets), ``inf_set`` the minimal manifolds (maximal index
    sets).
    """
    J = frozenset(J)
    if not J:
        raise EmptySubset("extremal needs a nonempty subset of blocks")
    sup = frozenset(j for j in J if not any(fam.subset_of(k, j) for k in J))
    inf = frozenset(j for j in J if not any(fam.subset_of(j, k) for k in J))
    return sup, inf


def J_star(fam: IndexFamily, J: Iterable[int]) -> tuple[int, ...]:
    """Blocks whose index set is not swallowed by ``I_J``."""
    IJ = fam.I_of(J)
    return tuple(j for j in fam.blocks if not fam.I(j) <= IJ)


def nonempty_subsets(ell: int) -> list[frozenset[int]]:
    """All nonempty subsets of ``{1..ell}``, ordered by size then lexicographically."""
    out = []
    for r in range(1, ell + 1):
        out.extend(frozenset(c) for c in combinations(range(1, ell + 1), r))
    return out


def all_families(n: int, max_ell: int) -> list[IndexFamily]:
    """Every valid family (as an unordered collection) with ``1 <= l <= max_ell``."""
    subsets = [frozenset(c) for r in range(1, n + 1) for c in combinations(range(1, n + 1), r)]
    out = []
    for ell in range(1, max_ell + 1):
        for combo in combinations(subsets, ell):
            if not diagnose(n, combo):
                out.append(IndexFamily(n, tuple(combo)))
    return out


# named configurations used throughout the worked examples
def majima(n: int = 2, ell: int | None = None) -> IndexFamily:
    ell = n if ell is None else ell
    return validate_family(n, [{j} for j in range(1, ell + 1)])


def takeuchi(n: int = 3) -> IndexFamily:
    """Full flag ``I_1 = {1..n} > I_2 = {2..n} > ... > I_n = {n}``."""
    return validate_family(n, [set(range(j, n + 1)) for j in range(1, n + 1)])


def mixed() -> IndexFamily:
    return validate_family(3, [{1, 2, 3}, {2}, {3}])
