"""Maps between multi-normal deformations induced by ``f: X -> Y``.

Source and target carry families ``famM`` and ``famN`` with the same number
of blocks and ``f(M_j) c N_j``.  Away from ``t = 0`` the induced map is
explicit; on the zero section only the blocks satisfying condition (dagger)
receive a nonzero multilinear map.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import expr as ex
from .errors import IncompatibleMap, InvalidSubfamily, ScenarioError, ZeroTime
from .family import IndexFamily, extremal, validate_family, FamilyError
from .geometry import DeformationPoint, p_map

COMPAT_SAMPLES = 20
COMPAT_TOL = 1e-10


def _exact_ok(values) -> bool:
    return all(isinstance(v, (int, Fraction)) for v in values)


def _eval(e: ex.Expr, x: Sequence):
    if _exact_ok(x) and ex.is_real_rational(e):
        return ex.evaluate_exact(e, x)
    return ex.evaluate(e, x)


@dataclass
class FamilyPair:
    famM: IndexFamily
    famN: IndexFamily
    f: tuple[ex.Expr, ...]
    base: tuple = ()
    check: bool = True
    seed: int = 0

    def __post_init__(self):
        self.f = tuple(ex.as_expr(e) for e in self.f)
        if self.famM.ell != self.famN.ell:
            raise ScenarioError("source and target families need the same number of blocks")
        if len(self.f) != self.famN.n:
            raise ScenarioError(f"f needs {self.famN.n} components, got {len(self.f)}")
        for e in self.f:
            if ex.max_var(e) > self.famM.n:
                raise ScenarioError(f"component {ex.render(e)} uses a variable beyond z{self.famM.n}")
        if not self.base:
            self.base = (0,) * self.famM.n
        self.base = tuple(self.base)
        if len(self.base) != self.famM.n:
            raise ScenarioError("base point has the wrong dimension")
        if any(self.base[i - 1] != 0 for i in self.famM.I_of(self.famM.blocks)):
            raise ScenarioError("base point must lie on M, the intersection of the M_j")
        if self.check:
            check_compatible(self)

    @property
    def ell(self) -> int:
        return self.famM.ell


def check_compatible(pair: FamilyPair, samples: int = COMPAT_SAMPLES, tol: float = COMPAT_TOL) -> None:
    """Sampled check of ``f(M_j) c N_j``; raises :class:`IncompatibleMap` with a witness."""
    rng = np.random.default_rng(pair.seed)
    n = pair.famM.n
    for j in pair.famM.blocks:
        I = pair.famM.I(j)
        Z = rng.uniform(-1, 1, (samples, n)) + 1j * rng.uniform(-1, 1, (samples, n))
        Z[:, [i - 1 for i in I]] = 0
        for k in sorted(pair.famN.I(j)):
            vals = ex.eval_array(pair.f[k - 1], Z)
            bad = np.nonzero(np.abs(vals) > tol)[0]
            if len(bad):
                w = Z[bad[0]]
                raise IncompatibleMap(j, [[float(v.real), float(v.imag)] for v in w])


def tilde_f(pair: FamilyPair, q: DeformationPoint) -> DeformationPoint:
    """``y_k = f_k(p(q)) / prod_{j in J_k^N} t_j`` and ``t`` unchanged."""
    if any(t == 0 for t in q.t):
        raise ZeroTime("the induced map is explicit only where every t_j is nonzero")
    x = p_map(pair.famM, q)
    J_of = pair.famN.structure.J_of
    y = []
    for k in range(1, pair.famN.n + 1):
        den = 1
        for j in sorted(J_of[k]):
            den = den * q.t[j - 1]
        y.append(_eval(pair.f[k - 1], x) / den)
    return DeformationPoint(tuple(y), tuple(q.t))


# -- condition (dagger) -------------------------------------------------------

@dataclass
class DaggerVerdict:
    block: int | None
    J_k: frozenset
    sup_set: frozenset
    inf_set: frozenset
    counts_equal: bool
    downward_closed: bool
    tuples: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.counts_equal and self.downward_closed

    @property
    def p(self) -> int:
        return len(self.sup_set)

    def to_json(self) -> dict:
        return {
            "block": self.block,
            "J_k": sorted(self.J_k),
            "sup": sorted(self.sup_set),
            "inf": sorted(self.inf_set),
            "counts_equal": self.counts_equal,
            "downward_closed": self.downward_closed,
            "holds": self.holds,
            "tuples": [{"sigma": list(s), "indices": list(t)} for s, t in self.tuples],
        }


def dagger_for(famM: IndexFamily, J_k: Sequence[int], block: int | None = None) -> DaggerVerdict:
    """Condition (dagger) for a given ``J_k^N`` against the source order.

    ``tuples`` lists every ``(sigma, (i_1..i_p))`` with ``i_a`` in the hat set of
    block ``sigma(a)`` of ``famM``, ``sigma`` running over orderings of the
    sup set.  Empty unless the condition holds.
    """
    J_k = frozenset(J_k)
    sup, inf = extremal(famM, J_k)
    counts_equal = len(sup) == len(inf)
    # M_beta c M_j means I_j c I_beta
    closed = all(b in J_k for j in J_k for b in famM.blocks if famM.I(j) <= famM.I(b))
    out = DaggerVerdict(block, J_k, sup, inf, counts_equal, closed)
    if out.holds:
        hat = famM.structure.hat
        for sigma in itertools.permutations(sorted(sup)):
            for idx in itertools.product(*(sorted(hat[j]) for j in sigma)):
                out.tuples.append((sigma, idx))
    return out


def dagger(pair: FamilyPair, j: int) -> DaggerVerdict:
    """Verdict for target block ``j``; identical for every ``k`` in its hat set."""
    hat = pair.famN.structure.hat[j]
    J_of = pair.famN.structure.J_of
    verdicts = [dagger_for(pair.famM, J_of[k], j) for k in sorted(hat)]
    first = verdicts[0]
    for v in verdicts[1:]:
        assert v.J_k == first.J_k, "J_k^N differs inside one hat set"
    return first


# -- zero section -------------------------------------------------------------

def zero_section_map(pair: FamilyPair, s: Sequence) -> tuple:
    """Image of a source zero-section point.

    ``s`` is a full source vector: entries in the ``famM`` index sets are
    fiber coordinates, the rest are ignored in favour of ``pair.base``.
    Blocks satisfying (dagger) get the sum over ``i_a`` in the hat sets of
    the sup blocks (taken in increasing order) of the mixed partial of
    ``f_k`` at the base times ``x_{i_1} ... x_{i_p}``; other blocks map to 0.
    Coordinates outside every target index set keep ``f_k(base)``.
    """
    famM, famN = pair.famM, pair.famN
    if len(s) != famM.n:
        raise ScenarioError(f"zero-section point needs {famM.n} coordinates")
    hatM = famM.structure.hat
    blockN = famN.structure.block_of
    verdicts = {j: dagger(pair, j) for j in famN.blocks}
    exact = _exact_ok(list(s) + list(pair.base))
    y = []
    for k in range(1, famN.n + 1):
        fk = pair.f[k - 1]
        if k not in blockN:
            y.append(_eval(fk, pair.base))
            continue
        v = verdicts[blockN[k]]
        if not v.holds:
            y.append(Fraction(0) if exact else 0j)
            continue
        order = sorted(v.sup_set)
        idx = sorted(set().union(*(hatM[j] for j in order)))
        cap = tuple(1 if i in idx else 0 for i in range(1, famM.n + 1))
        use_exact = exact and ex.is_real_rational(fk)
        jt = ex.jet(fk, list(pair.base), cap, exact=use_exact)
        total = Fraction(0) if use_exact else 0j
        for combo in itertools.product(*(sorted(hatM[j]) for j in order)):
            alpha = [0] * famM.n
            for i in combo:
                alpha[i - 1] = 1
            c = jt.coeff(tuple(alpha))
            if c != 0:
                term = c
                for i in combo:
                    term = term * s[i - 1]
                total = total + term
        y.append(total if use_exact else complex(total))
    return tuple(y)


def orders_agree(famM: IndexFamily, famN: IndexFamily) -> bool:
    """``M_j' c M_j`` iff ``N_j' c N_j`` for all block pairs."""
    for a, b in itertools.product(famM.blocks, repeat=2):
        if (famM.I(a) <= famM.I(b)) != (famN.I(a) <= famN.I(b)):
            return False
    return True


def bundle_map_predicate(pair: FamilyPair) -> bool:
    return orders_agree(pair.famM, pair.famN)


def fiberwise_linear(pair: FamilyPair, samples: int = 20, seed: int = 0, tol: float = 1e-10) -> bool:
    """Additivity and complex homogeneity of the zero-section map on samples."""
    rng = np.random.default_rng(seed)
    fiber = [i - 1 for i in pair.famM.I_of(pair.famM.blocks)]

    def draw():
        v = np.array(pair.base, dtype=np.complex128)
        v[fiber] = rng.normal(size=len(fiber)) + 1j * rng.normal(size=len(fiber))
        return v

    basev = np.array(pair.base, dtype=np.complex128)
    y0 = np.array(zero_section_map(pair, list(basev)), dtype=np.complex128)
    for _ in range(samples):
        a, b = draw(), draw()
        c = complex(rng.normal(), rng.normal())
        ya = np.array(zero_section_map(pair, list(a)), dtype=np.complex128) - y0
        yb = np.array(zero_section_map(pair, list(b)), dtype=np.complex128) - y0
        ysum = np.array(zero_section_map(pair, list(a + b - basev)), dtype=np.complex128) - y0
        yc = np.array(zero_section_map(pair, list(basev + c * (a - basev))), dtype=np.complex128) - y0
        scale = 1 + np.abs(ya).max() + np.abs(yb).max()
        if np.abs(ysum - ya - yb).max() > tol * scale or np.abs(yc - c * ya).max() > tol * scale * (1 + abs(c)):
            return False
    return True


# -- projection morphisms -----------------------------------------------------

@dataclass
class ProjectionMorphism:
    """Forgetting blocks on the same space: ``(x, t) -> (x', t')``."""

    fam: IndexFamily
    keep: tuple[int, ...]
    kept: IndexFamily
    kappa: dict[int, frozenset]
    extra: dict[int, frozenset]  # coordinate -> blocks whose t still multiplies x_i

    def __call__(self, x: Sequence, t: Sequence) -> tuple[tuple, tuple]:
        if len(x) != self.fam.n or len(t) != self.fam.ell:
            raise ScenarioError("point has the wrong shape")
        tp = []
        for j in self.kept.blocks:
            v = 1
            for b in sorted(self.kappa[j]):
                v = v * t[b - 1]
            tp.append(v)
        xp = []
        for i in range(1, self.fam.n + 1):
            v = x[i - 1]
            for b in sorted(self.extra[i]):
                v = v * t[b - 1]
            xp.append(v)
        return tuple(xp), tuple(tp)

    def to_json(self) -> dict:
        return {
            "keep": list(self.keep),
            "kappa": {str(j): sorted(v) for j, v in self.kappa.items()},
            "extra": {str(i): sorted(v) for i, v in self.extra.items()},
        }


def projection_morphism(fam: IndexFamily, keep: Sequence[int]) -> ProjectionMorphism:
    keep = tuple(int(j) for j in keep)
    if not keep or len(set(keep)) != len(keep) or not set(keep) <= set(fam.blocks):
        raise InvalidSubfamily(f"keep must list distinct blocks of 1..{fam.ell}, got {list(keep)}")
    try:
        kept = validate_family(fam.n, [fam.I(j) for j in keep])
    except FamilyError as exc:
        raise InvalidSubfamily(f"kept blocks do not form a valid family: {exc}") from exc
    kappa = {}
    for j in kept.blocks:
        Ij = kept.I(j)
        # N_k strictly inside N_j: I_k strictly contains I_j
        smaller = [kept.I(k) for k in kept.blocks if kept.subset_of(j, k)]
        members = set()
        for b in fam.blocks:
            Ib = fam.I(b)
            if not Ij <= Ib:
                continue
            # the union of the N_k sits strictly inside M_b
            if all(Ib <= Ik for Ik in smaller) and not any(Ib == Ik for Ik in smaller):
                members.add(b)
        kappa[j] = frozenset(members)
    J_of, J_of_kept = fam.structure.J_of, kept.structure.J_of
    extra = {}
    for i in range(1, fam.n + 1):
        pieces = [kappa[j] for j in sorted(J_of_kept[i])]
        union = frozenset().union(*pieces)
        assert sum(len(p) for p in pieces) == len(union), "kappa sets overlap on a coordinate"
        assert union <= J_of[i], "kappa reaches a block not containing the coordinate"
        extra[i] = frozenset(J_of[i] - union)
    return ProjectionMorphism(fam, keep, kept, kappa, extra)
