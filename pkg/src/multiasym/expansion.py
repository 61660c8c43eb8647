"""Expansion polynomials, approximants, remainder estimates and coefficient families.

Orders ``N`` are tuples of length ``l`` (one entry per block); multi-indices
``alpha`` are tuples of length ``n`` supported on ``I_J``.  A coefficient
family with cap ``c`` stores ``f_{J,alpha}`` for every ``alpha`` with
``|alpha|_{I_j} < c_j`` for all ``j`` in ``J``, which is exactly what
``App^{<N}`` needs for every ``N <= c``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from . import expr as ex
from .errors import (
    CapExceeded,
    MissingCoefficient,
    NonConvergent,
    NoPreimage,
    OnSubmanifold,
    QuadratureUnstable,
    ScenarioError,
)
from .family import IndexFamily, J_star, nonempty_subsets, validate_family
from .geometry import (
    DIST_NORM,
    MultiCone,
    contains,
    properly_contained,
    restrict,
    sample_cone,
    shrink,
)
from .jet import Jet
from .poly import Poly, SeriesS, inv_factorial

Key = tuple[frozenset, tuple]


# -- combinatorics ------------------------------------------------------------

def weights(fam: IndexFamily, N: Sequence[int]) -> tuple[int, ...]:
    """``w_j = n_j`` minus the orders of the immediate parents of ``j``."""
    par = fam.structure.parents
    return tuple(N[j - 1] - sum(N[k - 1] for k in par[j]) for j in fam.blocks)


def norm_on(alpha: Sequence[int], I: Iterable[int]) -> int:
    """``|alpha|_I`` for a 1-based index set ``I``."""
    return sum(alpha[i - 1] for i in I)


def index_set_A(fam: IndexFamily, J: Iterable[int], N: Sequence[int]) -> list[tuple[int, ...]]:
    """Multi-indices supported on ``I_J`` with ``|alpha|_{I_j} < n_j`` for ``j`` in ``J``."""
    J = sorted(J)
    IJ = sorted(fam.I_of(J))
    box = []
    for i in IJ:
        bound = min(N[j - 1] for j in J if i in fam.I(j))
        if bound <= 0:
            return []
        box.append(range(bound))
    out = []
    for combo in itertools.product(*box):
        alpha = [0] * fam.n
        for i, a in zip(IJ, combo):
            alpha[i - 1] = a
        if all(norm_on(alpha, fam.I(j)) < N[j - 1] for j in J):
            out.append(tuple(alpha))
    return out


def t_poly(fam: IndexFamily, J: Iterable[int], N: Sequence[int]) -> Poly:
    """Closed form ``sum_{alpha in A(N)} z^alpha / alpha!``."""
    return Poly(fam.n, {a: inv_factorial(a) for a in index_set_A(fam, J, N)})


def t_beta_table(fam: IndexFamily, J: Iterable[int], cap: Sequence[int]) -> SeriesS:
    """Series in auxiliary variables ``s_j`` (``j`` in ``J``, sorted) whose
    ``s^beta`` coefficient is ``T_J^beta``: the expansion of
    ``prod_{i in I_J} exp(z_i prod_{j in J_i, j in J} s_j)`` truncated at ``cap``."""
    J = sorted(J)
    pos = {j: k for k, j in enumerate(J)}
    cap = tuple(cap)
    n = fam.n
    out = SeriesS.one(cap, n)
    J_of = fam.structure.J_of
    for i in sorted(fam.I_of(J)):
        e = [0] * len(J)
        for j in J_of[i]:
            if j in pos:
                e[pos[j]] = 1
        factor: dict[tuple, Poly] = {}
        k = 0
        while all(k * ek <= c for ek, c in zip(e, cap)):
            mono = [0] * n
            mono[i - 1] = k
            factor[tuple(k * ek for ek in e)] = Poly.monomial(mono, Fraction(1, math.factorial(k)))
            k += 1
            if not any(e):
                break
        out = out * SeriesS(cap, n, factor)
    return out


def t_beta_oracle(fam: IndexFamily, J: Iterable[int], beta: Sequence[int]) -> Poly:
    """``T_J^beta`` from the series; ``beta`` has length ``l`` (zero off ``J``)."""
    J = sorted(J)
    b = tuple(beta[j - 1] for j in J)
    if any(beta[j - 1] for j in range(1, fam.ell + 1) if j not in J):
        raise ValueError("beta must vanish off J")
    return t_beta_table(fam, J, b).get(b)


def t_poly_via_oracle(fam: IndexFamily, J: Iterable[int], N: Sequence[int],
                      table: SeriesS | None = None) -> Poly:
    J = sorted(J)
    bounds = [N[j - 1] for j in J]
    if any(b <= 0 for b in bounds):
        return Poly.zero(fam.n)
    if table is None:
        table = t_beta_table(fam, J, tuple(b - 1 for b in bounds))
    total = Poly.zero(fam.n)
    for b in itertools.product(*(range(x) for x in bounds)):
        total = total + table.get(b)
    return total


# -- coefficient families -----------------------------------------------------

@dataclass
class CoefficientFamily:
    """Finite total family ``{f_{J,alpha}}`` with an order cap.

    ``default`` (if set) answers every missing in-cap entry; ``resolver`` (if
    set) computes entries on demand and may return an expression or a
    vectorised callable of full ``n``-vectors.
    """

    fam: IndexFamily
    cap: tuple[int, ...]
    entries: dict[Key, ex.Expr] = field(default_factory=dict)
    default: ex.Expr | None = None
    resolver: Callable[[frozenset, tuple], object] | None = None

    def __post_init__(self):
        self.cap = tuple(int(c) for c in self.cap)
        if len(self.cap) != self.fam.ell:
            raise ScenarioError(f"cap needs {self.fam.ell} entries")
        for (J, alpha), e in self.entries.items():
            self._check_key(J, alpha)
            IJ = self.fam.I_of(J)
            bad = ex.variables(e) & IJ
            if bad:
                raise ScenarioError(
                    f"coefficient for J={sorted(J)} uses z{min(bad)}, which vanishes on Z_J")

    def _check_key(self, J, alpha):
        if not J or not set(J) <= set(self.fam.blocks):
            raise ScenarioError(f"bad block subset {sorted(J)}")
        if len(alpha) != self.fam.n:
            raise ScenarioError(f"alpha {alpha} must have {self.fam.n} entries")
        IJ = self.fam.I_of(J)
        if any(a and i not in IJ for i, a in enumerate(alpha, 1)):
            raise ScenarioError(f"alpha {alpha} is not supported on I_J={sorted(IJ)}")
        if not self.in_cap(J, alpha):
            raise CapExceeded(f"alpha {alpha} exceeds the cap {self.cap} for J={sorted(J)}")

    def in_cap(self, J, alpha) -> bool:
        return all(norm_on(alpha, self.fam.I(j)) < self.cap[j - 1] for j in J)

    def domain(self, J) -> list[tuple]:
        return index_set_A(self.fam, J, self.cap)

    def keys(self) -> list[Key]:
        return [(J, a) for J in nonempty_subsets(self.fam.ell) for a in self.domain(J)]

    def get(self, J, alpha):
        J, alpha = frozenset(J), tuple(alpha)
        if not self.in_cap(J, alpha):
            raise CapExceeded(f"alpha {alpha} exceeds the cap {self.cap} for J={sorted(J)}")
        e = self.entries.get((J, alpha))
        if e is not None:
            return e
        if self.resolver is not None:
            return self.resolver(J, alpha)
        if self.default is not None:
            return self.default
        raise MissingCoefficient(J, alpha)

    def evaluate(self, J, alpha, Z: np.ndarray) -> np.ndarray:
        c = self.get(J, alpha)
        if isinstance(c, ex.Expr):
            return ex.eval_array(c, Z)
        return np.asarray(c(Z), dtype=np.complex128)

    def to_json(self) -> dict:
        rows = [
            {"J": sorted(J), "alpha": list(a), "expr": ex.render(e)}
            for (J, a), e in sorted(self.entries.items(), key=lambda kv: (sorted(kv[0][0]), kv[0][1]))
        ]
        out = {"cap": list(self.cap), "entries": rows}
        if self.default is not None:
            out["default"] = ex.render(self.default)
        return out

    @classmethod
    def from_json(cls, fam: IndexFamily, data: dict) -> "CoefficientFamily":
        entries = {}
        for row in data.get("entries", []):
            key = (frozenset(int(j) for j in row["J"]), tuple(int(a) for a in row["alpha"]))
            if key in entries:
                raise ScenarioError(f"duplicate coefficient entry {row}")
            entries[key] = ex.parse(row["expr"], fam.n)
        default = data.get("default")
        return cls(fam, tuple(data["cap"]), entries, ex.parse(default) if default is not None else None)


def zero_family(fam: IndexFamily, cap: Sequence[int]) -> CoefficientFamily:
    return CoefficientFamily(fam, tuple(cap), {}, default=ex.ZERO)


def taylor_family(f: ex.Expr, fam: IndexFamily, cap: Sequence[int]) -> CoefficientFamily:
    """Derivative-restriction family ``f_{J,alpha} = (d^alpha f)|_{Z_J}``."""
    cap = tuple(cap)
    entries = {}
    derivs: dict[tuple, ex.Expr] = {}
    for J in nonempty_subsets(fam.ell):
        IJ = fam.I_of(J)
        for alpha in index_set_A(fam, J, cap):
            if alpha not in derivs:
                derivs[alpha] = ex.derive_multi(f, alpha)
            entries[(J, alpha)] = ex.restrict_zero(derivs[alpha], IJ)
    return CoefficientFamily(fam, cap, entries)


def _as_batch(z) -> tuple[np.ndarray, bool]:
    Z = np.asarray(z, dtype=np.complex128)
    if Z.ndim == 1:
        return Z[None, :], True
    return Z, False


def _monomial(Z: np.ndarray, alpha: Sequence[int]) -> np.ndarray:
    out = np.ones(Z.shape[:-1], dtype=np.complex128)
    for i, a in enumerate(alpha):
        if a:
            out = out * Z[..., i] ** a
    return out


def apply_family(F: CoefficientFamily, J, P: Poly, z):
    """``sum_alpha c_alpha f_{J,alpha}(z) z^alpha`` for the polynomial ``P``."""
    Z, single = _as_batch(z)
    J = frozenset(J)
    total = np.zeros(Z.shape[:-1], dtype=np.complex128)
    for alpha, c in sorted(P.terms.items()):
        total = total + complex(c) * F.evaluate(J, alpha, Z) * _monomial(Z, alpha)
    return complex(total[0]) if single else total


def app(F: CoefficientFamily, N: Sequence[int], z):
    """Inclusion-exclusion approximant ``App^{<N}(F; z)``."""
    fam = F.fam
    Z, single = _as_batch(z)
    total = np.zeros(Z.shape[:-1], dtype=np.complex128)
    for J in nonempty_subsets(fam.ell):
        P = t_poly(fam, J, N)
        if P.is_zero():
            continue
        sign = 1 if len(J) % 2 else -1
        total = total + sign * apply_family(F, J, P, Z)
    return complex(total[0]) if single else total


def app_terms(F: CoefficientFamily, N: Sequence[int], z) -> np.ndarray:
    """Sum of absolute values of the signed terms (a rounding scale for ``app``)."""
    Z, _ = _as_batch(z)
    total = np.zeros(Z.shape[:-1])
    for J in nonempty_subsets(F.fam.ell):
        P = t_poly(F.fam, J, N)
        if not P.is_zero():
            total = total + np.abs(apply_family(F, J, P, Z))
    return total


def app_poly(F: CoefficientFamily, N: Sequence[int]) -> Poly:
    """Exact ``App^{<N}`` for a family whose coefficients are polynomials."""
    fam = F.fam
    total = Poly.zero(fam.n)
    for J in nonempty_subsets(fam.ell):
        sign = 1 if len(J) % 2 else -1
        for alpha, c in t_poly(fam, J, N).terms.items():
            coeff = ex.to_poly(F.get(J, alpha), fam.n)
            total = total + sign * c * coeff * Poly.monomial(alpha)
    return total


def n_plus(fam: IndexFamily, N: Sequence[int], i: int) -> tuple[int, ...]:
    J_i = fam.structure.J_of[i]
    return tuple(n + (1 if j in J_i else 0) for j, n in enumerate(N, 1))


def shift_family(F: CoefficientFamily, i: int) -> CoefficientFamily:
    """Family ``F'`` with ``d/dz_i App^{<N_+}(F) = App^{<N}(F')``."""
    fam = F.fam
    J_i = fam.structure.J_of[i]
    if any(F.cap[j - 1] == 0 for j in J_i):
        raise CapExceeded(f"cannot shift in z{i}: cap {F.cap} is exhausted on blocks {sorted(J_i)}")
    cap = tuple(c - (1 if j in J_i else 0) for j, c in enumerate(F.cap, 1))
    entries = {}
    for J in nonempty_subsets(fam.ell):
        inside = i in fam.I_of(J)
        for alpha in index_set_A(fam, J, cap):
            if inside:
                up = list(alpha)
                up[i - 1] += 1
                entries[(J, alpha)] = F.get(J, tuple(up))
            else:
                src = F.get(J, alpha)
                if not isinstance(src, ex.Expr):
                    raise CapExceeded("numeric coefficients cannot be differentiated symbolically")
                entries[(J, alpha)] = ex.derive(src, i)
    return CoefficientFamily(fam, cap, entries)


# -- coefficient extraction ---------------------------------------------------

@dataclass
class Extraction:
    value: complex
    error: float
    estimates: list[complex]
    preimage: list[complex]

    def to_json(self) -> dict:
        return {
            "value": [self.value.real, self.value.imag],
            "error": self.error,
            "preimage": [[v.real, v.imag] for v in self.preimage],
        }


def preimage(S: MultiCone, J: Iterable[int], probe: Sequence[complex]) -> np.ndarray:
    """A point ``z`` of ``S`` whose projection to ``Z_J`` is ``probe``."""
    fam = S.fam
    J = frozenset(J)
    IJ = fam.I_of(J)
    coords = [i for i in range(1, fam.n + 1) if i not in IJ]
    if len(probe) != len(coords):
        raise NoPreimage(f"probe must have {len(coords)} coordinates")
    z = np.zeros(fam.n, dtype=np.complex128)
    for i, v in zip(coords, probe):
        z[i - 1] = v
    keep = set(J_star(fam, J))
    st = fam.structure
    norms = {j: np.linalg.norm(z[[i - 1 for i in st.hat[j]]]) for j in keep}
    for k in sorted((k for k in fam.blocks if k not in keep), key=lambda k: (-len(fam.I(k)), k)):
        r = S.radii[k - 1]
        for j in fam.blocks:
            if fam.subset_of(k, j):
                r = min(r, S.eps * norms[j])
        r *= 0.5
        sec = S.sectors[k - 1]
        z[sec.anchor - 1] = r * np.exp(1j * sec.dir)
        norms[k] = r
    if not contains(S, z):
        raise NoPreimage("probe is not in the restricted cone")
    return z


def _richardson(g: list[complex]) -> tuple[complex, float, list[complex]]:
    r1 = [2 * b - a for a, b in zip(g, g[1:])]
    r2 = [(4 * b - a) / 3 for a, b in zip(r1, r1[1:])]
    return r2[-1], abs(r2[-1] - r2[-2]), r2


def extract_coefficients(f: ex.Expr, S: MultiCone, J: Iterable[int], alpha: Sequence[int],
                         probe: Sequence[complex], schedule: Sequence[int] = tuple(range(4, 13)),
                         tol: float = 1e-7) -> Extraction:
    """Limit of ``d^alpha f`` along ``mu_J(z, (lam, ..., lam))``, ``lam = 2^-m``."""
    fam = S.fam
    J = frozenset(J)
    z0 = preimage(S, J, probe)
    alpha = tuple(alpha)
    scale_mask = np.array([1 if i in fam.I_of(J) else 0 for i in range(1, fam.n + 1)])
    g = []
    for m in schedule:
        lam = 2.0 ** (-m)
        z = np.where(scale_mask == 1, z0 * lam, z0)
        jt = ex.jet(f, list(z), alpha, exact=False)
        g.append(complex(jt.derivative(alpha)))
    value, err, est = _richardson(g)
    if not np.isfinite(value) or err > tol * max(1.0, abs(value)):
        raise NonConvergent(f"estimates for J={sorted(J)}, alpha={alpha} differ by {err:.3g}")
    return Extraction(complex(value), float(err), [complex(v) for v in est], [complex(v) for v in z0])


def extract_polynomial(f: ex.Expr, fam: IndexFamily, J: Iterable[int], alpha: Sequence[int], z0: Sequence):
    """Exact limit for polynomial ``f``: the ``lam^0`` part of ``d^alpha f(mu_J(z0, lam))``.

    Works on the :class:`Poly` form, so it is independent of the symbolic
    derivative used by :func:`taylor_family`.  ``z0`` is a full point
    (entries on ``I_J`` are ignored).
    """
    P = ex.to_poly(f, fam.n)
    for i, a in enumerate(alpha, 1):
        for _ in range(a):
            P = P.diff(i)
    IJ = [i - 1 for i in fam.I_of(J)]
    total = Fraction(0)
    for m, c in P.terms.items():
        if all(m[k] == 0 for k in IJ):
            term = c
            for k, e in enumerate(m):
                if e:
                    term = term * z0[k] ** e
            total = total + term
    return total


def extracted_family(f: ex.Expr, S: MultiCone, cap: Sequence[int]) -> CoefficientFamily:
    """Family whose entries are computed by extraction at the probe point."""
    fam = S.fam

    def resolve(J, alpha):
        IJ = fam.I_of(J)
        coords = [i - 1 for i in range(1, fam.n + 1) if i not in IJ]

        def value(Z):
            Z = np.atleast_2d(Z)
            return np.array([extract_coefficients(f, S, J, alpha, row[coords]).value for row in Z])

        return value

    return CoefficientFamily(fam, tuple(cap), {}, resolver=resolve)


# -- developability -----------------------------------------------------------

@dataclass
class ExpansionRecord:
    N: tuple[int, ...]
    weights: tuple[int, ...]
    sup_ratio: float
    argmax: list[complex]
    count: int
    level_sups: list[float]
    shrink_ratio: float
    flagged: bool

    def to_json(self) -> dict:
        return {
            "N": list(self.N),
            "weights": list(self.weights),
            "sup_ratio": self.sup_ratio,
            "argmax": [[v.real, v.imag] for v in self.argmax],
            "count": self.count,
            "level_sups": self.level_sups,
            "shrink_ratio": self.shrink_ratio,
            "flagged": self.flagged,
        }


@dataclass
class ExpansionReport:
    kind: str
    records: list[ExpansionRecord]
    cone: dict
    seed: int
    dist_norm: str = DIST_NORM

    def record(self, N) -> ExpansionRecord:
        for r in self.records:
            if r.N == tuple(N):
                return r
        raise KeyError(tuple(N))

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "dist_norm": self.dist_norm,
            "seed": self.seed,
            "cone": self.cone,
            "records": [r.to_json() for r in self.records],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "sup_ratio", "argmax", "shrink_ratio", "flagged"])
        for r in self.records:
            arg = " ".join(f"{v.real:.17g}{v.imag:+.17g}j" for v in r.argmax)
            w.writerow([";".join(map(str, r.N)), repr(r.sup_ratio), arg, repr(r.shrink_ratio),
                        str(r.flagged).lower()])
        return buf.getvalue()


GROWTH_FLAG = 10.0
SHRINK_STEP = 4.0
ROUNDING = 1e-13


def _eval_target(f, Z: np.ndarray) -> np.ndarray:
    if isinstance(f, ex.Expr):
        return ex.eval_array(f, Z)
    return np.asarray(f(Z), dtype=np.complex128)


def remainder_ratios(f, F: CoefficientFamily, N: Sequence[int], Z: np.ndarray) -> np.ndarray:
    """``|f - App^{<N}| / prod_j |z_{I_j}|^{w_j}`` on the rows of ``Z``.

    Remainders below ``ROUNDING`` times ``|f| + sum |App terms|`` are treated as
    rounding noise and set to zero.
    """
    fam = F.fam
    w = weights(fam, N)
    fv = _eval_target(f, Z)
    av = app(F, N, Z)
    r = np.abs(fv - av)
    floor = ROUNDING * (np.abs(fv) + app_terms(F, N, Z))
    r = np.where(r <= floor, 0.0, r)
    logd = np.zeros(len(Z))
    for j in fam.blocks:
        if w[j - 1]:
            d = np.linalg.norm(Z[:, [i - 1 for i in sorted(fam.I(j))]], axis=1)
            logd += w[j - 1] * np.log(d)
    with np.errstate(divide="ignore"):
        out = np.where(r > 0, np.exp(np.log(np.where(r > 0, r, 1.0)) - logd), 0.0)
    return out


def verify_developable(f, F: CoefficientFamily, Sp: MultiCone, N_list: Sequence[Sequence[int]],
                       count: int = 2000, seed: int = 0, decades: float = 3.0,
                       ambient: MultiCone | None = None, kind: str = "developable") -> ExpansionReport:
    """Sampled estimate of the best constant in the remainder bound, per ``N``.

    Each ``N`` is checked on ``S'`` and on two nested copies with radii
    divided by 4 and 16; growth of the sup by more than 10x across the two
    shrinks flags the bound as unbounded.
    """
    if ambient is not None and not properly_contained(Sp, ambient):
        raise ScenarioError("S' is not properly contained in the ambient multi-cone")
    rng = np.random.default_rng(seed)
    levels = [Sp, shrink(Sp, 1.0, radius=1 / SHRINK_STEP), shrink(Sp, 1.0, radius=1 / SHRINK_STEP**2)]
    samples = [sample_cone(S, count, rng, decades) for S in levels]
    records = []
    for N in N_list:
        N = tuple(int(x) for x in N)
        if len(N) != F.fam.ell:
            raise ScenarioError(f"order {N} needs {F.fam.ell} entries")
        sups = []
        best = (0.0, samples[0][0])
        for lvl, Z in enumerate(samples):
            ratios = remainder_ratios(f, F, N, Z)
            k = int(np.argmax(ratios))
            sups.append(float(ratios[k]))
            if lvl == 0:
                best = (float(ratios[k]), Z[k])
        s0, s2 = sups[0], sups[-1]
        if s0 > 0:
            shrink_ratio = s2 / s0
        else:
            shrink_ratio = math.inf if s2 > 0 else 1.0
        records.append(ExpansionRecord(N, weights(F.fam, N), best[0], [complex(v) for v in best[1]],
                                       count, sups, shrink_ratio, bool(shrink_ratio > GROWTH_FLAG)))
    return ExpansionReport(kind, records, Sp.to_json(), seed)


def verify_flat(f, fam: IndexFamily, Sp: MultiCone, N_list, count: int = 2000, seed: int = 0,
                decades: float = 3.0, ambient: MultiCone | None = None) -> ExpansionReport:
    cap = tuple(max(N[j] for N in N_list) for j in range(fam.ell)) if N_list else (0,) * fam.ell
    return verify_developable(f, zero_family(fam, cap), Sp, N_list, count, seed, decades, ambient,
                              kind="flat")


def flat_bound_constant(n: int, half_angle: float) -> float:
    """``sup_{r>0} exp(-cos(theta)/r) r^{-n}``; equals 1 for ``n = 0``."""
    if n == 0:
        return 1.0
    c = math.cos(half_angle)
    return (n / (c * math.e)) ** n


# -- consistency --------------------------------------------------------------

@dataclass
class Restriction:
    """``F|_{J,alpha}`` as a family on ``Z_J`` plus the relabelling used."""

    J: frozenset
    alpha: tuple
    family: CoefficientFamily
    coords: tuple[int, ...]
    block_map: tuple[int, ...]
    target: ex.Expr


def _relabel(e: ex.Expr, new_index: dict[int, int]) -> ex.Expr:
    return ex.subs(e, {i: ex.Var(k) for i, k in new_index.items()})


def restrict_family(F: CoefficientFamily, J: Iterable[int], alpha: Sequence[int]) -> Restriction:
    fam = F.fam
    J = frozenset(J)
    alpha = tuple(alpha)
    IJ = fam.I_of(J)
    coords = tuple(i for i in range(1, fam.n + 1) if i not in IJ)
    new_index = {i: k for k, i in enumerate(coords, 1)}
    keep = J_star(fam, J)
    if not keep:
        raise ScenarioError(f"J={sorted(J)} leaves no block to restrict to")
    inner = validate_family(len(coords), [[new_index[i] for i in sorted(fam.I(j) - IJ)] for j in keep])
    cap = tuple(max(F.cap[j - 1] - norm_on(alpha, fam.I(j)), 0) for j in keep)
    entries = {}
    for K in nonempty_subsets(inner.ell):
        Korig = frozenset(keep[k - 1] for k in K)
        for gamma in index_set_A(inner, K, cap):
            full = list(alpha)
            for i, k in new_index.items():
                full[i - 1] += gamma[k - 1]
            src = F.get(J | Korig, tuple(full))
            if not isinstance(src, ex.Expr):
                raise ScenarioError("restriction needs symbolic coefficients")
            entries[(K, gamma)] = _relabel(src, new_index)
    target = F.get(J, alpha)
    if not isinstance(target, ex.Expr):
        raise ScenarioError("restriction needs symbolic coefficients")
    return Restriction(J, alpha, CoefficientFamily(inner, cap, entries), coords, tuple(keep),
                       _relabel(target, new_index))


def required_equalities(fam: IndexFamily) -> list[tuple[frozenset, frozenset]]:
    """Pairs ``J != J'`` with ``S_J = S_J'`` (equal ``I_J``)."""
    subsets = nonempty_subsets(fam.ell)
    return [(a, b) for a, b in itertools.combinations(subsets, 2) if fam.I_of(a) == fam.I_of(b)]


def coefficients_equal(a: ex.Expr, b: ex.Expr, n: int, rng: np.random.Generator) -> bool:
    if ex.simplify(a) == ex.simplify(b):
        return True
    return ex.equal_on_samples(a, b, n, rng, tol=1e-10)


@dataclass
class ConsistencyReport:
    checks: list[dict]
    equalities: list[dict]

    @property
    def developable_ok(self) -> bool:
        return not any(c["flagged"] for c in self.checks)

    @property
    def equal_ok(self) -> bool:
        return all(e["equal"] for e in self.equalities)

    @property
    def consistent(self) -> bool:
        return self.developable_ok and self.equal_ok

    def to_json(self) -> dict:
        return {"consistent": self.consistent, "checks": self.checks, "equalities": self.equalities,
                "dist_norm": DIST_NORM}


def consistency_check(F: CoefficientFamily, Sp: MultiCone, count: int = 400, seed: int = 0,
                      decades: float = 3.0) -> ConsistencyReport:
    fam = F.fam
    rng = np.random.default_rng(seed)
    checks = []
    for J in nonempty_subsets(fam.ell):
        if not J_star(fam, J):
            continue
        inner_cone = restrict(Sp, J).inner
        for alpha in F.domain(J):
            R = restrict_family(F, J, alpha)
            orders = list(itertools.product(*(range(c + 1) for c in R.family.cap)))
            rep = verify_developable(R.target, R.family, inner_cone, orders, count,
                                     int(rng.integers(2**32)), decades)
            for rec in rep.records:
                checks.append({"J": sorted(J), "alpha": list(alpha), "N": list(rec.N),
                               "sup_ratio": rec.sup_ratio, "shrink_ratio": rec.shrink_ratio,
                               "flagged": rec.flagged})
    equalities = []
    for a, b in required_equalities(fam):
        common = [al for al in F.domain(a) if F.in_cap(b, al)]
        ok = True
        witness = None
        for al in common:
            ea, eb = F.get(a, al), F.get(b, al)
            if not coefficients_equal(ea, eb, fam.n, rng):
                ok, witness = False, list(al)
                break
        equalities.append({"J": sorted(a), "J2": sorted(b), "equal": ok, "witness": witness})
    return ConsistencyReport(checks, equalities)


# -- remainder integral -------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss01(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


def remainder_integral(f: ex.Expr, fam: IndexFamily, N: Sequence[int], z, order: int = 32,
                       chunk: int = 64):
    """``phi_N(f; z)``: the integral of ``d^N_lam f(mu(z, lam))`` against the
    kernels ``(1 - lam_j)^{n_j - 1} / (n_j - 1)!``.  Axes with ``n_j = 0``
    carry a point mass at ``lam_j = 1``."""
    N = tuple(int(x) for x in N)
    Z, single = _as_batch(z)
    active = [j for j in fam.blocks if N[j - 1] > 0]
    if not active:
        out = ex.eval_array(f, Z)
        return complex(out[0]) if single else out
    x, w = _gauss01(order)
    grids = np.meshgrid(*([x] * len(active)), indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=1)  # (Q, |A|)
    wts = np.ones(len(nodes))
    for k, j in enumerate(active):
        n = N[j - 1]
        wk = np.meshgrid(*([w] * len(active)), indexing="ij")[k].reshape(-1)
        wts = wts * wk * (1 - nodes[:, k]) ** (n - 1) / math.factorial(n - 1)
    cap = tuple(N[j - 1] for j in active)
    target = cap
    J_of = fam.structure.J_of
    fact = math.prod(math.factorial(c) for c in cap)
    results = []
    for start in range(0, len(Z), chunk):
        Zc = Z[start:start + chunk]
        lam_jets = [Jet.constant(nodes[None, :, k] * np.ones((len(Zc), 1)), cap) + Jet.variable(
            np.zeros((len(Zc), len(nodes))), k, cap) for k in range(len(active))]
        env = []
        for i in range(1, fam.n + 1):
            v = Jet.constant(Zc[:, i - 1][:, None] * np.ones((1, len(nodes))), cap)
            for k, j in enumerate(active):
                if j in J_of[i]:
                    v = v * lam_jets[k]
            env.append(v)
        val = ex.eval_jet(f, env, cap)
        if isinstance(val, Jet):
            deriv = val.coeff(target) * fact
        else:
            deriv = np.zeros((len(Zc), len(nodes)), dtype=np.complex128)
        if not np.all(np.isfinite(deriv)):
            raise QuadratureUnstable("non-finite integrand at a quadrature node")
        results.append(deriv @ wts)
    out = np.concatenate(results)
    return complex(out[0]) if single else out


# -- nu identity --------------------------------------------------------------

def nu_product_identity(fam: IndexFamily, N: Sequence[int], z) -> tuple[float, float]:
    z = np.asarray(z, dtype=np.complex128)
    d = {j: float(np.linalg.norm(z[[i - 1 for i in sorted(fam.I(j))]])) for j in fam.blocks}
    if any(v == 0 for v in d.values()):
        raise OnSubmanifold("point lies on one of the submanifolds")
    child = fam.structure.child
    log_left = 0.0
    for j in fam.blocks:
        if child[j]:
            (k,) = tuple(child[j])
            nu = d[k] / d[j]
        else:
            nu = 1.0 / d[j]
        log_left -= N[j - 1] * math.log(nu)
    w = weights(fam, N)
    log_right = sum(w[j - 1] * math.log(d[j]) for j in fam.blocks)
    return math.exp(log_left), math.exp(log_right)
