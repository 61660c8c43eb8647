"""Deformation coordinates, actions and multi-cones.

Complex points are numpy vectors (0-based internally); every public
argument naming a coordinate or a block is 1-based.  Block norms and the
distance to ``Z_j`` are Euclidean: ``dist(z, Z_j) = |z_{I_j}|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .errors import EmptySubset, NonPositiveScale, NotInCone
from .family import IndexFamily, J_star, validate_family

DIST_NORM = "euclidean"


# -- deformation space --------------------------------------------------------

@dataclass(frozen=True)
class DeformationPoint:
    x: tuple
    t: tuple

    def to_json(self) -> dict:
        return {"x": [_jsonable(v) for v in self.x], "t": [_jsonable(v) for v in self.t]}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def _prod(values, one=1):
    out = one
    for v in values:
        out = out * v
    return out


def p_map(fam: IndexFamily, q: DeformationPoint) -> tuple:
    """``x_i * prod_{j in J_i} t_j`` for every coordinate."""
    J_of = fam.structure.J_of
    return tuple(q.x[i - 1] * _prod(q.t[j - 1] for j in sorted(J_of[i])) for i in range(1, fam.n + 1))


def _check_scale(c):
    if isinstance(c, complex) or not c > 0:
        raise NonPositiveScale(f"scale must be a positive real, got {c!r}")


def mu(fam: IndexFamily, q: DeformationPoint, j: int, c) -> DeformationPoint:
    """Action of the ``j``-th multiplicative group: ``x_{I_j} * c``, ``t_j / c``."""
    _check_scale(c)
    I = fam.I(j)
    x = tuple(v * c if i in I else v for i, v in enumerate(q.x, 1))
    t = tuple(v / c if k == j else v for k, v in enumerate(q.t, 1))
    return DeformationPoint(x, t)


def tau(fam: IndexFamily, q: DeformationPoint, j: int, lam) -> DeformationPoint:
    """``mu_j(lam)`` composed with ``mu_b(1/lam)`` for every immediate parent ``b``."""
    _check_scale(lam)
    inv = Fraction(1) / lam if isinstance(lam, (int, Fraction)) else 1.0 / lam
    out = mu(fam, q, j, lam)
    for b in sorted(fam.structure.parents[j]):
        out = mu(fam, out, b, inv)
    return out


def mu_via_tau(fam: IndexFamily, q: DeformationPoint, j: int, lam) -> DeformationPoint:
    """``mu_j(lam)`` rebuilt as the product of ``tau_a(lam)`` over ``I_a`` inside ``I_j``."""
    out = q
    for a in fam.blocks:
        if fam.I(a) <= fam.I(j):
            out = tau(fam, out, a, lam)
    return out


def scale(fam: IndexFamily, z, lams: dict[int, object]):
    """Complex-coordinate multi-action ``mu_J(z, lam)``: ``z_i`` times the
    product of ``lam_j`` over ``j`` in ``J`` with ``i`` in ``I_j``.  ``lam_j``
    may be zero (the projection limit) or a numpy array (batched)."""
    out = list(z)
    for j, lam in lams.items():
        for i in fam.I(j):
            out[i - 1] = out[i - 1] * lam
    return out


def dist(fam: IndexFamily, z, j: int) -> float:
    z = np.asarray(z)
    return float(np.linalg.norm(z[[i - 1 for i in sorted(fam.I(j))]]))


# -- cones --------------------------------------------------------------------

@dataclass(frozen=True)
class SectorCone:
    """Open convex proper cone in the block ``C^{hat I_j}``.

    ``|arg(z_a e^{-i dir})| < half_angle`` for the anchor coordinate ``a``
    and ``|z_i| < ratio * Re(z_a e^{-i dir})`` for the other coordinates.
    """

    anchor: int
    dir: float = 0.0
    half_angle: float = math.pi / 4
    ratio: float = 1.0

    def __post_init__(self):
        if not 0 < self.half_angle < math.pi / 2:
            raise ValueError(f"half_angle must lie in (0, pi/2), got {self.half_angle}")
        if not self.ratio > 0:
            raise ValueError("ratio must be positive")

    def to_json(self) -> dict:
        return {"anchor": self.anchor, "dir": self.dir, "half_angle": self.half_angle,
                "ratio": self.ratio}


@dataclass(frozen=True)
class MultiCone:
    fam: IndexFamily
    radii: tuple[float, ...]
    W_radius: float
    sectors: tuple[SectorCone, ...]
    eps: float

    def __post_init__(self):
        st = self.fam.structure
        if len(self.radii) != self.fam.ell or len(self.sectors) != self.fam.ell:
            raise ValueError("cone needs one radius and one sector per block")
        for j, sec in zip(self.fam.blocks, self.sectors):
            if sec.anchor not in st.hat[j]:
                raise ValueError(f"anchor z{sec.anchor} is not in the hat set of block {j}")
        if self.eps <= 0 or self.W_radius <= 0 or any(r <= 0 for r in self.radii):
            raise ValueError("eps and radii must be positive")

    @property
    def n(self) -> int:
        return self.fam.n

    @property
    def W_coords(self) -> tuple[int, ...]:
        used = self.fam.I_of(self.fam.blocks)
        return tuple(i for i in range(1, self.n + 1) if i not in used)

    def hat_idx(self, j: int) -> list[int]:
        return [i - 1 for i in sorted(self.fam.structure.hat[j])]

    def pairs(self) -> list[tuple[int, int]]:
        """``(b, j)`` with ``I_b`` strictly inside ``I_j``."""
        return [(b, j) for j in self.fam.blocks for b in self.fam.blocks if self.fam.subset_of(b, j)]

    def to_json(self) -> dict:
        return {"eps": self.eps, "radii": list(self.radii), "W_radius": self.W_radius,
                "sectors": [s.to_json() for s in self.sectors]}

    def __contains__(self, z) -> bool:
        return contains(self, z)


def _block_norms(S: MultiCone, Z: np.ndarray) -> dict[int, np.ndarray]:
    return {j: np.linalg.norm(Z[..., S.hat_idx(j)], axis=-1) for j in S.fam.blocks}


def _sector_ok(S: MultiCone, Z: np.ndarray, j: int, closed: bool, tol: float) -> np.ndarray:
    sec = S.sectors[j - 1]
    rot = np.exp(-1j * sec.dir)
    a = Z[..., sec.anchor - 1] * rot
    ang = np.abs(np.angle(a))
    re = a.real
    if closed:
        ok = (ang <= sec.half_angle + tol) | (np.abs(a) <= tol)
    else:
        ok = (ang < sec.half_angle) & (np.abs(a) > 0)
    for i in S.hat_idx(j):
        if i == sec.anchor - 1:
            continue
        m = np.abs(Z[..., i])
        ok &= (m <= sec.ratio * re + tol * (1 + np.abs(a))) if closed else (m < sec.ratio * re)
    return ok


def contains_many(S: MultiCone, Z, closed: bool = False, tol: float = 0.0) -> np.ndarray:
    """Membership of every row of ``Z`` (shape ``(..., n)``)."""
    Z = np.asarray(Z, dtype=np.complex128)
    if Z.shape[-1] != S.n:
        raise ValueError(f"points must have {S.n} coordinates")
    norms = _block_norms(S, Z)
    le = (lambda a, b: a <= b + tol) if closed else (lambda a, b: a < b)
    ok = np.ones(Z.shape[:-1], dtype=bool)
    for j in S.fam.blocks:
        ok &= le(norms[j], S.radii[j - 1])
        ok &= _sector_ok(S, Z, j, closed, tol)
    W = [i - 1 for i in S.W_coords]
    if W:
        ok &= le(np.linalg.norm(Z[..., W], axis=-1), S.W_radius)
    for b, j in S.pairs():
        ok &= le(norms[b], S.eps * norms[j])
    return ok


def contains(S: MultiCone, z) -> bool:
    return bool(contains_many(S, np.asarray(z, dtype=np.complex128)[None, :])[0])


def in_closure(S: MultiCone, z, tol: float = 1e-12) -> bool:
    return bool(contains_many(S, np.asarray(z, dtype=np.complex128)[None, :], True, tol)[0])


# -- restriction and projection ------------------------------------------------

@dataclass(frozen=True)
class RestrictedCone:
    J: frozenset[int]
    inner: MultiCone
    coords: tuple[int, ...]  # original indices of the surviving coordinates
    block_map: tuple[int, ...]  # inner block k -> original block

    def contains(self, w) -> bool:
        return contains(self.inner, w)

    def describe(self) -> dict:
        return {
            "J": sorted(self.J),
            "coords": list(self.coords),
            "blocks": list(self.block_map),
            "family": self.inner.fam.to_json(),
        }


def restrict(S: MultiCone, J: Iterable[int]) -> RestrictedCone:
    J = frozenset(J)
    if not J:
        raise EmptySubset("restriction needs a nonempty J")
    fam = S.fam
    IJ = fam.I_of(J)
    coords = tuple(i for i in range(1, fam.n + 1) if i not in IJ)
    new_index = {i: k for k, i in enumerate(coords, 1)}
    keep = J_star(fam, J)
    sets = [frozenset(new_index[i] for i in fam.I(j) - IJ) for j in keep]
    inner_fam = validate_family(len(coords), sets) if coords else IndexFamily(0, ())
    sectors = tuple(replace(S.sectors[j - 1], anchor=new_index[S.sectors[j - 1].anchor]) for j in keep)
    inner = MultiCone(inner_fam, tuple(S.radii[j - 1] for j in keep), S.W_radius, sectors, S.eps)
    return RestrictedCone(J, inner, coords, tuple(keep))


def project(S: MultiCone, J: Iterable[int], z) -> np.ndarray:
    J = frozenset(J)
    if not J:
        raise EmptySubset("projection needs a nonempty J")
    if not contains(S, z):
        raise NotInCone("point is not in the multi-cone")
    IJ = S.fam.I_of(J)
    z = np.asarray(z, dtype=np.complex128)
    return z[[i - 1 for i in range(1, S.n + 1) if i not in IJ]]


def same_restriction(fam: IndexFamily, J: Iterable[int], J2: Iterable[int]) -> bool:
    """``S_J = S_J'`` decided combinatorially: equal ``I_J``."""
    return fam.I_of(J) == fam.I_of(J2)


# -- shrinking ----------------------------------------------------------------

def shrink(S: MultiCone, factor: float = 0.5, *, radius: float | None = None,
           eps: float | None = None, angle: float | None = None, ratio: float | None = None) -> MultiCone:
    """Scale radii, eps, half angles and ratios (each defaulting to ``factor``)."""
    fr = factor if radius is None else radius
    fe = factor if eps is None else eps
    fa = factor if angle is None else angle
    fq = factor if ratio is None else ratio
    sectors = tuple(replace(s, half_angle=s.half_angle * fa, ratio=s.ratio * fq) for s in S.sectors)
    return MultiCone(S.fam, tuple(r * fr for r in S.radii), S.W_radius * fr, sectors, S.eps * fe)


def properly_contained(Sp: MultiCone, S: MultiCone) -> bool:
    if Sp.fam != S.fam or not Sp.eps < S.eps or not Sp.W_radius < S.W_radius:
        return False
    if any(not a < b for a, b in zip(Sp.radii, S.radii)):
        return False
    for a, b in zip(Sp.sectors, S.sectors):
        if a.anchor != b.anchor:
            return False
        shift = abs(math.remainder(a.dir - b.dir, 2 * math.pi))
        if not shift + a.half_angle < b.half_angle:
            return False
        bound = b.ratio if shift == 0 else b.ratio * math.cos(shift + a.half_angle)
        if not a.ratio < bound:
            return False
    return True


# -- sampling -----------------------------------------------------------------

def _disk(rng, size, radius):
    r = radius * np.sqrt(rng.uniform(0, 1, size))
    return r * np.exp(2j * np.pi * rng.uniform(0, 1, size))


def _ball(rng, count, dim, radius):
    """Uniform points in the ball of ``C^dim`` (as ``R^{2 dim}``)."""
    if dim == 0:
        return np.zeros((count, 0), dtype=np.complex128)
    g = rng.normal(size=(count, 2 * dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.uniform(0, 1, count) ** (1.0 / (2 * dim))
    g *= r[:, None]
    return g[:, :dim] + 1j * g[:, dim:]


def sample_cone(S: MultiCone, count: int, rng: np.random.Generator, decades: float = 3.0) -> np.ndarray:
    """Points of ``S``, block radii log-uniform over ``decades`` below their bound.

    Blocks are drawn from the largest index set down, so each block's bound
    respects the ratio condition against every block containing it.
    """
    fam = S.fam
    Z = np.zeros((count, S.n), dtype=np.complex128)
    rad: dict[int, np.ndarray] = {}
    shrink_in = 1 - 1e-9
    for j in sorted(fam.blocks, key=lambda j: (-len(fam.I(j)), j)):
        bound = np.full(count, S.radii[j - 1])
        for k in fam.blocks:
            if fam.subset_of(j, k):
                bound = np.minimum(bound, S.eps * rad[k])
        r = bound * shrink_in * 10.0 ** (-decades * rng.uniform(0, 1, count))
        rad[j] = r
        sec = S.sectors[j - 1]
        off = sec.half_angle * shrink_in * rng.uniform(-1, 1, count)
        block = {sec.anchor - 1: np.exp(1j * (sec.dir + off))}
        for i in S.hat_idx(j):
            if i != sec.anchor - 1:
                block[i] = _disk(rng, count, sec.ratio * np.cos(off) * shrink_in)
        norm = np.sqrt(sum(np.abs(v) ** 2 for v in block.values()))
        for i, v in block.items():
            Z[:, i] = v * (r / norm)
    W = [i - 1 for i in S.W_coords]
    if W:
        Z[:, W] = _ball(rng, count, len(W), S.W_radius * shrink_in)
    return Z


# -- paths --------------------------------------------------------------------

@dataclass
class Path:
    points: list[np.ndarray]
    length: float
    pieces: dict[str, float] = field(default_factory=dict)

    def polyline_length(self) -> float:
        return float(sum(np.linalg.norm(b - a) for a, b in zip(self.points, self.points[1:])))


def path_constant(ell: int) -> float:
    return math.sqrt(ell) * (1 + math.pi) + 1


def path(S: MultiCone, z, w, arc_points: int = 16) -> Path:
    """Curve from ``z`` to ``w`` inside the closure of ``S``.

    Radial move of every block of ``z`` to the common radius
    ``r_j = min(|z_j|, |w_j|)``, the shortest path on the product of spheres
    of those radii, then radial and straight moves onto ``w``.  ``length``
    is the exact length of the curve; ``points`` samples it.
    """
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    if not contains(S, z) or not contains(S, w):
        raise NotInCone("both endpoints must lie in the multi-cone")
    if np.array_equal(z, w):
        return Path([z], 0.0, {})
    blocks = {j: S.hat_idx(j) for j in S.fam.blocks}
    W = [i - 1 for i in S.W_coords]

    zt = z.copy()
    wt = w.copy()
    wt[W] = z[W]
    wp = wt.copy()
    radii = {}
    for j, idx in blocks.items():
        nz, nw = np.linalg.norm(z[idx]), np.linalg.norm(w[idx])
        r = min(nz, nw)
        radii[j] = r
        zt[idx] = z[idx] * (r / nz)
        wt[idx] = w[idx] * (r / nw)

    # geodesic on the torus of spheres: great-circle arcs run at once
    angles = {}
    for j, idx in blocks.items():
        u = zt[idx] / radii[j]
        v = wt[idx] / radii[j]
        c = float(np.clip(np.real(np.vdot(u, v)), -1.0, 1.0))
        angles[j] = math.acos(c)
    arc_len = math.sqrt(sum((radii[j] * angles[j]) ** 2 for j in blocks))

    def arc_at(s: float) -> np.ndarray:
        out = zt.copy()
        for j, idx in blocks.items():
            th = angles[j]
            if th < 1e-15:
                out[idx] = zt[idx] + s * (wt[idx] - zt[idx])
                continue
            a = math.sin((1 - s) * th) / math.sin(th)
            b = math.sin(s * th) / math.sin(th)
            out[idx] = a * zt[idx] + b * wt[idx]
        return out

    pts = [z, zt]
    pts += [arc_at(k / arc_points) for k in range(1, arc_points)]
    pts += [wt, wp, w]
    pieces = {
        "radial_z": float(np.linalg.norm(z - zt)),
        "arc": arc_len,
        "radial_w": float(np.linalg.norm(wp - wt)),
        "W": float(np.linalg.norm(w - wp)),
    }
    return Path(pts, sum(pieces.values()), pieces)


# -- multi-normal cone membership ----------------------------------------------

class ZModel(Protocol):
    def contains(self, x: np.ndarray) -> np.ndarray: ...


@dataclass
class Everything:
    def contains(self, x):
        return np.ones(np.asarray(x).shape[:-1], dtype=bool)


@dataclass
class EmptySet:
    def contains(self, x):
        return np.zeros(np.asarray(x).shape[:-1], dtype=bool)

    def sample(self, rng, radius, count):
        return None


@dataclass
class PredicateSet:
    """``Z`` given by a vectorised predicate only (measure-positive sets)."""

    predicate: Callable[[np.ndarray], np.ndarray]

    def contains(self, x):
        return np.asarray(self.predicate(np.asarray(x)), dtype=bool)


@dataclass
class ParametricCurve:
    """``Z = {gamma(s) : lo < s < hi}`` sampled with ``s`` log-uniform."""

    gamma: Callable[[np.ndarray], np.ndarray]
    lo: float = 1e-12
    hi: float = 1.0

    def contains(self, x):
        return np.zeros(np.asarray(x).shape[:-1], dtype=bool)

    def sample(self, rng, radius, count):
        s = np.exp(rng.uniform(math.log(self.lo), math.log(self.hi), count))
        pts = np.asarray(self.gamma(s), dtype=float)
        return pts[np.linalg.norm(pts, axis=1) < radius]


def _angle(x: np.ndarray, xi: np.ndarray) -> np.ndarray:
    nx = np.linalg.norm(x, axis=-1)
    c = (x @ xi) / np.where(nx > 0, nx, 1.0) / np.linalg.norm(xi)
    return np.where(nx > 0, np.arccos(np.clip(c, -1, 1)), np.inf)


def in_cofinal_cone(fam: IndexFamily, xi: dict[int, np.ndarray], eps: float, X: np.ndarray) -> np.ndarray:
    """Membership in the cofinal multi-cone of opening ``eps`` toward ``xi``."""
    st = fam.structure
    X = np.asarray(X, dtype=float)
    ok = np.ones(X.shape[:-1], dtype=bool)
    for j in fam.blocks:
        v = xi[j]
        if not np.any(v):
            continue
        hat = [i - 1 for i in sorted(st.hat[j])]
        rest = [i - 1 for i in sorted(fam.I(j) - st.hat[j])]
        ok &= _angle(X[..., hat], v) < eps
        if rest:
            ok &= np.linalg.norm(X[..., rest], axis=-1) < eps * np.linalg.norm(X[..., hat], axis=-1)
    return ok


def _sample_cofinal(fam, xi, eps, radius, count, rng):
    st = fam.structure
    n = fam.n
    X = np.zeros((count, n))
    rad: dict[int, np.ndarray] = {}
    ell = max(fam.ell, 1)
    for j in sorted(fam.blocks, key=lambda j: (-len(fam.I(j)), j)):
        bound = np.full(count, radius / math.sqrt(n + 1))
        for k in fam.blocks:
            if fam.subset_of(j, k) and np.any(xi[k]):
                bound = np.minimum(bound, eps * rad[k] / ell)
        r = bound * 10.0 ** (-3 * rng.uniform(0, 1, count))
        rad[j] = r
        hat = [i - 1 for i in sorted(st.hat[j])]
        v = np.asarray(xi[j], dtype=float)
        if np.any(v):
            dirn = v / np.linalg.norm(v) + (eps / 4) * rng.uniform(-1, 1, (count, len(hat))) / math.sqrt(len(hat))
        else:
            dirn = rng.normal(size=(count, len(hat)))
        dirn /= np.linalg.norm(dirn, axis=1, keepdims=True)
        X[:, hat] = dirn * r[:, None]
    W = [i - 1 for i in range(1, n + 1) if i not in fam.I_of(fam.blocks)]
    if W:
        X[:, W] = rng.uniform(-1, 1, (count, len(W))) * radius / math.sqrt(n + 1)
    return X


@dataclass
class NormalConeVerdict:
    verdict: str
    hits: list[bool]

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "hits": self.hits}


def normal_cone_test(fam: IndexFamily, Z, xi: Sequence, schedule: Sequence[tuple[float, float, int]],
                     seed: int = 0) -> NormalConeVerdict:
    """Sampled membership of ``p = (0; xi)`` in the multi-normal cone of ``Z``.

    ``xi[j-1]`` is the fiber vector of block ``j`` on the coordinates of its
    hat set.  Real coordinates.  Each schedule entry ``(eps, radius, count)``
    looks for a point of ``Z`` inside the cofinal multi-cone of opening
    ``eps`` toward ``xi`` intersected with the ball of that radius, using
    both the model's own samples (if it has ``sample``) and samples of the
    cone tested against ``Z.contains``.
    """
    rng = np.random.default_rng(seed)
    st = fam.structure
    xi_map = {}
    for j in fam.blocks:
        v = np.asarray(xi[j - 1], dtype=float).reshape(-1)
        if v.size != len(st.hat[j]):
            raise ValueError(f"fiber vector of block {j} must have {len(st.hat[j])} entries")
        xi_map[j] = v
    hits = []
    for eps, radius, count in schedule:
        found = False
        sampler = getattr(Z, "sample", None)
        if sampler is not None:
            pts = sampler(rng, radius, count)
            if pts is not None and len(pts):
                pts = pts[np.linalg.norm(pts, axis=1) < radius]
                found = bool(np.any(in_cofinal_cone(fam, xi_map, eps, pts)))
        if not found:
            pts = _sample_cofinal(fam, xi_map, eps, radius, count, rng)
            mask = in_cofinal_cone(fam, xi_map, eps, pts) & (np.linalg.norm(pts, axis=1) < radius)
            found = bool(np.any(np.asarray(Z.contains(pts[mask]), dtype=bool)))
        hits.append(found)
    if all(hits):
        verdict = "In"
    elif not hits[-1]:
        verdict = "Out"
    else:
        verdict = "Unknown"
    return NormalConeVerdict(verdict, hits)
