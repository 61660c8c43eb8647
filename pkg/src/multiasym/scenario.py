"""Scenario files: one JSON document describing a family, a cone, a function
and the requests for each front-end subcommand.

Complex numbers are written as a plain number or as ``[re, im]``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import expr as ex
from .errors import ScenarioError
from .expansion import CoefficientFamily, taylor_family, zero_family
from .family import IndexFamily, validate_family
from .geometry import Everything, EmptySet, MultiCone, ParametricCurve, SectorCone
from .morphism import FamilyPair

SCHEMA = 1


def to_complex(v) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise ScenarioError(f"cannot read {v!r} as a complex number")


def to_vector(v, n: int | None = None) -> np.ndarray:
    if not isinstance(v, list):
        raise ScenarioError(f"expected a list of coordinates, got {v!r}")
    out = np.array([to_complex(x) for x in v], dtype=np.complex128)
    if n is not None and len(out) != n:
        raise ScenarioError(f"point {v!r} needs {n} coordinates")
    return out


def complex_json(v) -> Any:
    v = complex(v)
    return [v.real, v.imag]


def parse_family(data) -> IndexFamily:
    try:
        return validate_family(int(data["n"]), [list(s) for s in data["sets"]])
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"family needs 'n' and 'sets': {exc}") from exc


def parse_cone(fam: IndexFamily, data) -> MultiCone:
    try:
        sectors = tuple(
            SectorCone(int(s["anchor"]), float(s.get("dir", 0.0)), float(s.get("half_angle", math.pi / 4)),
                       float(s.get("ratio", 1.0)))
            for s in data["sectors"]
        )
        return MultiCone(fam, tuple(float(r) for r in data["radii"]), float(data.get("W_radius", 1.0)),
                         sectors, float(data["eps"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad cone: {exc}") from exc


def _orders(fam: IndexFamily, data) -> list[tuple[int, ...]]:
    out = []
    for N in data:
        N = tuple(int(x) for x in N)
        if len(N) != fam.ell or any(x < 0 for x in N):
            raise ScenarioError(f"order {list(N)} needs {fam.ell} non-negative entries")
        out.append(N)
    return out


@dataclass
class Scenario:
    raw: dict
    family_data: dict
    seed: int = 0
    count: int = 2000
    decades: float = 3.0
    _family: IndexFamily | None = field(default=None, repr=False)

    @classmethod
    def load(cls, path: str | Path) -> "Scenario":
        try:
            raw = json.loads(Path(path).read_text())
        except FileNotFoundError as exc:
            raise ScenarioError(f"scenario file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw: dict) -> "Scenario":
        if not isinstance(raw, dict):
            raise ScenarioError("scenario must be a JSON object")
        if raw.get("schema") != SCHEMA:
            raise ScenarioError(f"unsupported schema {raw.get('schema')!r}; expected {SCHEMA}")
        if "family" not in raw:
            raise ScenarioError("scenario needs a 'family'")
        samples = raw.get("samples", {})
        return cls(raw, raw["family"], int(raw.get("seed", 0)), int(samples.get("count", 2000)),
                   float(samples.get("decades", 3.0)))

    # lazily validated parts
    @property
    def family(self) -> IndexFamily:
        if self._family is None:
            self._family = parse_family(self.family_data)
        return self._family

    def need(self, key: str):
        if key not in self.raw:
            raise ScenarioError(f"scenario needs '{key}' for this subcommand")
        return self.raw[key]

    @property
    def cone(self) -> MultiCone:
        return parse_cone(self.family, self.need("cone"))

    @property
    def ambient_cone(self) -> MultiCone | None:
        if "ambient_cone" not in self.raw:
            return None
        return parse_cone(self.family, self.raw["ambient_cone"])

    @property
    def function(self) -> ex.Expr:
        return ex.parse(self.need("function"), self.family.n)

    @property
    def orders(self) -> list[tuple[int, ...]]:
        return _orders(self.family, self.need("orders"))

    def cap_for(self, orders) -> tuple[int, ...]:
        return tuple(max((N[j] for N in orders), default=0) for j in range(self.family.ell))

    def coefficients(self, orders=None) -> CoefficientFamily:
        """Explicit entries, the Taylor family of ``function`` or the zero family."""
        data = self.raw.get("coefficients", {"taylor": True})
        fam = self.family
        cap = tuple(data["cap"]) if "cap" in data else self.cap_for(orders or self.orders)
        if data.get("taylor"):
            return taylor_family(self.function, fam, cap)
        if data.get("zero"):
            return zero_family(fam, cap)
        return CoefficientFamily.from_json(fam, {**data, "cap": list(cap)})

    def points(self, key: str = "points") -> np.ndarray:
        pts = self.need(key)
        return np.array([to_vector(p, self.family.n) for p in pts]).reshape(-1, self.family.n)

    def subsets(self) -> list[frozenset]:
        out = []
        for J in self.need("subsets"):
            J = frozenset(int(j) for j in J)
            if not J or not J <= set(self.family.blocks):
                raise ScenarioError(f"bad block subset {sorted(J)}")
            out.append(J)
        return out

    def pair(self) -> FamilyPair:
        m = self.need("morphism")
        famN = parse_family(m["target_family"])
        base = tuple(to_complex(v) if isinstance(v, list) else v for v in m.get("base", []))
        return FamilyPair(self.family, famN, tuple(ex.parse(t, self.family.n) for t in m["f"]), base,
                          seed=self.seed)


def parse_z_model(data):
    kind = data.get("kind")
    if kind == "everything":
        return Everything()
    if kind == "empty":
        return EmptySet()
    if kind == "curve":
        comps = [ex.parse(t, 1) for t in data["gamma"]]

        def gamma(s):
            S = np.asarray(s, dtype=np.complex128)[:, None]
            return np.stack([ex.eval_array(c, S).real for c in comps], axis=1)

        return ParametricCurve(gamma, float(data.get("lo", 1e-12)), float(data.get("hi", 1.0)))
    raise ScenarioError(f"unknown set kind {kind!r}; use everything, empty or curve")
