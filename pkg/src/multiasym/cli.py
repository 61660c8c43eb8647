"""Command line front-end.

    multiasym <subcommand> <scenario.json> [--seed U64] [--out PATH] [--format json|csv]

Exit status 0 on success, 1 for invalid input, 2 for runtime failures; errors
are written to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import expr as ex
from .errors import MultiAsymError, ScenarioError
from .expansion import (
    app,
    extract_coefficients,
    remainder_integral,
    t_poly,
    t_poly_via_oracle,
    taylor_family,
    verify_developable,
    verify_flat,
    consistency_check,
)
from .geometry import contains_many, in_closure, normal_cone_test, path, path_constant, restrict
from .geometry import DeformationPoint
from .morphism import bundle_map_predicate, dagger, fiberwise_linear, tilde_f, zero_section_map
from .scenario import Scenario, complex_json, parse_z_model, to_complex, to_vector

SUBCOMMANDS = ("validate", "tpoly", "expand", "verify", "flat", "consistency", "coeffs", "remainder",
               "morphism", "cone")


def _clean(v):
    """JSON-safe copy: non-finite floats as strings, fractions as ``"p/q"``."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, (complex, np.complexfloating)):
        return _clean([float(v.real), float(v.imag)])
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2) + "\n"


# -- subcommands --------------------------------------------------------------

def cmd_validate(sc: Scenario) -> dict:
    fam = sc.family
    return {"valid": True, "family": fam.to_json(), "structure": fam.structure.to_json()}


def cmd_tpoly(sc: Scenario) -> dict:
    fam = sc.family
    rows = []
    for J in sc.subsets():
        for N in sc.orders:
            P = t_poly(fam, J, N)
            rows.append({"J": sorted(J), "N": list(N), "monomials": P.to_json(),
                         "oracle_equal": P == t_poly_via_oracle(fam, J, N)})
    return {"tpoly": rows}


def cmd_expand(sc: Scenario) -> dict:
    F = sc.coefficients()
    Z = sc.points()
    rows = []
    fv = ex.eval_array(sc.function, Z) if "function" in sc.raw else None
    for N in sc.orders:
        vals = app(F, N, Z)
        row = {"N": list(N), "app": [complex_json(v) for v in vals]}
        if fv is not None:
            row["remainder"] = [complex_json(v) for v in fv - vals]
        rows.append(row)
    return {"points": [[complex_json(v) for v in z] for z in Z], "expansions": rows}


def cmd_verify(sc: Scenario):
    F = sc.coefficients()
    return verify_developable(sc.function, F, sc.cone, sc.orders, sc.count, sc.seed, sc.decades,
                              sc.ambient_cone)


def cmd_flat(sc: Scenario):
    return verify_flat(sc.function, sc.family, sc.cone, sc.orders, sc.count, sc.seed, sc.decades,
                       sc.ambient_cone)


def cmd_consistency(sc: Scenario) -> dict:
    data = sc.raw.get("coefficients", {})
    if "cap" not in data and "orders" not in sc.raw:
        raise ScenarioError("consistency needs a coefficient cap or orders")
    F = sc.coefficients(sc.orders if "orders" in sc.raw else None)
    return consistency_check(F, sc.cone, count=min(sc.count, 400), seed=sc.seed, decades=sc.decades).to_json()


def cmd_coeffs(sc: Scenario) -> dict:
    f = sc.function
    S = sc.cone
    fam = S.fam
    rows = []
    for req in sc.need("extract"):
        J = frozenset(int(j) for j in req["J"])
        alpha = tuple(int(a) for a in req["alpha"])
        probe = [to_complex(v) for v in req["probe"]]
        got = extract_coefficients(f, S, J, alpha, probe)
        row = {"J": sorted(J), "alpha": list(alpha), "probe": [complex_json(v) for v in probe], **got.to_json()}
        sym = ex.restrict_zero(ex.derive_multi(f, alpha), fam.I_of(J))
        row["taylor"] = ex.render(sym)
        row["taylor_value"] = complex_json(ex.evaluate(sym, got.preimage))
        rows.append(row)
    return {"extractions": rows}


def cmd_remainder(sc: Scenario) -> dict:
    f = sc.function
    fam = sc.family
    Z = sc.points()
    orders = sc.orders
    F = taylor_family(f, fam, sc.cap_for(orders))
    order = int(sc.raw.get("quadrature_order", 32))
    fv = ex.eval_array(f, Z)
    rows = []
    for N in orders:
        phi = remainder_integral(f, fam, N, Z, order=order)
        direct = fv - app(F, N, Z)
        rows.append({"N": list(N), "phi": [complex_json(v) for v in phi],
                     "f_minus_app": [complex_json(v) for v in direct],
                     "max_abs_diff": float(np.max(np.abs(phi - direct)))})
    return {"quadrature_order": order, "remainders": rows}


def cmd_morphism(sc: Scenario) -> dict:
    pair = sc.pair()
    m = sc.raw["morphism"]
    out = {
        "dagger": [dagger(pair, j).to_json() for j in pair.famN.blocks],
        "bundle_map": bundle_map_predicate(pair),
    }
    if out["bundle_map"]:
        out["fiberwise_linear"] = fiberwise_linear(pair, seed=sc.seed)
    table = []
    for s in m.get("zero_section_points", []):
        s = [_num(v) for v in s]
        table.append({"source": s, "target": list(zero_section_map(pair, s))})
    out["zero_section"] = table
    lifts = []
    for q in m.get("deformation_points", []):
        point = DeformationPoint(tuple(_num(v) for v in q["x"]), tuple(_num(v) for v in q["t"]))
        lifts.append({"source": point.to_json(), "target": tilde_f(pair, point).to_json()})
    out["tilde_f"] = lifts
    return out


def _num(v):
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, int):
        return Fraction(v)
    return to_complex(v)


def cmd_cone(sc: Scenario) -> dict:
    S = sc.cone
    fam = S.fam
    out: dict = {"dist_norm": "euclidean"}
    if "points" in sc.raw:
        Z = sc.points()
        out["membership"] = [bool(b) for b in contains_many(S, Z)]
    paths = []
    for z, w in sc.raw.get("paths", []):
        z, w = to_vector(z, fam.n), to_vector(w, fam.n)
        P = path(S, z, w)
        d = float(np.linalg.norm(z - w))
        paths.append({"length": P.length, "distance": d, "bound": path_constant(fam.ell) * d,
                      "within_bound": bool(P.length <= path_constant(fam.ell) * d + 1e-12),
                      "vertices_in_closure": all(in_closure(S, p, tol=1e-9) for p in P.points),
                      "pieces": P.pieces})
    if paths:
        out["paths"] = paths
    if "restrictions" in sc.raw:
        out["restrictions"] = [restrict(S, frozenset(J)).describe() for J in sc.raw["restrictions"]]
    nc = sc.raw.get("normal_cone")
    if nc:
        Zm = parse_z_model(nc["set"])
        schedule = [tuple(s) for s in nc.get("schedule", [[0.5, 1.0, 4000], [0.1, 0.1, 4000], [0.02, 0.01, 4000]])]
        verdicts = []
        for xi in nc["xi"]:
            v = normal_cone_test(fam, Zm, xi, schedule, seed=sc.seed)
            verdicts.append({"xi": xi, **v.to_json()})
        out["normal_cone"] = verdicts
    return out


HANDLERS = {
    "validate": cmd_validate,
    "tpoly": cmd_tpoly,
    "expand": cmd_expand,
    "verify": cmd_verify,
    "flat": cmd_flat,
    "consistency": cmd_consistency,
    "coeffs": cmd_coeffs,
    "remainder": cmd_remainder,
    "morphism": cmd_morphism,
    "cone": cmd_cone,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="multiasym", description=__doc__.splitlines()[0] if __doc__ else None)
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("scenario", type=Path)
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--out", type=Path, default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return p


def run(subcommand: str, scenario: Path, seed: int | None = None, fmt: str = "json") -> str:
    sc = Scenario.load(scenario)
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ScenarioError("seed must be an unsigned 64-bit integer")
        sc.seed = seed
    result = HANDLERS[subcommand](sc)
    if fmt == "csv":
        if not hasattr(result, "to_csv"):
            raise ScenarioError(f"csv output is only available for verify and flat, not {subcommand}")
        return result.to_csv()
    if hasattr(result, "to_json"):
        result = result.to_json()
    return dumps({"schema": 1, "subcommand": subcommand, "seed": sc.seed, "result": result})


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = run(args.subcommand, args.scenario, args.seed, args.format)
    except MultiAsymError as exc:
        sys.stderr.write(dumps(exc.to_json()))
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 1
    except (ZeroDivisionError, OverflowError, FloatingPointError) as exc:
        sys.stderr.write(dumps({"error": type(exc).__name__, "message": str(exc)}))
        return 2
    if args.out is not None:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
