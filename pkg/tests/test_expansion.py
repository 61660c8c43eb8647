from __future__ import annotations

import csv
import io
import math

import numpy as np
import pytest

from multiasym import expr as ex
from multiasym.errors import CapExceeded, MissingCoefficient, NonConvergent, NoPreimage, ScenarioError
from multiasym.expansion import (
    CoefficientFamily,
    app,
    app_poly,
    consistency_check,
    extract_coefficients,
    index_set_A,
    remainder_integral,
    shift_family,
    t_poly,
    taylor_family,
    verify_developable,
    weights,
    zero_family,
)
from multiasym.family import majima, takeuchi, validate_family
from multiasym.geometry import MultiCone, SectorCone
from multiasym.poly import Poly

TAK2 = validate_family(2, [[1], [1, 2]])


def _cone(fam, R=1.0, eps=0.5, theta=0.7):
    return MultiCone(fam, (R,) * fam.ell, R,
                     tuple(SectorCone(min(fam.structure.hat[j]), 0.0, theta) for j in fam.blocks), eps)


def test_index_set_majima():
    assert sorted(index_set_A(majima(2), {1, 2}, (2, 1))) == [(0, 0), (1, 0)]
    assert t_poly(majima(2), {1, 2}, (2, 1)) == Poly.const(2, 1) + Poly.var(2, 1)


def test_index_set_takeuchi():
    # |alpha_1| < 2 and |alpha| < 3
    assert sorted(index_set_A(TAK2, {1, 2}, (2, 3))) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1)]
    assert weights(TAK2, (2, 3)) == (2, 1)


def test_weights_takeuchi3():
    # parents of block 1 is block 2, of block 2 is block 3
    assert weights(takeuchi(3), (5, 3, 1)) == (2, 2, 1)


def test_app_of_taylor_family_is_truncation():
    f = ex.parse("exp(z1 + 2*z2)")
    F = taylor_family(f, majima(2), (3, 3))
    z = np.array([0.01, 0.02])
    # the remainder is the part with a >= 3 and b >= 3
    rest = sum(z[0] ** a * (2 * z[1]) ** b / (math.factorial(a) * math.factorial(b))
               for a in range(3, 12) for b in range(3, 12))
    assert app(F, (3, 3), z) == pytest.approx(math.exp(z[0] + 2 * z[1]) - rest, rel=1e-15)


def test_coefficient_family_rejects_vanishing_variable():
    with pytest.raises(ScenarioError):
        CoefficientFamily(majima(2), (1, 1), {(frozenset({1}), (0, 0)): ex.parse("z1")})


def test_missing_and_cap():
    F = CoefficientFamily(majima(2), (1, 1))
    with pytest.raises(MissingCoefficient):
        F.get({1}, (0, 0))
    with pytest.raises(CapExceeded):
        F.get({1}, (1, 0))
    with pytest.raises(CapExceeded):
        shift_family(zero_family(majima(2), (0, 1)), 1)


def test_shift_identity_on_taylor_family():
    f = ex.parse("z1^3*z2 + z2^4 - 2*z1*z2^2 + 5")
    F = taylor_family(f, TAK2, (3, 4))
    for i in (1, 2):
        Fp = shift_family(F, i)
        N = tuple(c for c in Fp.cap)
        plus = tuple(c + (1 if j in TAK2.structure.J_of[i] else 0) for j, c in enumerate(N, 1))
        assert app_poly(F, plus).diff(i) == app_poly(Fp, N)


def test_remainder_matches_direct():
    f = ex.parse("exp(z1 + z2)")
    F = taylor_family(f, TAK2, (2, 3))
    Z = np.array([[0.1 + 0.05j, 0.3], [0.02, -0.2j]])
    phi = remainder_integral(f, TAK2, (2, 3), Z)
    assert np.max(np.abs(phi - (ex.eval_array(f, Z) - app(F, (2, 3), Z)))) < 1e-12


def test_remainder_order_zero_is_f():
    f = ex.parse("1/(2 - z1)")
    Z = np.array([[0.3, 0.1]])
    assert remainder_integral(f, majima(2), (0, 0), Z) == pytest.approx(ex.eval_array(f, Z))


def test_extraction_failures():
    S = _cone(majima(2))
    with pytest.raises(NonConvergent):
        extract_coefficients(ex.parse("1/z1"), S, {1}, (0, 0), [0.3])
    with pytest.raises(NoPreimage):
        extract_coefficients(ex.parse("z2"), S, {1}, (0, 0), [0.3, 0.1])


def test_verify_report_formats():
    fam = majima(2)
    f = ex.parse("exp(z1 + z2)")
    F = taylor_family(f, fam, (2, 2))
    rep = verify_developable(f, F, _cone(fam, R=0.5), [(1, 1), (2, 2)], count=300, seed=3)
    assert [r.N for r in rep.records] == [(1, 1), (2, 2)]
    assert not any(r.flagged for r in rep.records)
    rows = list(csv.reader(io.StringIO(rep.to_csv())))
    assert rows[0] == ["N", "sup_ratio", "argmax", "shrink_ratio", "flagged"]
    assert len(rows) == 3
    again = verify_developable(f, F, _cone(fam, R=0.5), [(1, 1), (2, 2)], count=300, seed=3)
    assert again.to_json() == rep.to_json()


def test_wrong_coefficients_flagged():
    fam = majima(2)
    f = ex.parse("exp(z1 + z2)")
    rep = verify_developable(f, zero_family(fam, (2, 2)), _cone(fam, R=0.5), [(2, 2)], count=300, seed=3)
    assert rep.records[0].flagged


def test_consistency_of_taylor_family():
    F = taylor_family(ex.parse("exp(z1)*(1 + z2^2)"), TAK2, (2, 3))
    assert consistency_check(F, _cone(TAK2, R=0.5), count=200).consistent
