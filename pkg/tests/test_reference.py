from __future__ import annotations

import re

import pytest

from fkcable import reference
from fkcable.laurent import LaurentPoly
from fkcable.reference import GOLDEN_NAMES, Oracle, check_golden, golden_poly, load_golden, verify_goldens


@pytest.fixture(scope="module")
def oracle(fk_result):
    return Oracle(fk_result=fk_result)


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_golden_file_shape(name):
    g = load_golden(name)
    assert g["name"] == name
    assert g["kind"] == "laurent"
    assert g["description"]
    p = golden_poly(name)
    assert p.to_json_obj() == LaurentPoly.from_json_obj(g["value"]).to_json_obj()
    # Canonical form on disk: terms sorted by exponent vector.
    exps = [t["e"] for t in g["value"]["terms"]]
    assert exps == sorted(exps)


@pytest.mark.parametrize("name", GOLDEN_NAMES)
def test_descriptions_are_self_contained(name):
    assert not re.search(r"(?i)\b(eq|section|appendix|§)", load_golden(name)["description"])


def test_all_goldens_verify(oracle):
    checks = verify_goldens(oracle=oracle)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]
    exact = [c.name for c in checks if c.detail == "exact match"]
    assert set(exact) == set(GOLDEN_NAMES) - {"hbar_table"}


def test_hbar_erratum_is_confirmed(oracle):
    c = check_golden("hbar_table", oracle)
    assert c.passed and len(c.errata) == 2
    assert "31203/2" in c.errata[0]


def test_tampered_golden_fails(oracle, monkeypatch):
    real = reference.golden_poly

    def tampered(name):
        p = real(name)
        return p + LaurentPoly.monomial({"x": 1}) if name == "alexander_cable_9_2" else p

    monkeypatch.setattr(reference, "golden_poly", tampered)
    assert not check_golden("alexander_cable_9_2", oracle).passed


def test_unconfirmed_erratum_fails(oracle, monkeypatch):
    monkeypatch.setattr(reference, "_confirm_erratum", lambda *a: False)
    assert not check_golden("hbar_table", oracle).passed
