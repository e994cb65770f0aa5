from __future__ import annotations

import pytest
from gmpy2 import mpq

from fkcable.jones import (
    FIG8,
    UNKNOT,
    DegreeBoundViolated,
    InvalidCableParam,
    InvalidColor,
    Knot,
    cable,
    cable_jones,
    cable_jones_unnorm,
    colored_jones,
    fig8_jones,
    mmr_fit,
    quantum_integer,
    unknot_jones,
)
from fkcable.laurent import LaurentPoly, parse

q = LaurentPoly.var("q")


def test_quantum_integer():
    assert quantum_integer(1) == 1
    assert quantum_integer(3) == q + 1 + q**-1
    assert quantum_integer(2) == parse("q^(1/2) + q^(-1/2)")


def test_unknot_in_t():
    assert unknot_jones(1) == 1
    assert unknot_jones(3).substitute("t", parse("q^(1/4)")) == quantum_integer(3)


def test_fig8_low_colors():
    assert fig8_jones(1) == 1
    assert fig8_jones(2) == parse("q^2 - q + 1 - q^-1 + q^-2")


def test_fig8_amphichiral():
    for n in range(1, 6):
        assert fig8_jones(n) == fig8_jones(n).invert_var("q")


def test_normalized_values_at_one():
    for n in range(1, 5):
        assert cable_jones(9, n).evaluate({"q": 1}) == 1
        assert fig8_jones(n).evaluate({"q": 1}) == 1


def test_unnormalized_carries_unknot_factor():
    for n in (2, 3):
        assert cable_jones_unnorm(9, n) == cable_jones(9, n) * quantum_integer(n)


def test_cable_first_colors():
    assert cable_jones(9, 1) == 1
    assert len(cable_jones(9, 2).terms) == 9
    # The degree-3 value has 32 terms; integrality is automatic.
    j3 = cable_jones(9, 3)
    assert len(j3.terms) == 32
    assert j3.is_integral()


def test_mirror_cable():
    # r -> -r mirrors the cable; the figure-eight companion is amphichiral.
    for n in (2, 3):
        assert cable_jones(-9, n) == cable_jones(9, n).invert_var("q")


def test_colored_jones_dispatch():
    assert colored_jones(UNKNOT, 4).value == 1
    assert colored_jones(UNKNOT, 2, normalized=False).value == quantum_integer(2)
    assert colored_jones(FIG8, 2).value == fig8_jones(2)
    assert colored_jones(cable(9), 2).value == cable_jones(9, 2)


@pytest.mark.parametrize("r", [7, 8, 10, -3, 1])
def test_cable_domain(r):
    with pytest.raises(InvalidCableParam):
        Knot("cable", r)
    with pytest.raises(InvalidCableParam):
        cable_jones(r, 2)


@pytest.mark.parametrize("n", [0, -1, 2.5])
def test_color_domain(n):
    with pytest.raises(InvalidColor):
        fig8_jones(n)


class TestMmrFit:
    def test_series_matches_exact(self):
        a = mmr_fit(9, 5, method="series")
        b = mmr_fit(9, 5, method="exact")
        assert a.polys == b.polys

    def test_low_orders(self, fit8):
        n = LaurentPoly.var("n")
        assert fit8.polys[0] == 1
        assert fit8.polys[1].is_zero()
        assert fit8.polys[2] == 6 - 6 * n**2
        assert fit8.polys[3] == 42 * n**2 - 42
        assert fit8.polys[4] == mpq(801, 2) - 462 * n**2 + mpq(123, 2) * n**4

    def test_degree_bound_with_odd_deficit(self, fit8):
        for r, p in enumerate(fit8.polys):
            if p.is_zero():
                continue
            d = p.degree("n")
            assert d <= r
            if r % 2:
                assert d <= r - 1
            # Only even powers of n appear.
            assert all(e[0] % 8 == 0 for e in p.terms)

    def test_fit_reproduces_samples(self, fit8):
        for nn in (2, 3):
            s = cable_jones(9, nn).hbar_expand(8)
            for r in range(9):
                assert fit8.evaluate(r, nn) == s[r]

    def test_degree_violation_detected(self, monkeypatch):
        import fkcable.jones as jones

        real = jones.cable_jones_hbar

        def perturbed(r, n_max, order):
            data = real(r, n_max, order)
            data[n_max][2] += 1
            return data

        monkeypatch.setattr(jones, "cable_jones_hbar", perturbed)
        with pytest.raises(DegreeBoundViolated):
            jones.mmr_fit(9, 3)

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            mmr_fit(9, 4, N=3)
