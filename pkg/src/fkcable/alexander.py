"""Symmetrized Alexander polynomials and the symmetric expansion of
``(x^{1/2} - x^{-1/2}) / Δ(x)``.

Torus parameters follow the usual order: ``alexander_cable(2, 9, ...)`` is
the (9, 2)-cable in the colored Jones convention (pattern winding 2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from gmpy2 import mpq

from .laurent import LaurentPoly, series_divide


class NotCoprime(ValueError):
    pass


class ConstraintViolated(ValueError):
    pass


class NonMonic(ArithmeticError):
    """Leading coefficient is not ±1, so the expansion is not integral."""


def _m(var: str, e) -> LaurentPoly:
    return LaurentPoly.monomial({var: e})


@dataclass(frozen=True)
class AlexanderPoly:
    knot: str
    value: LaurentPoly
    var: str = "t"

    def is_palindromic(self) -> bool:
        return self.value == self.value.invert_var(self.var)

    def at_one(self) -> mpq:
        return self.value.evaluate({self.var: 1})

    def leading_coefficient(self) -> mpq:
        return self.value.coeff({self.var: self.value.degree(self.var)})

    def is_monic(self) -> bool:
        return abs(self.leading_coefficient()) == 1

    def in_var(self, var: str) -> "AlexanderPoly":
        if var == self.var:
            return self
        return AlexanderPoly(self.knot, self.value.substitute(self.var, LaurentPoly.var(var)), var)


def alexander_unknot() -> AlexanderPoly:
    return AlexanderPoly("unknot", LaurentPoly.const(1, ("t",)))


def alexander_fig8() -> AlexanderPoly:
    """Stored constant ``-t + 3 - t^-1``; checked through the cable product."""
    return AlexanderPoly("fig8", -_m("t", 1) + 3 - _m("t", -1))


def alexander_torus(p: int, q: int) -> AlexanderPoly:
    """``(t^{pq/2} - t^{-pq/2})(t^{1/2} - t^{-1/2}) / ((t^{p/2} - t^{-p/2})(t^{q/2} - t^{-q/2}))``.

    >>> alexander_torus(2, 3).value.to_str()
    't - 1 + t^-1'
    """
    p, q = abs(p), abs(q)
    if gcd(p, q) != 1:
        raise NotCoprime(f"torus parameters ({p}, {q}) are not coprime")
    if p < 2 or q < 2:
        raise ConstraintViolated("torus parameters need |p|, |q| >= 2")

    def sym(k):
        return _m("t", Fraction(k, 2)) - _m("t", -Fraction(k, 2))

    value = (sym(p * q) * sym(1)).divide_exact(sym(p) * sym(q))
    return AlexanderPoly(f"T({p},{q})", value)


def alexander_cable(p: int, q: int, companion: AlexanderPoly) -> AlexanderPoly:
    """``Δ_K(t^p) * Δ_{T(p,q)}(t)`` for ``2 <= p < |q|``, coprime."""
    if not (2 <= p < abs(q)) or gcd(p, q) != 1:
        raise ConstraintViolated(f"cable needs 2 <= p < |q| and gcd = 1, got ({p}, {q})")
    comp = companion.in_var("t")
    value = comp.value.substitute("t", _m("t", p)) * alexander_torus(p, q).value
    return AlexanderPoly(f"C({p},{q})({companion.knot})", value)


@dataclass(frozen=True)
class SymmetricExpansion:
    """Twice the average of the expansions at 0 and infinity, through ``|m| <= m_max``.

    ``coefficients[m]`` is the coefficient of ``x^{m/2}`` for odd ``m > 0``;
    the coefficient of ``x^{-m/2}`` is its negative.
    """

    coefficients: dict[int, mpq]
    m_max: int
    series: LaurentPoly

    def nonzero(self) -> dict[int, mpq]:
        return {m: c for m, c in self.coefficients.items() if c}


def symmetric_expand(numer: LaurentPoly, denom: LaurentPoly, bound, var: str = "x") -> LaurentPoly:
    """Average of the expansions of ``numer/denom`` at 0 and at infinity.

    Exact for every exponent in ``[-bound, bound]``.
    """
    e0 = series_divide(numer, denom, "at_zero", var=var, upto=bound)
    einf = series_divide(numer, denom, "at_infinity", var=var, upto=-Fraction(bound))
    both = e0 + einf
    keep = {e: c / 2 for e, c in both.terms.items() if abs(Fraction(e[0], 4)) <= Fraction(bound)}
    return LaurentPoly(both.vars, keep)


def symmetric_expansion(delta: AlexanderPoly, m_max: int) -> SymmetricExpansion:
    """``2 * s.e.((x^{1/2} - x^{-1/2}) / Δ(x))`` for odd ``m <= m_max``."""
    if not delta.is_monic():
        raise NonMonic(f"leading coefficient {delta.leading_coefficient()} is not ±1")
    d = delta.in_var("x").value
    numer = _m("x", Fraction(1, 2)) - _m("x", -Fraction(1, 2))
    series = symmetric_expand(numer, d, Fraction(m_max, 2)) * 2
    coeffs = {m: series.coeff({"x": Fraction(m, 2)}) for m in range(1, m_max + 1, 2)}
    return SymmetricExpansion(coeffs, m_max, series)
