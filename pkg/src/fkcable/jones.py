"""Colored Jones polynomials of the unknot, the figure-eight knot and its
(r, 2)-cables, and the fit of their ħ-expansion to polynomials in the color.

Conventions: ``q = t**4`` and quantum integers are
``[n] = (q^{n/2} - q^{-n/2}) / (q^{1/2} - q^{-1/2})``.  Unnormalized values
carry the unknot factor ``[n]``; normalized values are divided by it, so the
normalized value at ``n = 1`` is 1.  The companion figure-eight is 0-framed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial

from gmpy2 import mpq, mpz

from .laurent import LaurentPoly
from .linalg import interpolate


class InvalidColor(ValueError):
    pass


class InvalidCableParam(ValueError):
    pass


class DegreeBoundViolated(ArithmeticError):
    """Fitted ħ-coefficient is not a polynomial of degree ≤ r in the color."""


@dataclass(frozen=True)
class Knot:
    """Knot descriptor: ``unknot``, ``fig8`` or ``cable`` (an (r, 2)-cable of fig8)."""

    kind: str
    r: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("unknot", "fig8", "cable"):
            raise ValueError(f"unknown knot kind {self.kind!r}")
        if self.kind == "cable":
            _check_cable(self.r)

    def __str__(self) -> str:
        return f"cable({self.r},2,fig8)" if self.kind == "cable" else self.kind


UNKNOT = Knot("unknot")
FIG8 = Knot("fig8")


def cable(r: int) -> Knot:
    return Knot("cable", r)


@dataclass(frozen=True)
class ColoredJones:
    knot: Knot
    n: int
    normalized: bool
    value: LaurentPoly


def _check_color(n: int) -> None:
    if not isinstance(n, int) or n < 1:
        raise InvalidColor(f"color must be an integer >= 1, got {n!r}")


def _check_cable(r) -> None:
    if not isinstance(r, int) or r % 2 == 0 or abs(r) <= 8:
        raise InvalidCableParam(f"cable parameter must be odd with |r| > 8, got {r!r}")


def _q(e) -> LaurentPoly:
    return LaurentPoly.monomial({"q": e})


def _t(e) -> LaurentPoly:
    return LaurentPoly.monomial({"t": e})


def unknot_jones(n: int) -> LaurentPoly:
    """``(t^{2n} - t^{-2n}) / (t^2 - t^{-2})`` by exact division.

    >>> unknot_jones(2).to_str()
    't^2 + t^-2'
    """
    _check_color(n)
    return (_t(2 * n) - _t(-2 * n)).divide_exact(_t(2) - _t(-2))


def quantum_integer(n: int) -> LaurentPoly:
    """``[n]`` as a polynomial in q (half-integer exponents for even n)."""
    return unknot_jones(n).substitute("t", _q(Fraction(1, 4)))


def _fig8_normalized(n: int) -> LaurentPoly:
    a = _q(n) + _q(-n)
    total = LaurentPoly.const(1, ("q",))
    prod = LaurentPoly.const(1, ("q",))
    for k in range(1, n):
        prod = prod * (a - _q(k) - _q(-k))
        total = total + prod
    return total


def fig8_jones_unnorm(n: int) -> LaurentPoly:
    """``[n] * sum_{k<n} prod_{j<=k} (q^n + q^-n - q^j - q^-j)``."""
    _check_color(n)
    return quantum_integer(n) * _fig8_normalized(n)


def fig8_jones(n: int) -> LaurentPoly:
    _check_color(n)
    return _fig8_normalized(n)


def cable_jones_unnorm(r: int, n: int) -> LaurentPoly:
    """Unnormalized colored Jones of the (r, 2)-cable of the figure-eight."""
    _check_cable(r)
    _check_color(n)
    total = LaurentPoly(("q",))
    for w in range(1, n + 1):
        sign = -1 if (r * (n - w)) % 2 else 1
        total = total + _q(Fraction(r * w * (w - 1), 2)) * fig8_jones_unnorm(2 * w - 1) * sign
    return total * _q(-Fraction(r * (n * n - 1), 2))


def cable_jones(r: int, n: int) -> LaurentPoly:
    return cable_jones_unnorm(r, n).divide_exact(quantum_integer(n))


def colored_jones(knot: Knot, n: int, normalized: bool = True) -> ColoredJones:
    if knot.kind == "unknot":
        value = LaurentPoly.const(1, ("q",)) if normalized else quantum_integer(n)
    elif knot.kind == "fig8":
        value = fig8_jones(n) if normalized else fig8_jones_unnorm(n)
    else:
        value = cable_jones(knot.r, n) if normalized else cable_jones_unnorm(knot.r, n)
    return ColoredJones(knot, n, normalized, value)


# ---------------------------------------------------------------------------
# ħ-expansion and fit in n


def _smul(a: list, b: list, L: int) -> list:
    out = [mpq(0)] * L
    for i in range(min(len(a), L)):
        ai = a[i]
        if not ai:
            continue
        for j in range(min(len(b), L - i)):
            if b[j]:
                out[i + j] += ai * b[j]
    return out


def _sexp(c, L: int) -> list:
    """``exp(c*h)`` through ``h^(L-1)``."""
    c = mpq(c)
    return [c**k / factorial(k) for k in range(L)]


def _s2sinh(c, L: int) -> list:
    """``exp(c*h) - exp(-c*h)``."""
    c = mpq(c)
    return [mpq(2) * c**k / factorial(k) if k % 2 else mpq(0) for k in range(L)]


def _fig8_series(c: int, L: int) -> list:
    """Normalized figure-eight at color c, ``q = e^h``, through ``h^(L-1)``.

    The k-th factor is ``O(h^2)``, so only ``k < L/2`` contributes.
    """
    H = (L + 1) // 2
    total = [mpq(0)] * H
    total[0] = mpq(1)
    prod = [mpq(1)] + [mpq(0)] * (H - 1)
    c2 = mpz(c) ** 2
    for k in range(1, min(c, H)):
        k2 = mpz(k) ** 2
        fac = [mpq(0)] + [mpq(2 * (c2**s - k2**s), factorial(2 * s)) for s in range(1, H)]
        prod = _smul(prod, fac, H)
        total = [a + b for a, b in zip(total, prod)]
    full = [mpq(0)] * L
    for i in range(H):
        if 2 * i < L:
            full[2 * i] = total[i]
    return full


def cable_jones_hbar(r: int, n_max: int, order: int) -> dict[int, list[mpq]]:
    """ħ-coefficients of the normalized cable value at ``q = e^h`` for n ≤ n_max.

    Uses the recursion ``U_n = A_n - U_{n-1}`` of the cabling sum in the
    power-series ring, so no colored Jones polynomial is ever expanded.
    """
    _check_cable(r)
    L = order + 2
    out: dict[int, list[mpq]] = {}
    U = [mpq(0)] * L
    for n in range(1, n_max + 1):
        w = n
        A = _smul(_smul(_sexp(mpq(r * w * (w - 1), 2), L), _s2sinh(mpq(2 * w - 1, 2), L), L),
                  _fig8_series(2 * w - 1, L), L)
        # The sign (-1)^{r(n-w)} is absorbed by alternating U.
        U = [a - u for a, u in zip(A, U)]
        num = _smul(_sexp(-mpq(r * (n * n - 1), 2), L), U, L)
        den = _s2sinh(mpq(n, 2), L)
        # Both start at h^1; divide the shifted series.
        a, d = num[1:], den[1:]
        quo: list[mpq] = []
        for i in range(L - 1):
            v = a[i] - sum(quo[k] * d[i - k] for k in range(i) if d[i - k])
            quo.append(v / d[0])
        out[n] = quo[: order + 1]
    return out


@dataclass
class MmrFit:
    """Per ħ-order r, the coefficient of ``h^r`` as a polynomial in the color n."""

    order: int
    polys: list[LaurentPoly] = field(default_factory=list)
    samples: int = 0

    def coefficient(self, r: int, k: int) -> mpq:
        return self.polys[r].coeff({"n": k})

    def evaluate(self, r: int, n: int) -> mpq:
        return self.polys[r].evaluate({"n": n})


def mmr_fit(r_cable: int = 9, R: int = 8, N: int | None = None, method: str = "series") -> MmrFit:
    """Fit each ħ-coefficient of ``J_{K,n}(e^h)`` by a polynomial in n.

    ``method="exact"`` expands the exact colored Jones polynomials;
    ``"series"`` works in the power-series ring directly and is much faster.
    Samples beyond the first ``R + 1`` must agree with the fit.
    """
    if N is None:
        N = R + 3
    if N < R + 1:
        raise ValueError(f"need N >= R + 1 samples, got N={N}, R={R}")
    if method == "exact":
        data = {n: list(cable_jones(r_cable, n).hbar_expand(R).coeffs) for n in range(1, N + 1)}
    elif method == "series":
        data = cable_jones_hbar(r_cable, N, R)
    else:
        raise ValueError(f"unknown method {method!r}")
    polys = []
    for r in range(R + 1):
        coeffs = interpolate(list(range(1, N + 1)), [data[n][r] for n in range(1, N + 1)])
        bad = [k for k in range(r + 1, len(coeffs)) if coeffs[k]]
        if bad:
            raise DegreeBoundViolated(f"order h^{r} has n-degree {max(bad)} > {r}")
        polys.append(LaurentPoly.from_univariate("n", {k: c for k, c in enumerate(coeffs[: r + 1])}))
    return MmrFit(R, polys, N)
