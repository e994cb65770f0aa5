"""Quantum torus operators and the recursions of the (r, 2)-cable of the
figure-eight knot.

An operator ``sum_j a_j(t, M) L^j`` acts on a sequence ``f(n)`` by
``(A f)(n) = sum_j a_j(t, t^{2n}) f(n + j)``, so ``L M = t^2 M L``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping

import flint
from gmpy2 import mpq

from .jones import InvalidCableParam, _check_cable, cable_jones_unnorm
from .laurent import LaurentPoly, RationalFunction, from_mpoly, to_mpoly

log = logging.getLogger(__name__)

Coeff = RationalFunction | LaurentPoly | int


class LeadingCoefficientZero(ArithmeticError):
    pass


class InconsistentSymmetry(ArithmeticError):
    """The recursion is not compatible with ``F(1/x) = -F(x)``."""


class AnnihilationFailed(ArithmeticError):
    pass


def tm(a, b=0) -> LaurentPoly:
    """The monomial ``t^a M^b``."""
    return LaurentPoly.monomial({"t": a, "M": b})


class TorusOperator:
    """Finite sum ``sum_j a_j(t, M) L^j`` with rational-function coefficients."""

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[int, Coeff] | None = None):
        out = {}
        for j, a in (terms or {}).items():
            a = RationalFunction.of(a if not isinstance(a, int) else LaurentPoly.const(a))
            if not a.is_zero():
                out[int(j)] = a
        self.terms = dict(sorted(out.items()))

    @classmethod
    def L(cls, k: int = 1) -> "TorusOperator":
        return cls({k: 1})

    @classmethod
    def M(cls, k: int = 1) -> "TorusOperator":
        return cls({0: tm(0, k)})

    @classmethod
    def scalar(cls, a: Coeff) -> "TorusOperator":
        return cls({0: a})

    @classmethod
    def of(cls, x) -> "TorusOperator":
        return x if isinstance(x, TorusOperator) else cls.scalar(x)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int | None:
        return max(self.terms) if self.terms else None

    def low_degree(self) -> int | None:
        return min(self.terms) if self.terms else None

    def coefficient(self, j: int) -> RationalFunction:
        return self.terms.get(j, RationalFunction(0))

    def __add__(self, other) -> "TorusOperator":
        o = TorusOperator.of(other)
        out = dict(self.terms)
        for j, a in o.terms.items():
            out[j] = out[j] + a if j in out else a
        return TorusOperator(out)

    __radd__ = __add__

    def __neg__(self) -> "TorusOperator":
        return TorusOperator({j: -a for j, a in self.terms.items()})

    def __sub__(self, other) -> "TorusOperator":
        return self + (-TorusOperator.of(other))

    def __rsub__(self, other) -> "TorusOperator":
        return TorusOperator.of(other) - self

    def __mul__(self, other) -> "TorusOperator":
        """``(a L^i)(b L^j) = a * b(t^{2i} M) L^{i+j}``."""
        o = TorusOperator.of(other)
        out: dict[int, RationalFunction] = {}
        for i, a in self.terms.items():
            for j, b in o.terms.items():
                v = a * (b.substitute("M", tm(2 * i, 1)) if i else b)
                out[i + j] = out[i + j] + v if i + j in out else v
        return TorusOperator(out)

    def __rmul__(self, other) -> "TorusOperator":
        return TorusOperator.of(other) * self

    def __eq__(self, other) -> bool:
        o = TorusOperator.of(other)
        keys = set(self.terms) | set(o.terms)
        return all(self.coefficient(j) == o.coefficient(j) for j in keys)

    __hash__ = None

    def has_common_denominator(self) -> bool:
        dens = [a.denom for a in self.terms.values()]
        return all(d == dens[0] for d in dens[1:])

    def apply(self, seq: Callable[[int], LaurentPoly], n: int) -> RationalFunction:
        """``(A f)(n)`` with ``M = t^{2n}``."""
        Mn = LaurentPoly.monomial({"t": 2 * n})
        if self.is_zero():
            return RationalFunction(0)
        if self.has_common_denominator():
            den = next(iter(self.terms.values())).denom.substitute("M", Mn)
            num = LaurentPoly(("t",))
            for j, a in self.terms.items():
                num = num + a.numer.substitute("M", Mn) * seq(n + j)
            return RationalFunction(num, den)
        total = RationalFunction(0)
        for j, a in self.terms.items():
            total = total + a.substitute("M", Mn) * seq(n + j)
        return total

    def __repr__(self) -> str:
        return "TorusOperator(" + " + ".join(f"[{a!r}]*L^{j}" for j, a in self.terms.items()) + ")"


def op_multiply(a: TorusOperator, b: TorusOperator) -> TorusOperator:
    return a * b


# ---------------------------------------------------------------------------
# Companion (figure-eight) data and the Â-polynomial


def _at(p: LaurentPoly, k: int) -> LaurentPoly:
    """``p(t, t^k M^2)``."""
    return p.substitute("M", tm(k, 2))


@dataclass(frozen=True)
class CompanionRecursion:
    """``P2(M) J(n+2) + P1(M) J(n+1) + P0(M) J(n) = b(M)`` for the unnormalized
    figure-eight colored Jones ``J(n)`` with ``M = t^{2n}``."""

    P0: LaurentPoly
    P1: LaurentPoly
    P2: LaurentPoly
    b: RationalFunction


def fig8_companion(p1_variant: str = "dedup") -> CompanionRecursion:
    """The three-term inhomogeneous recursion of the figure-eight.

    ``p1_variant="doubled"`` keeps a doubled ``-t^12 M^4`` term in the
    sextic factor of ``P1``; ``"dedup"`` has it once.
    """
    if p1_variant not in ("doubled", "dedup"):
        raise ValueError(f"unknown P1 variant {p1_variant!r}")
    P0 = tm(6, 4) * (-1 + tm(12, 4))
    P2 = tm(10, 4) * (-1 + tm(4, 4))
    sextic = 1 - tm(4, 2) - tm(4, 4) - tm(12, 4) - tm(12, 6) + tm(16, 8)
    if p1_variant == "doubled":
        sextic = sextic - tm(12, 4)
    P1 = -(-1 + tm(4, 2)) * (1 + tm(4, 2)) * sextic
    bnum = tm(0, 1) * (1 + tm(4, 2)) * (-1 + tm(4, 4)) * (-tm(2, 0) + tm(14, 4))
    return CompanionRecursion(P0, P1, P2, RationalFunction(bnum, tm(2) - tm(-2)))


@dataclass
class AhatBundle:
    r: int
    companion: CompanionRecursion
    c: tuple[LaurentPoly, LaurentPoly, LaurentPoly]
    B: RationalFunction
    Q: tuple[LaurentPoly, LaurentPoly, LaurentPoly]
    Qop: TorusOperator
    ahat: TorusOperator
    variant: dict[str, str] = field(default_factory=dict)

    @property
    def P(self) -> tuple[LaurentPoly, LaurentPoly, LaurentPoly]:
        return (self.companion.P0, self.companion.P1, self.companion.P2)


def odd_color_recursion(comp: CompanionRecursion):
    """Eliminate the even colors from the companion recursion at colors
    ``2n+1, 2n+2, 2n+3``.

    Returns ``(c, Q, B)`` with ``Q2 g(n+2) + Q1 g(n+1) + Q0 g(n) = B`` for
    ``g(n) = J(2n+1)``, where ``B = sum_j c_j b(t, t^{2j+2} M^2)``.
    """
    P0, P1, P2 = comp.P0, comp.P1, comp.P2
    c0 = _at(P0, 4) * _at(P1, 6)
    c1 = -_at(P1, 2) * _at(P1, 6)
    c2 = _at(P1, 2) * _at(P2, 4)
    Q2 = c2 * _at(P2, 6)
    Q1 = c0 * _at(P2, 2) + c1 * _at(P1, 4) + c2 * _at(P0, 6)
    Q0 = c0 * _at(P0, 2)
    B = sum(
        (RationalFunction(cj) * comp.b.substitute("M", tm(2 * j + 2, 2)) for j, cj in enumerate((c0, c1, c2))),
        RationalFunction(0),
    )
    return (c0, c1, c2), (Q0, Q1, Q2), B


def tabulated_Q(comp: CompanionRecursion) -> tuple[LaurentPoly, LaurentPoly, LaurentPoly]:
    """``Q0, Q1, Q2`` exactly as tabulated."""
    P0, P1, P2 = comp.P0, comp.P1, comp.P2
    Q2 = _at(P2, 4) * _at(P1, 2) * _at(P0, 6)
    Q1 = _at(P0, 4) * _at(P1, 6) * _at(P2, 2) - _at(P1, 6) * _at(P1, 2) * _at(P1, 4) + _at(P2, 4) * _at(P1, 2) * _at(P0, 6)
    Q0 = _at(P0, 4) * _at(P1, 6) * _at(P0, 2)
    return Q0, Q1, Q2


def build_ahat(r: int = 9, p1_variant: str = "dedup", q_source: str = "elimination") -> AhatBundle:
    """``(L - 1) B^{-1} Q (M^r L + t^{-2r} M^{-r})`` multiplied in the written order.

    ``q_source`` selects ``Q`` from the elimination (``"elimination"``) or
    from the tabulated form (``"tabulated"``); both agree except in ``Q2``.
    """
    _check_cable(r)
    comp = fig8_companion(p1_variant)
    c, Qe, B = odd_color_recursion(comp)
    if q_source not in ("elimination", "tabulated"):
        raise ValueError(f"unknown Q source {q_source!r}")
    Q = Qe if q_source == "elimination" else tabulated_Q(comp)
    Qop = TorusOperator({0: Q[0], 1: Q[1], 2: Q[2]})
    left = TorusOperator({1: 1, 0: -1}) * TorusOperator.scalar(B.inverse())
    right = TorusOperator({1: tm(0, r), 0: tm(-2 * r, -r)})
    ahat = left * Qop * right
    return AhatBundle(r, comp, c, B, Q, Qop, ahat, {"P1": p1_variant, "Q": q_source})


def verify_annihilation(bundle: AhatBundle, n_max: int = 8, n_min: int = 1, stop_early: bool = False) -> dict[int, bool]:
    """Apply Â to the unnormalized cable colored Jones at ``n_min..n_max``."""
    cache: dict[int, LaurentPoly] = {}

    def seq(n: int) -> LaurentPoly:
        if n not in cache:
            cache[n] = cable_jones_unnorm(bundle.r, n).substitute("q", tm(4))
        return cache[n]

    out = {}
    for n in range(n_min, n_max + 1):
        out[n] = bundle.ahat.apply(seq, n).is_zero()
        if stop_early and not out[n]:
            break
    return out


@dataclass
class Resolution:
    bundle: AhatBundle
    attempts: list[tuple[dict[str, str], bool]]


def resolve_ahat(r: int = 9, n_max: int = 8) -> Resolution:
    """Try the tabulated operator first, then the corrected variants, and keep
    the first that annihilates the colored Jones sequence for ``n <= n_max``.

    Every attempt is logged and returned.
    """
    attempts = []
    for p1 in ("doubled", "dedup"):
        for qs in ("tabulated", "elimination"):
            bundle = build_ahat(r, p1, qs)
            res = verify_annihilation(bundle, n_max, stop_early=True)
            ok = len(res) == n_max and all(res.values())
            attempts.append((dict(bundle.variant), ok))
            log.info("Ahat variant P1=%s Q=%s: %s", p1, qs, "annihilates" if ok else "fails")
            if ok:
                return Resolution(bundle, attempts)
    raise AnnihilationFailed(f"no operator variant annihilates the colored Jones sequence: {attempts}")


# ---------------------------------------------------------------------------
# (x, q) recursion

_TQ = {"t": LaurentPoly.monomial({"q": Fraction(1, 4)}), "M": LaurentPoly.monomial({"x": Fraction(1, 2)})}


def _mpoly_gcd(polys: list[LaurentPoly]) -> LaurentPoly:
    vars = polys[0].vars
    nv = len(vars)
    steps = []
    for i in range(nv):
        s = 0
        for p in polys:
            lo = min(e[i] for e in p.terms)
            for e in p.terms:
                s = math.gcd(s, e[i] - lo)
        steps.append(s or 1)
    g = None
    for p in polys:
        low = [min(e[i] for e in p.terms) for i in range(nv)]
        f = to_mpoly(p, low, steps)
        g = f if g is None else g.gcd(f)
    return from_mpoly(g, vars, [0] * nv, steps)


@dataclass
class XqRecursion:
    """``alpha F(x) + beta F(xq) + gamma F(xq^2) + delta F(xq^3) + F(xq^4) = 0``.

    ``relation`` holds the same equation with denominators cleared, the
    common polynomial factor removed and the q-valuation normalized to 0.
    """

    alpha: RationalFunction
    beta: RationalFunction
    gamma: RationalFunction
    delta: RationalFunction
    relation: tuple[LaurentPoly, ...]
    common_factor: LaurentPoly

    @property
    def coefficients(self) -> tuple[RationalFunction, ...]:
        return (self.alpha, self.beta, self.gamma, self.delta, RationalFunction(1))


def _clear(coeffs: list[RationalFunction]) -> list[LaurentPoly]:
    """Multiply through by the lcm of the denominators."""
    dens = [c.denom for c in coeffs]
    if all(d == dens[0] for d in dens[1:]):
        lcm = dens[0]
    else:
        lcm = dens[0]
        for d in dens[1:]:
            g = _mpoly_gcd([lcm, d])
            lcm = (lcm * d).divide_exact(g)
    return [c.numer * lcm.divide_exact(c.denom) for c in coeffs]


def _integer_primitive(polys: list[LaurentPoly]) -> list[LaurentPoly]:
    """Scale to coprime integer coefficients with a positive leading term."""
    den = 1
    num = 0
    for p in polys:
        for c in p.terms.values():
            den = den * int(c.denominator) // math.gcd(den, int(c.denominator))
    for p in polys:
        for c in p.terms.values():
            num = math.gcd(num, int(c * den))
    scale = mpq(den, num)
    top = polys[-1].terms[max(polys[-1].terms)]
    if top < 0:
        scale = -scale
    return [p.scale(scale) for p in polys]


def to_xq_recursion(bundle: AhatBundle) -> XqRecursion:
    op = bundle.ahat
    if op.degree() != 4 or op.low_degree() != 0:
        raise LeadingCoefficientZero(f"expected L-degrees 0..4, got {list(op.terms)}")
    C = [op.coefficient(j).substitute_many(_TQ) for j in range(5)]
    lead = C[4]
    if lead.is_zero():
        raise LeadingCoefficientZero("L^4 coefficient vanishes")
    normalized = [c / lead for c in C]
    cleared = _clear(normalized)
    g = _mpoly_gcd(cleared)
    reduced = [c.divide_exact(g) for c in cleared]
    # Make the relation a unit-free representative: q-valuation 0,
    # x-valuation 0 and positive lowest q coefficient of the L^0 part.
    qv = min(c.valuation("q") for c in reduced)
    xv = min(c.valuation("x") for c in reduced)
    shift = LaurentPoly.monomial({"q": -qv, "x": -xv})
    reduced = [(c * shift).embed(("q", "x")) for c in reduced]
    reduced = _integer_primitive(reduced)
    return XqRecursion(*normalized[:4], relation=tuple(reduced), common_factor=g)


# ---------------------------------------------------------------------------
# f_m recursion


@dataclass
class FmRecursion:
    """Relation among ``f_m`` obtained from the coefficient of ``x^{K/2}``.

    For the lowest index m (odd, via ``w = q^{m/2}``),
    ``sum_o taps[o](q, w) f_{m+o} = 0``; the top offset is ``span`` and
    ``f_{m+span} = prefactor * sum_{o < span} taps[o] f_{m+o}``.
    Indices are extended by ``f_{-m} = -f_m``.
    """

    span: int
    taps: dict[int, LaurentPoly]
    relation: tuple[LaurentPoly, ...]

    @property
    def offsets(self) -> list[int]:
        return sorted(self.taps, reverse=True)

    @property
    def lead(self) -> LaurentPoly:
        return self.taps[self.span]

    @property
    def prefactor(self) -> RationalFunction:
        return RationalFunction(-1, self.lead)

    def lower_taps(self) -> list[tuple[int, LaurentPoly]]:
        return [(o, t) for o, t in sorted(self.taps.items(), reverse=True) if o != self.span]

    def tap_at(self, offset: int, m: int) -> LaurentPoly:
        """Tap at ``offset`` for lowest index m, a Laurent polynomial in q."""
        return self.taps[offset].substitute("w", LaurentPoly.monomial({"q": Fraction(m, 2)})).embed(("q",))

    def residual(self, f: Callable[[int], LaurentPoly], m: int) -> LaurentPoly:
        total = LaurentPoly(("q",))
        for o in self.taps:
            v = f(m + o)
            if not v.is_zero():
                total = total + self.tap_at(o, m) * v
        return total


def extract_fm_recursion(rec: XqRecursion, check_symmetry: bool = True) -> FmRecursion:
    """Collect the x-powers of the recursion applied to ``sum_m f_m x^{m/2}``.

    A term ``c x^{a/2} q^b`` of the ``L^j`` coefficient meets ``f_k x^{k/2}``
    shifted by ``q^j``, giving ``c q^b q^{jk/2} f_k`` at ``x^{(a+k)/2}``.
    """
    if check_symmetry:
        check_antisymmetry(rec)
    # T_a(q, W) = sum_j sum_b c q^b W^j, keyed by the x-exponent a (half units).
    raw: dict[int, dict[tuple[int, int], mpq]] = {}
    for j, C in enumerate(rec.relation):
        iq, ix = C.vars.index("q"), C.vars.index("x")
        for e, c in C.terms.items():
            a = e[ix] // 2  # lattice numerator of x^{a/2}
            d = raw.setdefault(a, {})
            k = (e[iq], j)
            d[k] = d.get(k, 0) + c
    amin, amax = min(raw), max(raw)
    span = amax - amin
    taps = {}
    for a, d in raw.items():
        o = amax - a  # f index is lowest index + offset
        # W = q^{(m+o)/2} = w q^{o/2}
        terms = {}
        for (qe, j), c in d.items():
            key = (qe + j * o * 2, j * 4)
            terms[key] = terms.get(key, 0) + c
        tap = LaurentPoly(("q", "w"), terms)
        if not tap.is_zero():
            taps[o] = tap
    return FmRecursion(span, taps, rec.relation)


def check_antisymmetry(rec: XqRecursion) -> None:
    """``F(1/x) = -F(x)`` turns the relation into
    ``sum_j C_j(q^{-4}/x) F(x q^{4-j})``; it must be a multiple of the original."""
    C = rec.relation
    inv = LaurentPoly.monomial({"q": -4, "x": -1})
    mirrored = [c.substitute("x", inv) for c in C]
    # mirrored[j] pairs with C[4-j]: mirrored[j] * C[4] == mirrored[0] * C[4-j].
    for j in range(5):
        if mirrored[j] * C[4] != mirrored[0] * C[4 - j]:
            raise InconsistentSymmetry(f"mirrored L^{4 - j} coefficient is not proportional")
