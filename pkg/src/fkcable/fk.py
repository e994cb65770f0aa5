"""The F_K pipeline: MMR numerators P_r from the (x, q) recursion, initial
f_m from MMR matching, iteration of the f_m recursion, structural checks and
the ħ-table of ``2F(x, e^h)``.

Throughout, ``2F(x, q) = sum_{m odd > 0} (x^{m/2} - x^{-m/2}) f_m(q)`` with
``f_{-m} = -f_m``; the overall ½ is kept as metadata on :class:`FkSeries`.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Iterable, Mapping

from gmpy2 import mpq

from .alexander import AlexanderPoly, alexander_cable, alexander_fig8, symmetric_expand
from .jones import MmrFit, mmr_fit
from .laurent import LATTICE, LaurentPoly, NotDivisible
from .linalg import InconsistentSystem, UnderdeterminedSystem, solve_exact
from .qtorus import FmRecursion, XqRecursion, extract_fm_recursion, resolve_ahat, to_xq_recursion

log = logging.getLogger(__name__)


class NonIntegerSolution(ArithmeticError):
    pass


class SupportTooSmall(ArithmeticError):
    pass


class MissingSeed(ValueError):
    pass


class FrontierTooSmall(ValueError):
    pass


def _x(e) -> LaurentPoly:
    return LaurentPoly.monomial({"x": e})


def _half() -> LaurentPoly:
    return _x(Fraction(1, 2)) - _x(-Fraction(1, 2))


def _xpoly(p: LaurentPoly) -> LaurentPoly:
    return p.embed(("x",))


# ---------------------------------------------------------------------------
# MMR numerators


@dataclass
class MmrData:
    """``J_{K,n}(e^h) = sum_r P_r(x) h^r / Δ(x)^{2r+1}`` with ``x = e^{nh}``."""

    delta: LaurentPoly
    P: list[LaurentPoly]
    init: list[mpq] = field(default_factory=list)
    method: str = "ode"

    @property
    def order(self) -> int:
        return len(self.P) - 1


def boundary_values(fit: MmrFit) -> list[mpq]:
    """``P_r(1)``: the ``n^0`` coefficient of each fitted order."""
    return [fit.coefficient(r, 0) for r in range(fit.order + 1)]


def _delta_x(delta: AlexanderPoly | LaurentPoly) -> LaurentPoly:
    if isinstance(delta, AlexanderPoly):
        return _xpoly(delta.in_var("x").value)
    return _xpoly(delta)


def _hbar_layers(rec: XqRecursion, amax: int) -> list[list[LaurentPoly]]:
    """``C_j^{(a)}(x)``: the ``h^a`` coefficient of ``C_j(x, e^h)``."""
    layers = []
    for C in rec.relation:
        iq, ix = C.vars.index("q"), C.vars.index("x")
        rows: list[dict] = [{} for _ in range(amax + 1)]
        for e, c in C.terms.items():
            b = mpq(e[iq], LATTICE)
            k = (e[ix],)
            for a in range(amax + 1):
                v = c * b**a / factorial(a)
                if v:
                    rows[a][k] = rows[a].get(k, 0) + v
        layers.append([LaurentPoly(("x",), r) for r in rows])
    return layers


def solve_Pr(rec: XqRecursion, delta: AlexanderPoly | LaurentPoly, R: int, init: Mapping[int, mpq] | list) -> MmrData:
    """Solve the ħ-order ODEs of the recursion for ``P_1..P_R``.

    Substituting the MMR ansatz and ``F(x e^{jh}) = sum_b (jh)^b/b! θ^b F``,
    the coefficient of ``h^{r+1}`` (times ``Δ^{2r+2}``) is linear in ``P_r``
    and involves lower ``P_c`` through ``θ^b F_c = H_{c,b} / Δ^{2c+1+b}``.
    ``P_r`` is palindromic of degree ``12r``; ``P_r(1) = init[r]`` closes
    the system, which must have a unique solution.
    """
    D = _delta_x(delta)
    thD = D.theta("x")
    half = _half()
    Ca = _hbar_layers(rec, R + 1)
    zero = LaurentPoly(("x",))
    if not sum((Ca[j][0] for j in range(5)), zero).is_zero():
        raise InconsistentSystem("relation does not annihilate constants at h^0")
    K = {}
    for a in range(R + 2):
        for b in range(R + 2 - a):
            K[a, b] = sum((Ca[j][a].scale(mpq(j) ** b / factorial(b)) for j in range(5)), zero)
    c1 = K[1, 0]
    c0j = K[0, 1]
    P = [LaurentPoly.const(1, ("x",))]
    H: dict[int, list[LaurentPoly]] = {}

    def Hs(c: int, upto: int) -> list[LaurentPoly]:
        h = H.setdefault(c, [half * P[c]])
        while len(h) <= upto:
            b = len(h) - 1
            h.append(D * h[-1].theta("x") - h[-1] * thD * (2 * c + 1 + b))
        return h

    for r in range(1, R + 1):
        N = r + 1
        rhs = zero
        for c in range(r):
            h = Hs(c, N - c)
            # sum_b K[N-b-c, b] H_{c,b} Δ^{2(r-c)+1-b}, Horner in Δ over increasing b.
            acc = zero
            for b in range(0, N - c + 1):
                acc = acc * D + K[N - b - c, b] * h[b] if b else K[N - c, 0] * h[0]
            rhs = rhs + acc * D ** (r - c)
        A1 = c1 * D - c0j * thD * (2 * r + 1)
        A2 = c0j * D
        deg = 12 * r
        cols = []
        for k in range(deg + 1):
            col: dict[int, mpq] = {}
            exps = [(k * 4 + 2, 1), (k * 4 - 2, -1)]
            if k:
                exps += [(-k * 4 + 2, 1), (-k * 4 - 2, -1)]
            for e, s in exps:
                ev = mpq(e, LATTICE)
                for a1 in (A1, A2):
                    sc = s if a1 is A1 else s * ev
                    for (f,), v in a1.terms.items():
                        col[f + e] = col.get(f + e, 0) + sc * v
            cols.append(col)
        keys = sorted(set().union(*cols) | {e[0] for e in rhs.terms})
        rows = [[col.get(k, 0) for col in cols] for k in keys]
        b = [-rhs.terms.get((k,), 0) for k in keys]
        rows.append([1] + [2] * deg)
        b.append(init[r])
        sol = solve_exact(rows, b)
        terms = {(0,): sol[0]}
        for k in range(1, deg + 1):
            terms[(4 * k,)] = sol[k]
            terms[(-4 * k,)] = sol[k]
        P.append(LaurentPoly(("x",), terms))
        log.debug("P_%d solved (%d equations)", r, len(rows))
    return MmrData(D, P, [mpq(1)] + [mpq(init[r]) for r in range(1, R + 1)], "ode")


def solve_Pr_direct(fit: MmrFit, delta: AlexanderPoly | LaurentPoly, R: int) -> MmrData:
    """Determine ``P_r`` by matching the fitted ħ-expansion directly.

    With ``u = n h`` the ``h^{k+r} n^k`` coefficients give the u-series of
    ``P_r(e^u) / Δ(e^u)^{2r+1}``; multiplying by ``Δ(e^u)^{2r+1}`` and
    solving a Vandermonde system for a general Laurent polynomial of
    x-degree ``12r`` recovers ``P_r``.  No use is made of the recursion.
    """
    D = _delta_x(delta)
    P = [LaurentPoly.const(1, ("x",))]
    for r in range(1, R + 1):
        deg = 12 * r
        K = fit.order - r
        if K < 2 * deg + 2:
            raise UnderdeterminedSystem(f"fit order {fit.order} too low for P_{r} (need {25 * r + 2})")
        g = [fit.coefficient(k + r, k) for k in range(K + 1)]
        Dr = D ** (2 * r + 1)
        dser = [sum((c * mpq(e[0], LATTICE) ** s for e, c in Dr.terms.items()), mpq(0)) / factorial(s) for s in range(K + 1)]
        target = [sum((g[i] * dser[s - i] for i in range(s + 1)), mpq(0)) for s in range(K + 1)]
        nodes = list(range(-deg, deg + 1))
        rows = [[mpq(e) ** s / factorial(s) for e in nodes] for s in range(K + 1)]
        sol = solve_exact(rows, target)
        P.append(LaurentPoly(("x",), {(4 * e,): c for e, c in zip(nodes, sol)}))
    return MmrData(D, P, [p.evaluate({"x": 1}) for p in P], "direct")


def mmr_layers(mmr: MmrData, m_max: int) -> dict[int, list[mpq]]:
    """``c_{m,r}``: the ``x^{m/2}`` coefficient of ``2 s.e.((x^{1/2} - x^{-1/2}) P_r / Δ^{2r+1})``."""
    half = _half()
    bound = Fraction(m_max, 2)
    out: dict[int, list[mpq]] = {m: [] for m in range(1, m_max + 1, 2)}
    for r, Pr in enumerate(mmr.P):
        s = symmetric_expand(half * Pr, mmr.delta ** (2 * r + 1), bound) * 2
        for m in out:
            out[m].append(s.coeff({"x": Fraction(m, 2)}))
    return out


# ---------------------------------------------------------------------------
# Initial data from MMR matching


@dataclass
class InitialData:
    """MMR-matched ``f_m`` over a window of odd m.

    ``undetermined`` lists the m whose support is wider than the ħ-order
    allows (no window of width ``<= R - 1`` fits all orders).
    """

    fm: dict[int, LaurentPoly]
    widths: dict[int, int]
    undetermined: list[int]
    order: int


def _match_window(mu: list[mpq], lo: int, W: int) -> list[mpq] | None:
    """Coefficients on exponents ``lo..lo+W-1`` with moments ``mu``, or None."""
    # Moments of a measure on W consecutive points obey the recurrence with
    # characteristic polynomial prod (z - j); test that first.
    e = [mpq(1)]
    for j in range(lo, lo + W):
        e = [mpq(0)] + e
        for i in range(len(e) - 1):
            e[i] -= j * e[i + 1]
    for s in range(len(mu) - W):
        if sum((e[k] * mu[s + k] for k in range(W + 1)), mpq(0)):
            return None
    rows = [[mpq(j) ** r for j in range(lo, lo + W)] for r in range(len(mu))]
    try:
        return solve_exact(rows, mu)
    except (InconsistentSystem, UnderdeterminedSystem):
        return None


def match_fm(layers: list[mpq], max_width: int) -> LaurentPoly | None:
    """Smallest integer-exponent window polynomial with ``sum a_j j^r / r! = layers[r]``."""
    mu = [c * factorial(r) for r, c in enumerate(layers)]
    if not any(mu):
        return LaurentPoly(("q",))
    for W in range(1, max_width + 1):
        if mu[0]:
            centre = mu[1] / mu[0]
            base = int(centre.numerator // centre.denominator)
            candidates = range(base - W + 1, base + 2)
        else:
            span = 4 * len(mu) + 200
            candidates = range(-span, span)
        for lo in candidates:
            sol = _match_window(mu, lo, W)
            if sol is not None:
                return LaurentPoly(("q",), {(4 * (lo + i),): c for i, c in enumerate(sol)})
    return None


def initial_fm_solve(mmr: MmrData, window: Iterable[int], strict: bool = False) -> InitialData:
    """Match ``f_m(e^h)`` against the MMR layers for each odd m in ``window``.

    Widths up to ``R - 1`` are tried, leaving at least two orders as checks.
    """
    window = sorted(window)
    R = mmr.order
    layers = mmr_layers(mmr, max(window))
    fm, widths, undetermined = {}, {}, []
    for m in window:
        f = match_fm(layers[m], R - 1)
        if f is None:
            if strict:
                raise SupportTooSmall(f"f_{m}: no support of width <= {R - 1} matches {R + 1} orders")
            undetermined.append(m)
            continue
        if not f.is_integral():
            raise NonIntegerSolution(f"f_{m} = {f.to_str()} has non-integer coefficients")
        fm[m] = f
        widths[m] = _width(f)
    return InitialData(fm, widths, undetermined, R)


def _width(f: LaurentPoly) -> int:
    if f.is_zero():
        return 0
    return int(f.degree("q") - f.valuation("q")) + 1


# ---------------------------------------------------------------------------
# Iteration


@dataclass
class FkSeries:
    """``F_K = half * sum_m (x^{m/2} - x^{-m/2}) f_m(q)`` for odd ``0 < m <= frontier``.

    The constants of an overall ``2^{-c} q^Δ`` prefactor are not fixed; the
    q-exponents are those forced by the MMR matching.
    """

    fm: dict[int, LaurentPoly]
    frontier: int
    half: mpq = field(default_factory=lambda: mpq(1, 2))
    normalization: str = "q-exponents fixed by MMR matching; no extra 2^-c q^Delta factor"

    def get(self, m: int) -> LaurentPoly:
        if m == 0 or m % 2 == 0:
            return LaurentPoly(("q",))
        if m < 0:
            return -self.get(-m)
        if m > self.frontier:
            raise FrontierTooSmall(f"f_{m} beyond frontier {self.frontier}")
        return self.fm.get(m, LaurentPoly(("q",)))

    def nonzero(self) -> dict[int, LaurentPoly]:
        return {m: f for m, f in sorted(self.fm.items()) if not f.is_zero()}


def iterate_fm(rec: FmRecursion, seed: Mapping[int, LaurentPoly], m_max: int, one_sided: bool = True) -> FkSeries:
    """Extend ``seed`` (odd ``m = 1, 3, ..., s``) to ``m <= m_max``.

    ``f_top`` for ``top > s`` comes from the relation with lowest index
    ``top - span``, and the leading tap must divide exactly.  When that index
    is negative, ``one_sided`` uses the coefficient of ``x^{K/2}`` in the
    recursion applied to the positive half ``sum_{m>0} x^{m/2} f_m`` alone;
    the mirrored half then satisfies the recursion by the antisymmetry of
    the operator (see :func:`check_antisymmetry`).  Otherwise negative
    indices enter through ``f_{-k} = -f_k`` and must already be known.
    """
    if not seed:
        raise MissingSeed("empty seed")
    s = max(seed)
    missing = [m for m in range(1, s + 1, 2) if m not in seed]
    if missing:
        raise MissingSeed(f"seed lacks f_m for m in {missing[:10]}")
    f = {m: seed[m].embed(("q",)) for m in seed}
    zero = LaurentPoly(("q",))

    def get(k: int, top: int) -> LaurentPoly:
        if k < 0:
            if one_sided:
                return zero
            if -k >= top:
                raise MissingSeed(f"f_{top} needs f_{-k} through antisymmetry")
            return -f[-k]
        return f.get(k, zero)

    lower = rec.lower_taps()
    for top in range(s + 2, m_max + 1, 2):
        m = top - rec.span
        acc = zero
        for o, _ in lower:
            v = get(m + o, top)
            if not v.is_zero():
                acc = acc + rec.tap_at(o, m) * v
        lead = rec.tap_at(rec.span, m)
        if lead.is_zero():
            raise MissingSeed(f"leading tap vanishes at f_{top}; it must be seeded")
        try:
            val = (-acc).divide_exact(lead)
        except NotDivisible as exc:
            raise NotDivisible(f"f_{top}: leading tap does not divide ({exc})") from exc
        if not val.is_integral():
            raise NotDivisible(f"f_{top} is not in Z[q^±1]")
        f[top] = val
    return FkSeries({m: f.get(m, zero) for m in range(1, m_max + 1, 2)}, m_max)


def fm_residuals(rec: FmRecursion, fk: FkSeries, lowest: Iterable[int]) -> dict[int, bool]:
    """Whether the two-sided relation with each lowest index holds.

    Indices whose relation reaches beyond the frontier are skipped.
    """
    out = {}
    for m in lowest:
        if m + rec.span > fk.frontier or -m > fk.frontier:
            continue
        out[m] = rec.residual(fk.get, m).is_zero()
    return out


def xq_residual(rec: XqRecursion, fk: FkSeries, K: int) -> LaurentPoly:
    """Coefficient of ``x^{K/2}`` in the cleared recursion applied to ``2F``.

    Exact as long as every contributing ``f_k`` lies within the frontier.
    """
    total = LaurentPoly(("q",))
    for j, C in enumerate(rec.relation):
        iq, ix = C.vars.index("q"), C.vars.index("x")
        for e, c in C.terms.items():
            a = e[ix] // 2
            k = K - a
            fk_k = fk.get(k)
            if fk_k.is_zero():
                continue
            total = total + fk_k * LaurentPoly.monomial({"q": Fraction(e[iq], LATTICE) + Fraction(j * k, 2)}, c)
    return total


# ---------------------------------------------------------------------------
# Structural checks


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConjectureReport:
    checks: list[Check]
    positive: list[int]
    negative: list[int]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def get(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json_obj(self) -> dict:
        return {
            "positive": self.positive,
            "negative": self.negative,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _coeff_list(f: LaurentPoly) -> list[mpq]:
    lo, hi = int(f.valuation("q")), int(f.degree("q"))
    return [f.coeff({"q": e}) for e in range(lo, hi + 1)]


def check_conjectures(fk: FkSeries, r_cable: int = 9, data_max: int = 97) -> ConjectureReport:
    """Check the structural statements about the ``f_m``; failures are reported, not raised."""
    checks: list[Check] = []
    nz = fk.nonzero()
    pos = [m for m, f in nz.items() if all(c > 0 for c in f.terms.values())]
    neg = [m for m, f in nz.items() if all(c < 0 for c in f.terms.values())]
    mixed = [m for m in nz if m not in pos and m not in neg]
    checks.append(Check("sign_purity", not mixed, f"mixed-sign f_m: {mixed}"))

    zero_low = [m for m in range(1, 11, 2) if not fk.get(m).is_zero()]
    gaps = [m for m in (13, 17, 21, 25) if not fk.get(m).is_zero()]
    checks.append(Check("starts_at_11", not zero_low and not fk.get(11).is_zero(), f"nonzero below 11: {zero_low}"))
    checks.append(Check("gaps_13_17_21_25", not gaps, f"nonzero: {gaps}"))

    bad_alt = [m for m in range(27, fk.frontier + 1, 2) if (m in pos) != (m % 4 == 3) or (m in neg) != (m % 4 == 1)]
    checks.append(Check("alternation_from_27", not bad_alt, f"violations: {bad_alt[:10]}"))

    odd_bad = [m for m, f in nz.items() if len(f.terms) % 2 == 0]
    checks.append(Check("odd_term_count", not odd_bad, f"even counts: {odd_bad[:10]}"))
    cons_bad = [m for m, f in nz.items() if any(c == 0 for c in _coeff_list(f))]
    checks.append(Check("consecutive_exponents", not cons_bad, f"gapped: {cons_bad[:10]}"))

    shift = 2 * r_cable
    corr_bad = []
    for v in neg:
        if v - shift in nz:
            if [-c for c in _coeff_list(nz[v])] != _coeff_list(nz[v - shift]):
                corr_bad.append(v)
        else:
            corr_bad.append(v)
    checks.append(Check(f"negative_equals_positive_shifted_{shift}", not corr_bad, f"violations: {corr_bad[:10]}"))

    def palin(f):
        c = _coeff_list(f)
        return c == c[::-1]

    pos_break = next((m for m in pos if not palin(nz[m])), None)
    neg_break = next((m for m in neg if not palin(nz[m])), None)
    checks.append(Check("reflection_break_positive", pos_break == 47, f"first asymmetric positive f_m: {pos_break}"))
    checks.append(Check("reflection_break_negative", neg_break == 65, f"first asymmetric negative f_m: {neg_break}"))

    def deg(f):
        return f.degree("q")

    def val(f):
        return f.valuation("q")

    def pattern(ms, fn, start, first, sign):
        """Increments between consecutive family members from ``start``: first, first, first+sign, ..."""
        got, want = [], []
        seq = [m for m in ms if m >= start and m <= data_max]
        for i in range(1, len(seq)):
            got.append(int(fn(nz[seq[i]]) - fn(nz[seq[i - 1]])))
            want.append(first + sign * ((i - 1) // 2))
        return got == want, got

    ok, got = pattern(pos, deg, 15, 2, 1)
    checks.append(Check("max_degree_increments_positive", ok, f"from f_15: {got}"))
    ok, got = pattern(neg, deg, 33, 4, 1)
    checks.append(Check("max_degree_increments_negative", ok, f"from f_33: {got}"))
    ok, got = pattern(pos, val, 15, 0, -1)
    checks.append(Check("min_degree_increments_positive", ok, f"from f_15: {got}"))
    ok, got = pattern(neg, val, 33, 2, -1)
    checks.append(Check("min_degree_increments_negative", ok, f"from f_33: {got}"))
    return ConjectureReport(checks, pos, neg)


# ---------------------------------------------------------------------------
# ħ table


@dataclass
class HbarTable:
    """``rows[r][m]``: coefficient of ``h^r x^{m/2}`` in ``2F(x, e^h)`` (odd ``m > 0``)."""

    rows: list[dict[int, mpq]]
    m_max: int

    def series(self, r: int) -> LaurentPoly:
        terms = {}
        for m, c in self.rows[r].items():
            if c:
                terms[(2 * m,)] = c
                terms[(-2 * m,)] = -c
        return LaurentPoly(("x",), terms)


def assemble_hbar_table(fk: FkSeries, R: int, m_max: int) -> HbarTable:
    if m_max > fk.frontier:
        raise FrontierTooSmall(f"requested m <= {m_max} but frontier is {fk.frontier}")
    rows: list[dict[int, mpq]] = [dict() for _ in range(R + 1)]
    for m in range(1, m_max + 1, 2):
        f = fk.get(m)
        ser = f.hbar_expand(R, "q") if not f.is_zero() else None
        for r in range(R + 1):
            rows[r][m] = ser[r] if ser is not None else mpq(0)
    return HbarTable(rows, m_max)


# ---------------------------------------------------------------------------
# Pipeline


@dataclass
class FkResult:
    r: int
    fk: FkSeries
    mmr: MmrData
    initial: InitialData
    fm_rec: FmRecursion
    xq_rec: XqRecursion
    ahat_variant: dict[str, str]
    ahat_attempts: list
    seed_max: int
    timings: dict[str, float] = field(default_factory=dict)


def compute_fk(r: int = 9, m_max: int = 151, R: int = 24, seed_window: int = 97) -> FkResult:
    """Run the full pipeline for the (r, 2)-cable of the figure-eight.

    The MMR-matched data through ``seed_window`` is used two ways: its
    prefix up to the first index where the recursion's leading tap vanishes
    seeds the iteration, and every other matched ``f_m`` must agree with
    the iterated value.
    """
    t = {}
    t0 = time.perf_counter()
    res = resolve_ahat(r)
    xq = to_xq_recursion(res.bundle)
    fm_rec = extract_fm_recursion(xq)
    t["recursion"] = time.perf_counter() - t0

    delta = alexander_cable(2, r, alexander_fig8())
    fit = mmr_fit(r, R, method="series")
    mmr = solve_Pr(xq, delta, R, boundary_values(fit))
    t["mmr"] = time.perf_counter() - t0 - t["recursion"]

    init = initial_fm_solve(mmr, range(1, seed_window + 1, 2))
    seed_max = _seed_frontier(fm_rec, init)
    seed = {m: init.fm[m] for m in range(1, seed_max + 1, 2)}
    fk = iterate_fm(fm_rec, seed, m_max)
    for m, f in init.fm.items():
        if m <= m_max and fk.get(m) != f:
            raise InconsistentSystem(f"f_{m}: MMR matching gives {f.to_str()}, recursion gives {fk.get(m).to_str()}")
    t["fm"] = time.perf_counter() - t0 - t["recursion"] - t["mmr"]
    return FkResult(r, fk, mmr, init, fm_rec, xq, res.bundle.variant, res.attempts, seed_max, t)


def _seed_frontier(rec: FmRecursion, init: InitialData) -> int:
    """Largest index whose relation has a vanishing leading tap, with all lower f_m matched."""
    top = 1
    for k in range(1, max(init.fm) + 1, 2):
        if rec.tap_at(rec.span, k - rec.span).is_zero():
            top = k
    missing = [m for m in range(1, top + 1, 2) if m not in init.fm]
    if missing:
        raise MissingSeed(f"MMR matching did not determine {missing}")
    return top
