"""Exact sparse Laurent polynomials on a quarter-integer exponent lattice.

Every exponent is stored as an integer numerator over the fixed lattice
denominator :data:`LATTICE` (= 4), so ``q**(1/4)``, ``x**(1/2)`` and ``q**3``
are all first-class.  Coefficients are exact rationals (:class:`gmpy2.mpq`).

>>> x = LaurentPoly.var("x")
>>> ((x - x**-1) * (x + x**-1)).to_str()
'x^2 - x^-2'
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from functools import reduce
from typing import Iterable, Mapping, Sequence, Union

import flint
from gmpy2 import mpq, mpz

LATTICE = 4
# Univariate products above this many term pairs go through FLINT.
FLINT_THRESHOLD = 4096
VAR_ORDER = ("q", "t", "x", "M", "w", "n", "u")

Number = Union[int, Fraction, "mpq", "mpz"]


class NotDivisible(ArithmeticError):
    """Raised when an exact Laurent division leaves a nonzero remainder."""


class NegativePowerOfSum(ValueError):
    """Raised when a multi-term value is substituted into a negative power."""


class ZeroPolynomial(ZeroDivisionError):
    """Raised when inverting or dividing by the zero polynomial."""


def to_q(c: Number) -> mpq:
    if isinstance(c, Fraction):
        return mpq(c.numerator, c.denominator)
    return mpq(c)


def lattice(e: Number) -> int:
    """Exponent ``e`` as a lattice numerator; ``e`` must lie in (1/4)Z."""
    f = Fraction(e) * LATTICE if not isinstance(e, int) else Fraction(e * LATTICE)
    if f.denominator != 1:
        raise ValueError(f"exponent {e} is not on the 1/{LATTICE} lattice")
    return int(f)


def exponent(num: int) -> Fraction:
    return Fraction(num, LATTICE)


def _order_vars(names: Iterable[str]) -> tuple[str, ...]:
    names = set(names)
    known = [v for v in VAR_ORDER if v in names]
    return tuple(known + sorted(names - set(VAR_ORDER)))


def _fmt_exp(num: int) -> str:
    e = exponent(num)
    return str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"


def _fmt_coeff(c: mpq) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class LaurentPoly:
    """Immutable sparse polynomial ``{exponent vector: coefficient}``.

    ``terms`` maps tuples of lattice numerators (one per entry of ``vars``)
    to nonzero :class:`mpq` coefficients.  The zero polynomial has no terms.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars: Sequence[str] = (), terms: Mapping | None = None, *, _clean: bool = False):
        self.vars = tuple(vars)
        if terms is None:
            self.terms = {}
        elif _clean:
            self.terms = terms
        else:
            n = len(self.vars)
            out = {}
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != n:
                    raise ValueError("exponent vector length does not match vars")
                c = to_q(c)
                if c:
                    out[e] = out.get(e, 0) + c
            self.terms = {e: c for e, c in out.items() if c}
        self._hash = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def const(cls, c: Number, vars: Sequence[str] = ()) -> "LaurentPoly":
        c = to_q(c)
        return cls(vars, {(0,) * len(vars): c} if c else {}, _clean=True)

    @classmethod
    def var(cls, name: str) -> "LaurentPoly":
        return cls((name,), {(LATTICE,): mpq(1)}, _clean=True)

    @classmethod
    def monomial(cls, powers: Mapping[str, Number], c: Number = 1) -> "LaurentPoly":
        vars = _order_vars(powers)
        c = to_q(c)
        if not c:
            return cls(vars)
        return cls(vars, {tuple(lattice(powers[v]) for v in vars): c}, _clean=True)

    @classmethod
    def from_univariate(cls, name: str, coeffs: Mapping[Number, Number]) -> "LaurentPoly":
        """Build a polynomial in one variable from ``{exponent: coefficient}``."""
        return cls((name,), {(lattice(e),): c for e, c in coeffs.items()})

    # -- basic queries ----------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and not any(next(iter(self.terms))))

    def constant_value(self) -> mpq:
        return self.terms.get((0,) * len(self.vars), mpq(0))

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def free_vars(self) -> tuple[str, ...]:
        """Variables that actually occur with a nonzero exponent."""
        used = [False] * len(self.vars)
        for e in self.terms:
            for i, a in enumerate(e):
                if a:
                    used[i] = True
        return tuple(v for v, u in zip(self.vars, used) if u)

    def index(self, var: str) -> int:
        try:
            return self.vars.index(var)
        except ValueError:
            raise KeyError(f"variable {var!r} not in {self.vars}") from None

    def degree(self, var: str | None = None) -> Fraction | None:
        """Highest exponent in ``var`` (the only variable if omitted); ``None`` for zero."""
        if not self.terms:
            return None
        i = self._var_index(var)
        if i is None:
            return Fraction(0)
        return exponent(max(e[i] for e in self.terms))

    def valuation(self, var: str | None = None) -> Fraction | None:
        """Lowest exponent in ``var``; ``None`` for the zero polynomial."""
        if not self.terms:
            return None
        i = self._var_index(var)
        if i is None:
            return Fraction(0)
        return exponent(min(e[i] for e in self.terms))

    def _var_index(self, var):
        if var is None:
            if len(self.vars) != 1:
                fv = self.free_vars()
                if len(fv) > 1:
                    raise ValueError("variable must be named for a multivariate polynomial")
                if not fv:
                    return None
                var = fv[0]
            else:
                return 0
        if var not in self.vars:
            return None
        return self.vars.index(var)

    def coefficients(self, var: str | None = None) -> dict[Fraction, mpq]:
        """Univariate view ``{exponent: coefficient}`` (polynomial must be univariate)."""
        i = self._var_index(var)
        if len(self.free_vars()) > 1:
            raise ValueError("not univariate")
        if i is None:
            return {Fraction(0): c for c in self.terms.values()}
        return {exponent(e[i]): c for e, c in sorted(self.terms.items())}

    def coeff(self, powers: Mapping[str, Number] | Number = 0) -> mpq:
        """Coefficient of a monomial (given as ``{var: exp}`` or a scalar exponent)."""
        if not isinstance(powers, Mapping):
            if len(self.vars) != 1:
                raise ValueError("scalar exponent requires a univariate polynomial")
            powers = {self.vars[0]: powers}
        for v, e in powers.items():
            if v not in self.vars and e:
                return mpq(0)
        key = tuple(lattice(powers.get(v, 0)) for v in self.vars)
        return self.terms.get(key, mpq(0))

    def sorted_terms(self) -> list[tuple[tuple[int, ...], mpq]]:
        return sorted(self.terms.items())

    def is_integral(self) -> bool:
        """True if every coefficient is an integer and every exponent an integer."""
        return all(c.denominator == 1 for c in self.terms.values()) and all(
            a % LATTICE == 0 for e in self.terms for a in e
        )

    # -- variable-set management -------------------------------------------

    def embed(self, vars: Sequence[str]) -> "LaurentPoly":
        vars = tuple(vars)
        if vars == self.vars:
            return self
        missing = [v for v in self.free_vars() if v not in vars]
        if missing:
            raise ValueError(f"cannot embed: variables {missing} missing from target")
        pos = [self.vars.index(v) if v in self.vars else None for v in vars]
        terms = {tuple(e[p] if p is not None else 0 for p in pos): c for e, c in self.terms.items()}
        return LaurentPoly(vars, terms, _clean=True)

    def _common(self, other: "LaurentPoly"):
        if self.vars == other.vars:
            return self, other
        vars = _order_vars(self.vars + other.vars)
        return self.embed(vars), other.embed(vars)

    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, (int, Fraction)) or type(other).__name__ in ("mpq", "mpz"):
            return LaurentPoly.const(other, self.vars)
        return NotImplemented

    # -- ring operations ---------------------------------------------------

    def __neg__(self) -> "LaurentPoly":
        return LaurentPoly(self.vars, {e: -c for e, c in self.terms.items()}, _clean=True)

    def __add__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        a, b = self._common(other)
        if len(a.terms) < len(b.terms):
            a, b = b, a
        out = dict(a.terms)
        for e, c in b.terms.items():
            s = out.get(e)
            if s is None:
                out[e] = c
            else:
                s = s + c
                if s:
                    out[e] = s
                else:
                    del out[e]
        return LaurentPoly(a.vars, out, _clean=True)

    __radd__ = __add__

    def __sub__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other) -> "LaurentPoly":
        return (-self) + other

    def scale(self, c: Number) -> "LaurentPoly":
        c = to_q(c)
        if not c:
            return LaurentPoly(self.vars)
        return LaurentPoly(self.vars, {e: v * c for e, v in self.terms.items()}, _clean=True)

    def shift(self, powers: Mapping[str, Number]) -> "LaurentPoly":
        """Multiply by the monomial ``prod(var**exp)``."""
        vars = _order_vars(self.vars + tuple(powers))
        p = self.embed(vars)
        d = tuple(lattice(powers.get(v, 0)) for v in vars)
        return LaurentPoly(vars, {tuple(a + b for a, b in zip(e, d)): c for e, c in p.terms.items()}, _clean=True)

    def __mul__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if other.is_constant():
            return self.scale(other.constant_value())
        if self.is_constant():
            return other.scale(self.constant_value())
        a, b = self._common(other)
        if len(a.terms) < len(b.terms):
            a, b = b, a
        n = len(a.vars)
        if len(a.terms) * len(b.terms) > FLINT_THRESHOLD:
            return _flint_mul(a, b) if n == 1 else _mpoly_mul(a, b)
        out: dict = {}
        get = out.get
        bt = list(b.terms.items())
        if n == 1:
            for (ea,), ca in a.terms.items():
                for (eb,), cb in bt:
                    k = (ea + eb,)
                    out[k] = get(k, 0) + ca * cb
        elif n == 2:
            for (ea0, ea1), ca in a.terms.items():
                for (eb0, eb1), cb in bt:
                    k = (ea0 + eb0, ea1 + eb1)
                    out[k] = get(k, 0) + ca * cb
        else:
            for ea, ca in a.terms.items():
                for eb, cb in bt:
                    k = tuple(x + y for x, y in zip(ea, eb))
                    out[k] = get(k, 0) + ca * cb
        return LaurentPoly(a.vars, {e: c for e, c in out.items() if c}, _clean=True)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "LaurentPoly":
        if k < 0:
            if not self.is_monomial():
                raise NotDivisible("negative power of a non-monomial")
            (e, c), = self.terms.items()
            return LaurentPoly(self.vars, {tuple(a * k for a in e): c ** k}, _clean=True)
        result = LaurentPoly.const(1, self.vars)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        a, b = self._common(other)
        return a.terms == b.terms

    def __hash__(self) -> int:
        if self._hash is None:
            fv = self.free_vars()
            p = self.embed(_order_vars(fv)) if fv != self.vars else self
            self._hash = hash((p.vars, frozenset(p.terms.items())))
        return self._hash

    # -- division ----------------------------------------------------------

    def divide_exact(self, other: "LaurentPoly") -> "LaurentPoly":
        """Exact quotient ``self / other`` in the Laurent ring.

        Raises :class:`NotDivisible` when the remainder is nonzero.
        """
        other = self._coerce(other)
        if other.is_zero():
            raise ZeroPolynomial("division by the zero polynomial")
        if self.is_zero():
            return LaurentPoly(self.vars)
        if other.is_monomial():
            (e, c), = other.terms.items()
            a, b = self._common(other)
            (e, c), = b.terms.items()
            return LaurentPoly(a.vars, {tuple(x - y for x, y in zip(k, e)): v / c for k, v in a.terms.items()}, _clean=True)
        a, b = self._common(other)
        if len(a.terms) * len(b.terms) > FLINT_THRESHOLD:
            return _flint_divexact(a, b) if len(a.vars) == 1 else _mpoly_divexact(a, b)
        # Lex-order leading-term elimination; every quotient exponent is
        # bounded below (lex) by low(a) - low(b), which bounds the loop.
        rem = dict(a.terms)
        bt = sorted(b.terms.items())
        lead_e, lead_c = bt[-1]
        floor = tuple(x - y for x, y in zip(min(rem), bt[0][0]))
        rest_b = bt[:-1]
        quot: dict = {}
        while rem:
            top = max(rem)
            s = tuple(x - y for x, y in zip(top, lead_e))
            if s < floor:
                raise NotDivisible("nonzero remainder in exact division")
            f = rem.pop(top) / lead_c
            quot[s] = f
            for e, c in rest_b:
                k = tuple(x + y for x, y in zip(s, e))
                v = rem.get(k, 0) - f * c
                if v:
                    rem[k] = v
                else:
                    rem.pop(k, None)
        return LaurentPoly(a.vars, quot, _clean=True)

    def __truediv__(self, other) -> "LaurentPoly":
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self.divide_exact(other)

    # -- substitution and evaluation --------------------------------------

    def substitute(self, var: str, value: "LaurentPoly | Number") -> "LaurentPoly":
        """Image under ``var -> value``.

        A monomial ``value`` may carry any lattice exponents; the image exponent
        ``a * e`` must again land on the lattice.  A multi-term value is only
        accepted when every exponent of ``var`` is a nonnegative integer.
        """
        if var not in self.vars:
            return self
        i = self.vars.index(var)
        if not isinstance(value, LaurentPoly):
            value = LaurentPoly.const(value)
        rest = tuple(v for v in self.vars if v != var)
        if value.is_monomial() or value.is_zero():
            if value.is_zero():
                if any(e[i] < 0 for e in self.terms):
                    raise ZeroPolynomial("zero substituted into a negative power")
                keep = {e: c for e, c in self.terms.items() if e[i] == 0}
                return LaurentPoly(self.vars, keep, _clean=True).embed(rest) if keep else LaurentPoly(rest)
            (ve, vc), = value.terms.items()
            vars = _order_vars(rest + value.vars)
            pos = [self.vars.index(v) if v in self.vars and v != var else None for v in vars]
            vpos = [value.vars.index(v) if v in value.vars else None for v in vars]
            out: dict = {}
            for e, c in self.terms.items():
                a = e[i]
                key = []
                for p, vp in zip(pos, vpos):
                    s = e[p] if p is not None else 0
                    if vp is not None:
                        num = a * ve[vp]
                        if num % LATTICE:
                            raise ValueError("substitution leaves the exponent lattice")
                        s += num // LATTICE
                    key.append(s)
                key = tuple(key)
                coef = c * (vc ** (a // LATTICE)) if a % LATTICE == 0 else None
                if coef is None:
                    if vc != 1:
                        raise ValueError("fractional power of a non-unit coefficient")
                    coef = c
                out[key] = out.get(key, 0) + coef
            return LaurentPoly(vars, {k: c for k, c in out.items() if c}, _clean=True)
        if any(e[i] < 0 for e in self.terms):
            raise NegativePowerOfSum(f"cannot substitute a sum into a negative power of {var}")
        if any(e[i] % LATTICE for e in self.terms):
            raise NegativePowerOfSum(f"cannot substitute a sum into a fractional power of {var}")
        groups: dict[int, dict] = {}
        for e, c in self.terms.items():
            groups.setdefault(e[i] // LATTICE, {})[e[:i] + (0,) + e[i + 1:]] = c
        result = LaurentPoly(rest)
        power = LaurentPoly.const(1)
        last = 0
        for k in sorted(groups):
            power = power * value ** (k - last)
            last = k
            part = LaurentPoly(self.vars, groups[k], _clean=True).embed(rest) if rest or True else None
            result = result + part * power
        return result

    def substitute_many(self, values: Mapping[str, "LaurentPoly | Number"]) -> "LaurentPoly":
        p = self
        for v, val in values.items():
            p = p.substitute(v, val)
        return p

    def evaluate(self, values: Mapping[str, Number]):
        """Exact value at rational points; fractional powers need perfect roots."""
        total = mpq(0)
        idx = [(i, to_q(values[v])) for i, v in enumerate(self.vars) if v in values]
        if len(idx) != len(self.free_vars()) and any(v not in values for v in self.free_vars()):
            rest = {v: LaurentPoly.const(values[v]) for v in values if v in self.vars}
            return self.substitute_many(rest)
        for e, c in self.terms.items():
            term = c
            for i, val in idx:
                a = e[i]
                if a % LATTICE == 0:
                    term *= val ** (a // LATTICE)
                else:
                    term *= _lattice_power(val, a)
            total += term
        return total

    def scale_var(self, var: str, factor: Number) -> "LaurentPoly":
        """``p(var -> factor*var)`` for a rational factor and integer exponents."""
        if var not in self.vars:
            return self
        i = self.vars.index(var)
        f = to_q(factor)
        out = {}
        for e, c in self.terms.items():
            if e[i] % LATTICE:
                raise ValueError("scale_var needs integer exponents")
            out[e] = c * f ** (e[i] // LATTICE)
        return LaurentPoly(self.vars, out, _clean=True)

    def theta(self, var: str) -> "LaurentPoly":
        """Euler derivative ``var * d/dvar``: multiplies each term by its exponent."""
        if var not in self.vars:
            return LaurentPoly(self.vars)
        i = self.vars.index(var)
        return LaurentPoly(
            self.vars,
            {e: c * mpq(e[i], LATTICE) for e, c in self.terms.items() if e[i]},
            _clean=True,
        )

    def invert_var(self, var: str) -> "LaurentPoly":
        """``p(var -> 1/var)``."""
        if var not in self.vars:
            return self
        i = self.vars.index(var)
        return LaurentPoly(self.vars, {e[:i] + (-e[i],) + e[i + 1:]: c for e, c in self.terms.items()}, _clean=True)

    def collect(self, var: str) -> dict[int, "LaurentPoly"]:
        """Split into ``{lattice exponent of var: coefficient polynomial}``."""
        i = self.index(var)
        rest = self.vars[:i] + self.vars[i + 1:]
        groups: dict[int, dict] = {}
        for e, c in self.terms.items():
            groups.setdefault(e[i], {})[e[:i] + e[i + 1:]] = c
        return {k: LaurentPoly(rest, g, _clean=True) for k, g in sorted(groups.items())}

    def map_coefficients(self, fn) -> "LaurentPoly":
        return LaurentPoly(self.vars, {e: fn(c) for e, c in self.terms.items()})

    def content_denominator(self) -> mpz:
        return reduce(lambda a, b: a * b // math.gcd(a, b), (int(c.denominator) for c in self.terms.values()), 1)

    # -- ħ expansion ------------------------------------------------------

    def hbar_expand(self, order: int, var: str = "q") -> "HbarSeries":
        """Expand under ``var = exp(hbar)`` through ``hbar**order``.

        The coefficient of ``hbar**r`` is ``sum c * e**r / r!`` taken over the
        terms, with the remaining variables kept symbolic.
        """
        rest = tuple(v for v in self.vars if v != var)
        if var not in self.vars:
            return HbarSeries([self.embed(rest) if rest else self.constant_value()] + [0] * order, order)
        i = self.vars.index(var)
        if not rest:
            pows = {}
            for (a,), c in self.terms.items():
                pows[a] = pows.get(a, 0) + c
            coeffs = []
            fact = 1
            for r in range(order + 1):
                if r:
                    fact *= r
                s = sum((c * (mpq(a, LATTICE) ** r) for a, c in pows.items()), mpq(0))
                coeffs.append(s / fact)
            return HbarSeries(coeffs, order)
        groups = self.collect(var)
        coeffs = []
        fact = 1
        for r in range(order + 1):
            if r:
                fact *= r
            acc = LaurentPoly(rest)
            for a, g in groups.items():
                acc = acc + g.scale(mpq(a, LATTICE) ** r / fact)
            coeffs.append(acc)
        return HbarSeries(coeffs, order)

    # -- printing and serialization --------------------------------------

    def to_str(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(
                v if a == LATTICE else f"{v}^{_fmt_exp(a)}" for v, a in zip(self.vars, e) if a
            )
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{_fmt_coeff(mag)}*{mono}"
            else:
                body = _fmt_coeff(mag)
            parts.append((sign, body))
        head = ("-" if parts[0][0] == "-" else "") + parts[0][1]
        return " ".join([head] + [f"{s} {b}" for s, b in parts[1:]])

    def __repr__(self) -> str:
        return f"LaurentPoly({self.to_str()!r})"

    def to_json_obj(self) -> dict:
        return {
            "vars": list(self.vars),
            "terms": [{"e": list(e), "c": _fmt_coeff(c)} for e, c in sorted(self.terms.items())],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "LaurentPoly":
        return cls(obj["vars"], {tuple(t["e"]): mpq(t["c"]) for t in obj["terms"]})

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "LaurentPoly":
        return cls.from_json_obj(json.loads(text))


def _to_flint(p: LaurentPoly, low: int, step: int) -> "flint.fmpq_poly":
    dense = [0] * ((max(e[0] for e in p.terms) - low) // step + 1)
    for (e,), c in p.terms.items():
        dense[(e - low) // step] = flint.fmpq(int(c.numerator), int(c.denominator))
    return flint.fmpq_poly(dense)


def _from_flint(f: "flint.fmpq_poly", var: str, low: int, step: int) -> LaurentPoly:
    terms = {}
    for k, c in enumerate(f.coeffs()):
        if c:
            terms[(low + k * step,)] = mpq(int(c.p), int(c.q))
    return LaurentPoly((var,), terms, _clean=True)


def _uni_step(*polys: LaurentPoly) -> int:
    step = 0
    for p in polys:
        es = [e[0] for e in p.terms]
        m = min(es)
        for e in es:
            step = math.gcd(step, e - m)
    return step or 1


def _flint_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    la, lb = min(e[0] for e in a.terms), min(e[0] for e in b.terms)
    step = _uni_step(a, b)
    prod = _to_flint(a, la, step) * _to_flint(b, lb, step)
    return _from_flint(prod, a.vars[0], la + lb, step)


def _flint_divexact(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    la, lb = min(e[0] for e in a.terms), min(e[0] for e in b.terms)
    step = _uni_step(a, b)
    quo, rem = divmod(_to_flint(a, la, step), _to_flint(b, lb, step))
    if rem != 0:
        raise NotDivisible("nonzero remainder in exact division")
    return _from_flint(quo, a.vars[0], la - lb, step)


def _mpoly_ctx(n: int):
    return flint.fmpq_mpoly_ctx.get(tuple(f"v{i}" for i in range(n)), "lex")


def _mpoly_frame(*polys: LaurentPoly):
    """Per-variable lowest exponent and exponent step shared by ``polys``."""
    n = len(polys[0].vars)
    lows, steps = [], []
    for i in range(n):
        ls = [min(e[i] for e in p.terms) for p in polys]
        step = 0
        for p, lo in zip(polys, ls):
            for e in p.terms:
                step = math.gcd(step, e[i] - lo)
        lows.append(ls)
        steps.append(step or 1)
    return lows, steps


def to_mpoly(p: LaurentPoly, low: Sequence[int], steps: Sequence[int]):
    ctx = _mpoly_ctx(len(p.vars))
    return ctx.from_dict({
        tuple((x - lo) // st for x, lo, st in zip(e, low, steps)): flint.fmpq(int(c.numerator), int(c.denominator))
        for e, c in p.terms.items()
    })


def from_mpoly(f, vars: Sequence[str], low: Sequence[int], steps: Sequence[int]) -> LaurentPoly:
    terms = {}
    for k, c in f.to_dict().items():
        terms[tuple(lo + int(a) * st for a, lo, st in zip(k, low, steps))] = mpq(int(c.p), int(c.q))
    return LaurentPoly(tuple(vars), terms, _clean=True)


def _mpoly_mul(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    lows, steps = _mpoly_frame(a, b)
    la, lb = [l[0] for l in lows], [l[1] for l in lows]
    prod = to_mpoly(a, la, steps) * to_mpoly(b, lb, steps)
    return from_mpoly(prod, a.vars, [x + y for x, y in zip(la, lb)], steps)


def _mpoly_divexact(a: LaurentPoly, b: LaurentPoly) -> LaurentPoly:
    lows, steps = _mpoly_frame(a, b)
    la, lb = [l[0] for l in lows], [l[1] for l in lows]
    quo, rem = divmod(to_mpoly(a, la, steps), to_mpoly(b, lb, steps))
    if rem != 0:
        raise NotDivisible("nonzero remainder in exact division")
    return from_mpoly(quo, a.vars, [x - y for x, y in zip(la, lb)], steps)


def _lattice_power(val: mpq, a: int) -> mpq:
    """``val ** (a / LATTICE)`` for perfect powers only."""
    import gmpy2

    g = math.gcd(a, LATTICE)
    root = LATTICE // g
    num, ok1 = gmpy2.iroot(abs(val.numerator), root)
    den, ok2 = gmpy2.iroot(val.denominator, root)
    if not (ok1 and ok2) or (val < 0 and root % 2 == 0):
        raise ValueError(f"{val} has no rational {root}-th root")
    base = mpq(num, den) * (-1 if val < 0 else 1)
    return base ** (a // g)


def poly_arith(a: LaurentPoly, b: LaurentPoly, op: str) -> LaurentPoly:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def parse(text: str) -> LaurentPoly:
    """Parse a Laurent polynomial written with ``+ - * / ^`` and rational exponents.

    >>> parse("q^2 - q + 1/q^4").to_str()
    'q^2 - q + q^-4'
    """
    import sympy

    expr = sympy.sympify(text.replace("^", "**"))
    expr = sympy.expand(expr)
    symbols = sorted(expr.free_symbols, key=lambda s: s.name)
    names = _order_vars(s.name for s in symbols)
    out: dict = {}
    for term in sympy.Add.make_args(expr):
        coeff, rest = term.as_coeff_Mul()
        powers = dict.fromkeys(names, 0)
        for factor in sympy.Mul.make_args(rest):
            if factor == 1:
                continue
            base, exp = factor.as_base_exp()
            if not base.is_Symbol:
                raise ValueError(f"cannot parse factor {factor}")
            powers[base.name] += Fraction(str(exp))
        key = tuple(lattice(powers[v]) for v in names)
        c = Fraction(str(coeff))
        out[key] = out.get(key, 0) + to_q(c)
    return LaurentPoly(names, out)


# ---------------------------------------------------------------------------
# Rational functions


class RationalFunction:
    """Quotient ``numer / denom`` with no gcd reduction.

    Equality is decided by cross multiplication, so different unreduced
    representatives of the same function compare equal.
    """

    __slots__ = ("numer", "denom")

    def __init__(self, numer: LaurentPoly | Number, denom: LaurentPoly | Number = 1):
        if not isinstance(numer, LaurentPoly):
            numer = LaurentPoly.const(numer)
        if not isinstance(denom, LaurentPoly):
            denom = LaurentPoly.const(denom)
        if denom.is_zero():
            raise ZeroPolynomial("rational function with zero denominator")
        if denom.is_monomial() and not numer.is_zero():
            numer, denom = numer.divide_exact(denom), LaurentPoly.const(1)
        self.numer = numer
        self.denom = denom

    @classmethod
    def of(cls, x) -> "RationalFunction":
        return x if isinstance(x, RationalFunction) else cls(x)

    def is_zero(self) -> bool:
        return self.numer.is_zero()

    def is_polynomial(self) -> bool:
        return self.denom.is_constant()

    def __add__(self, other) -> "RationalFunction":
        o = RationalFunction.of(other)
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        if self.denom == o.denom:
            return RationalFunction(self.numer + o.numer, self.denom)
        return RationalFunction(self.numer * o.denom + o.numer * self.denom, self.denom * o.denom)

    __radd__ = __add__

    def __neg__(self) -> "RationalFunction":
        return RationalFunction(-self.numer, self.denom)

    def __sub__(self, other) -> "RationalFunction":
        return self + (-RationalFunction.of(other))

    def __rsub__(self, other) -> "RationalFunction":
        return RationalFunction.of(other) - self

    def __mul__(self, other) -> "RationalFunction":
        o = RationalFunction.of(other)
        if self.is_zero() or o.is_zero():
            return RationalFunction(0)
        return RationalFunction(self.numer * o.numer, self.denom * o.denom)

    __rmul__ = __mul__

    def inverse(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroPolynomial("inverse of zero")
        return RationalFunction(self.denom, self.numer)

    def __truediv__(self, other) -> "RationalFunction":
        o = RationalFunction.of(other)
        if self.denom == o.denom:
            return RationalFunction(self.numer, o.numer) if not o.is_zero() else o.inverse()
        return self * o.inverse()

    def __rtruediv__(self, other) -> "RationalFunction":
        return RationalFunction.of(other) * self.inverse()

    def __eq__(self, other) -> bool:
        o = RationalFunction.of(other)
        return self.numer * o.denom == o.numer * self.denom

    __hash__ = None

    def substitute(self, var: str, value) -> "RationalFunction":
        return RationalFunction(self.numer.substitute(var, value), self.denom.substitute(var, value))

    def substitute_many(self, values) -> "RationalFunction":
        return RationalFunction(self.numer.substitute_many(values), self.denom.substitute_many(values))

    def to_poly(self) -> LaurentPoly:
        """The polynomial this function equals; raises :class:`NotDivisible` otherwise."""
        return self.numer.divide_exact(self.denom)

    def evaluate(self, values):
        return self.numer.evaluate(values) / self.denom.evaluate(values)

    def __repr__(self) -> str:
        return f"RationalFunction(({self.numer.to_str()}) / ({self.denom.to_str()}))"

    def to_json_obj(self) -> dict:
        return {"numer": self.numer.to_json_obj(), "denom": self.denom.to_json_obj()}


# ---------------------------------------------------------------------------
# Truncated ħ-series


class HbarSeries:
    """Truncated power series ``sum coeffs[r] * hbar**r`` for ``r <= order``.

    Coefficients are scalars or :class:`LaurentPoly` values.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs: Sequence, order: int | None = None):
        if order is None:
            order = len(coeffs) - 1
        coeffs = list(coeffs)[: order + 1]
        coeffs += [0] * (order + 1 - len(coeffs))
        self.coeffs = [c if isinstance(c, LaurentPoly) else to_q(c) for c in coeffs]
        self.order = order

    def __getitem__(self, r: int):
        return self.coeffs[r]

    def _trunc(self, other: "HbarSeries") -> int:
        return min(self.order, other.order)

    def __add__(self, other: "HbarSeries") -> "HbarSeries":
        R = self._trunc(other)
        return HbarSeries([self.coeffs[r] + other.coeffs[r] for r in range(R + 1)], R)

    def __sub__(self, other: "HbarSeries") -> "HbarSeries":
        R = self._trunc(other)
        return HbarSeries([self.coeffs[r] - other.coeffs[r] for r in range(R + 1)], R)

    def __neg__(self) -> "HbarSeries":
        return HbarSeries([-c for c in self.coeffs], self.order)

    def __mul__(self, other) -> "HbarSeries":
        if not isinstance(other, HbarSeries):
            return HbarSeries([c * other for c in self.coeffs], self.order)
        R = self._trunc(other)
        out = []
        for r in range(R + 1):
            acc = 0
            for i in range(r + 1):
                a, b = self.coeffs[i], other.coeffs[r - i]
                if isinstance(a, LaurentPoly) and a.is_zero():
                    continue
                if isinstance(b, LaurentPoly) and b.is_zero():
                    continue
                if (not isinstance(a, LaurentPoly) and not a) or (not isinstance(b, LaurentPoly) and not b):
                    continue
                acc = acc + a * b
            out.append(acc)
        return HbarSeries(out, R)

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, HbarSeries):
            return NotImplemented
        R = self._trunc(other)
        return all(_eq0(self.coeffs[r] - other.coeffs[r]) for r in range(R + 1))

    def __repr__(self) -> str:
        parts = []
        for r, c in enumerate(self.coeffs):
            s = c.to_str() if isinstance(c, LaurentPoly) else _fmt_coeff(c)
            parts.append(f"({s})*h^{r}")
        return "HbarSeries(" + " + ".join(parts) + f" + O(h^{self.order + 1}))"


def _eq0(c) -> bool:
    return c.is_zero() if isinstance(c, LaurentPoly) else c == 0


def hbar_expand(p: LaurentPoly, order: int, var: str = "q") -> HbarSeries:
    return p.hbar_expand(order, var)


# ---------------------------------------------------------------------------
# Directed series inversion


def _lattice_step(p: LaurentPoly, i: int) -> int:
    exps = sorted({e[i] for e in p.terms})
    step = 0
    for a in exps[1:]:
        step = math.gcd(step, a - exps[0])
    return step or LATTICE


def series_divide(
    numer: LaurentPoly,
    denom: LaurentPoly,
    direction: str = "at_zero",
    *,
    var: str = "x",
    upto: Number | None = None,
    nterms: int | None = None,
) -> LaurentPoly:
    """Directed expansion of ``numer / denom`` in one variable.

    ``at_zero`` expands in increasing powers of ``var``; ``at_infinity`` in
    decreasing powers.  Truncation is by exponent bound ``upto`` (inclusive;
    an upper bound at zero, a lower bound at infinity) or by ``nterms``
    lattice steps of the denominator's exponent gcd, starting from the
    leading exponent of the quotient.
    """
    if denom.is_zero():
        raise ZeroPolynomial("series expansion of 1/0")
    if direction not in ("at_zero", "at_infinity"):
        raise ValueError(f"unknown direction {direction!r}")
    flip = direction == "at_infinity"
    if flip:
        numer, denom = numer.invert_var(var), denom.invert_var(var)
        if upto is not None:
            upto = -Fraction(upto)
    numer = numer.embed((var,)) if numer.vars != (var,) else numer
    denom = denom.embed((var,)) if denom.vars != (var,) else denom
    d = dict((e[0], c) for e, c in denom.terms.items())
    dlow = min(d)
    dlead = d[dlow]
    step = _lattice_step(denom, 0)
    if numer.is_zero():
        return LaurentPoly((var,))
    nt = {e[0]: c for e, c in numer.terms.items()}
    nlow = min(nt)
    start = nlow - dlow
    if nterms is not None:
        stop = start + (nterms - 1) * step
    elif upto is not None:
        stop = lattice(upto)
    else:
        raise ValueError("give nterms or upto")
    # Work on exponent offsets from `start`; numerator terms may sit off the
    # denominator step grid, so track every offset that can occur.
    out: dict[int, mpq] = {}
    rem = {a - dlow: c for a, c in nt.items()}
    dk = sorted((a - dlow, c) for a, c in d.items() if a != dlow)
    import heapq

    heap = list(rem)
    heapq.heapify(heap)
    seen = set(heap)
    while heap:
        k = heapq.heappop(heap)
        if k > stop:
            break
        c = rem.pop(k, 0)
        if not c:
            continue
        f = c / dlead
        out[k] = f
        for off, dc in dk:
            kk = k + off
            if kk > stop:
                break
            v = rem.get(kk, 0) - f * dc
            rem[kk] = v
            if kk not in seen:
                seen.add(kk)
                heapq.heappush(heap, kk)
    res = LaurentPoly((var,), {(k,): c for k, c in out.items() if c}, _clean=True)
    return res.invert_var(var) if flip else res


def series_inverse(d: LaurentPoly, direction: str = "at_zero", N: int = 10, var: str | None = None) -> LaurentPoly:
    """First ``N`` lattice terms of ``1/d`` expanded at zero or at infinity.

    >>> x = LaurentPoly.var("x")
    >>> series_inverse(1 - x, "at_zero", 4).to_str()
    'x^3 + x^2 + x + 1'
    >>> series_inverse(1 - x, "at_infinity", 3).to_str()
    '-x^-1 - x^-2 - x^-3'
    """
    if d.is_zero():
        raise ZeroPolynomial("inverse of the zero polynomial")
    if var is None:
        fv = d.free_vars()
        var = fv[0] if fv else (d.vars[0] if d.vars else "x")
    return series_divide(LaurentPoly.const(1, (var,)), d, direction, var=var, nterms=N)
