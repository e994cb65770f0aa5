"""Exact rational linear algebra helpers (FLINT-backed)."""

from __future__ import annotations

from typing import Sequence

import flint
from gmpy2 import mpq


class UnderdeterminedSystem(ArithmeticError):
    pass


class InconsistentSystem(ArithmeticError):
    pass


def _fq(c) -> flint.fmpq:
    c = mpq(c)
    return flint.fmpq(int(c.numerator), int(c.denominator))


def _mq(c: flint.fmpq) -> mpq:
    return mpq(int(c.p), int(c.q))


def solve_exact(rows: Sequence[Sequence], rhs: Sequence) -> list[mpq]:
    """Unique solution of the (possibly overdetermined) system ``rows @ x = rhs``.

    Raises :class:`InconsistentSystem` if no solution exists and
    :class:`UnderdeterminedSystem` if the solution is not unique.
    """
    m = len(rows)
    if m == 0:
        raise UnderdeterminedSystem("empty system")
    n = len(rows[0])
    flat = []
    for row, b in zip(rows, rhs):
        flat.extend(_fq(v) for v in row)
        flat.append(_fq(b))
    aug = flint.fmpq_mat(m, n + 1, flat)
    red, rank = aug.rref()
    # A pivot in the augmented column means 0 = nonzero.
    for i in range(rank):
        if all(red[i, j] == 0 for j in range(n)):
            raise InconsistentSystem("linear system has no solution")
    if rank < n:
        raise UnderdeterminedSystem(f"rank {rank} < {n} unknowns")
    return [_mq(red[i, n]) for i in range(n)]


def interpolate(xs: Sequence, ys: Sequence) -> list[mpq]:
    """Monomial coefficients (lowest first) of the interpolant through ``(xs, ys)``.

    Newton divided differences, exact.

    >>> [int(c) for c in interpolate([0, 1, 2], [1, 2, 5])]
    [1, 0, 1]
    """
    xs = [mpq(x) for x in xs]
    coef = [mpq(y) for y in ys]
    n = len(xs)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j])
    # Expand the Newton form by Horner's scheme.
    poly = [mpq(0)] * n
    for k in range(n - 1, -1, -1):
        # poly = poly * (x - xs[k]) + coef[k]
        new = [mpq(0)] * n
        for i in range(n - 1):
            new[i + 1] += poly[i]
            new[i] -= poly[i] * xs[k]
        new[0] += coef[k]
        poly = new
    return poly
