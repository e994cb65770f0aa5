from __future__ import annotations

import pytest
from gmpy2 import mpq

from fkcable.linalg import InconsistentSystem, UnderdeterminedSystem, interpolate, solve_exact


def test_solve_square():
    assert solve_exact([[2, 1], [1, 3]], [3, 5]) == [mpq(4, 5), mpq(7, 5)]


def test_solve_overdetermined_consistent():
    assert solve_exact([[1, 0], [0, 1], [1, 1]], [1, 2, 3]) == [1, 2]


def test_inconsistent():
    with pytest.raises(InconsistentSystem):
        solve_exact([[1, 0], [0, 1], [1, 1]], [1, 2, 4])


def test_underdetermined():
    with pytest.raises(UnderdeterminedSystem):
        solve_exact([[1, 1]], [2])


def test_interpolate_exact_rationals():
    xs = list(range(1, 7))
    ys = [mpq(3, 7) * x**5 - x**2 + mpq(1, 2) for x in xs]
    c = interpolate(xs, ys)
    assert c == [mpq(1, 2), 0, -1, 0, 0, mpq(3, 7)]
