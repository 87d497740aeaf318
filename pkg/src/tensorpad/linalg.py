"""Exact linear algebra over the rationals; no floating point anywhere.

Rank uses fraction-free (Bareiss) elimination on integer-scaled rows; solving
and dependency certificates use exact Gaussian elimination on Fractions.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm


def _integer_rows(rows):
    out = []
    for row in rows:
        denom = 1
        for x in row:
            denom = lcm(denom, Fraction(x).denominator)
        out.append([int(Fraction(x) * denom) for x in row])
    return out


def rank(rows) -> int:
    """Fraction-free Bareiss elimination; exact rank."""
    if not rows:
        return 0
    m = _integer_rows(rows)
    n_rows, n_cols = len(m), len(m[0])
    prev = 1
    r = 0
    for c in range(n_cols):
        pivot = None
        for i in range(r, n_rows):
            if m[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        for i in range(r + 1, n_rows):
            for j in range(c + 1, n_cols):
                m[i][j] = (m[r][c] * m[i][j] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        r += 1
        if r == n_rows:
            break
    return r


def solve_combination(rows, target):
    """Coefficients x with sum(x_i * rows_i) == target, or None when the
    target lies outside the span.  Free coefficients are set to zero."""
    k = len(rows)
    if k == 0:
        return [] if all(Fraction(t) == 0 for t in target) else None
    n = len(rows[0])
    # Columns of the system are the rows; solve A x = t with A: n x k.
    a = [[Fraction(rows[i][j]) for i in range(k)] for j in range(n)]
    b = [Fraction(t) for t in target]
    piv_of_col: list[int | None] = [None] * k
    r = 0
    for c in range(k):
        pivot = None
        for i in range(r, n):
            if a[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        b[r], b[pivot] = b[pivot], b[r]
        inv = a[r][c]
        a[r] = [x / inv for x in a[r]]
        b[r] = b[r] / inv
        for i in range(n):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                b[i] -= f * b[r]
        piv_of_col[c] = r
        r += 1
    x = [Fraction(0)] * k
    for c in range(k):
        if piv_of_col[c] is not None:
            x[c] = b[piv_of_col[c]]
    # Consistency: rows below the pivots must have zero rhs.
    for i in range(n):
        lhs = sum((a[i][c] * x[c] for c in range(k)), Fraction(0))
        if lhs != b[i]:
            return None
    return x


def dependency(rows):
    """First linear dependency among the rows: a nonzero coefficient vector c
    with sum(c_i * rows_i) == 0, or None when the rows are independent."""
    echelon: list[tuple[list[Fraction], list[Fraction]]] = []
    for idx, row in enumerate(rows):
        vec = [Fraction(x) for x in row]
        combo = [Fraction(0)] * len(rows)
        combo[idx] = Fraction(1)
        for evec, ecombo in echelon:
            lead = next((j for j, x in enumerate(evec) if x != 0), None)
            if lead is not None and vec[lead] != 0:
                f = vec[lead] / evec[lead]
                vec = [x - f * y for x, y in zip(vec, evec)]
                combo = [x - f * y for x, y in zip(combo, ecombo)]
        if all(x == 0 for x in vec):
            return combo
        echelon.append((vec, combo))
    return None
