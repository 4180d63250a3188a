"""Exact rational parsing and linear algebra used throughout the analysis path.

Numbers entering the analysis path are converted to `fractions.Fraction`
by *decimal* parsing: the float 0.5 becomes 1/2 via its repr string, never
via its binary expansion.  Strings may be decimals ("0.125") or explicit
ratios ("7/9").
"""

from __future__ import annotations

import math
from fractions import Fraction


class ValidationError(ValueError):
    """Raised when user-supplied numeric data fails validation."""


class ResourceCapError(RuntimeError):
    """Raised when a request exceeds a configured enumeration cap."""


def to_fraction(value) -> Fraction:
    """Convert int/float/str/Fraction to an exact Fraction.

    Floats are parsed through repr so 0.1 -> 1/10, not the binary float.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ValidationError(f"boolean {value!r} is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite value {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {value!r} as a rational") from exc
    raise ValidationError(f"cannot interpret {value!r} as a number")


def format_fraction(x: Fraction) -> str:
    """Serialize a Fraction as "p/q" (or "p" for integers)."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


def solve_int_augmented(aug):
    """Solve the square integer system encoded as rows [a_0..a_{n-1}, b].

    Returns (numerators, denominator) with x_i = num_i / den and den > 0,
    or None when singular.  Bareiss triangularization followed by integer
    back-substitution of the Cramer-scaled unknowns y_i = x_i * det, so no
    rational arithmetic is needed.
    """
    n = len(aug)
    if n == 0:
        return [], 1
    aug = [list(row) for row in aug]
    prev = 1
    for k in range(n):
        pivot_row = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if pivot_row is None:
            return None
        if pivot_row != k:
            aug[k], aug[pivot_row] = aug[pivot_row], aug[k]
        pk = aug[k][k]
        for i in range(k + 1, n):
            aik = aug[i][k]
            rowi = aug[i]
            rowk = aug[k]
            for j in range(k + 1, n + 1):
                rowi[j] = (rowi[j] * pk - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = pk
    det = aug[n - 1][n - 1]
    ys = [0] * n
    for i in range(n - 1, -1, -1):
        acc = aug[i][n] * det
        for j in range(i + 1, n):
            acc -= aug[i][j] * ys[j]
        ys[i] = acc // aug[i][i]
    if det < 0:
        det = -det
        ys = [-y for y in ys]
    return ys, det


def solve_square_system(rows, rhs):
    """Solve A x = b exactly for square A with rational entries.

    Returns a list of Fractions, or None when A is singular.  Uses
    fraction-free Bareiss elimination on the denominator-cleared integer
    matrix, which is much faster than Fraction-by-Fraction Gaussian
    elimination for the small dense systems vertex enumeration produces.
    """
    n = len(rows)
    if n == 0:
        return []
    aug = []
    for i in range(n):
        row = [to_fraction(v) for v in rows[i]]
        row.append(to_fraction(rhs[i]))
        scale = math.lcm(*(f.denominator for f in row))
        aug.append([int(f * scale) for f in row])

    prev = 1
    perm_sign = 1  # unused numerically; kept for clarity of the algorithm
    for k in range(n):
        pivot_row = next((i for i in range(k, n) if aug[i][k] != 0), None)
        if pivot_row is None:
            return None
        if pivot_row != k:
            aug[k], aug[pivot_row] = aug[pivot_row], aug[k]
            perm_sign = -perm_sign
        pk = aug[k][k]
        for i in range(k + 1, n):
            aik = aug[i][k]
            rowi = aug[i]
            rowk = aug[k]
            for j in range(k + 1, n + 1):
                rowi[j] = (rowi[j] * pk - aik * rowk[j]) // prev
            rowi[k] = 0
        prev = pk

    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(aug[i][n])
        for j in range(i + 1, n):
            acc -= aug[i][j] * x[j]
        x[i] = acc / aug[i][i]
    return x
