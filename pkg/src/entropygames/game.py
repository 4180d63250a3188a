"""Payoff-matrix model: scalar game parameters, security levels, polytope
membership, and the direct-sum operator.

All payoff and probability arithmetic here is exact-rational.  Rows and
columns are 0-indexed internally (the CLI prints 1-indexed labels).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .rational import ValidationError, to_fraction


@dataclass(frozen=True)
class ProbVector:
    """A finite pmf / mixed strategy with exact rational entries."""

    probs: tuple

    def __post_init__(self):
        object.__setattr__(self, "probs", tuple(to_fraction(p) for p in self.probs))
        if any(p < 0 for p in self.probs):
            raise ValidationError("probabilities must be nonnegative")
        if sum(self.probs, Fraction(0)) != 1:
            raise ValidationError("probabilities must sum to exactly 1")

    def __len__(self):
        return len(self.probs)

    def __iter__(self):
        return iter(self.probs)

    def __getitem__(self, i):
        return self.probs[i]

    @staticmethod
    def unit(k: int, i: int) -> "ProbVector":
        """The deterministic strategy e_i on k actions."""
        return ProbVector(tuple(Fraction(int(j == i)) for j in range(k)))


@dataclass(frozen=True)
class PayoffMatrix:
    """An n x n_cols zero-sum payoff table with cached scalar parameters.

    m_lo / m_hi are the extreme entries, v the pure-strategy security
    level max_i min_j u[i][j].  Immutable, safe to share across threads.
    """

    entries: tuple  # tuple of row tuples, Fractions
    n: int
    n_cols: int
    m_lo: Fraction
    m_hi: Fraction
    v: Fraction

    def row(self, i):
        return self.entries[i]

    def column(self, j):
        return tuple(self.entries[i][j] for i in range(self.n))

    @property
    def abs_max(self) -> Fraction:
        """Payoff scale M = max |u_ij|, used by the payoff-TV bridge."""
        return max(abs(self.m_lo), abs(self.m_hi))

    def shifted_rows(self, incentives) -> "PayoffMatrix":
        """The table with incentives[i] added to every entry of row i."""
        if len(incentives) != self.n:
            raise ValidationError(
                f"incentive vector has length {len(incentives)}, expected {self.n}"
            )
        inc = [to_fraction(a) for a in incentives]
        return validate_game(
            [[self.entries[i][j] + inc[i] for j in range(self.n_cols)] for i in range(self.n)]
        )


def validate_game(raw) -> PayoffMatrix:
    """Build a PayoffMatrix from a grid of numbers, naming any bad cell."""
    rows = list(raw)
    if not rows:
        raise ValidationError("payoff matrix is empty")
    width = None
    entries = []
    for i, row in enumerate(rows):
        row = list(row)
        if not row:
            raise ValidationError(f"row {i + 1} is empty")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ValidationError(
                f"ragged matrix: row {i + 1} has {len(row)} entries, expected {width}"
            )
        parsed = []
        for j, cell in enumerate(row):
            try:
                parsed.append(to_fraction(cell))
            except ValidationError as exc:
                raise ValidationError(f"bad entry at row {i + 1}, column {j + 1}: {exc}") from exc
        entries.append(tuple(parsed))

    flat = [x for row in entries for x in row]
    m_lo = min(flat)
    m_hi = max(flat)
    v = max(min(row) for row in entries)
    return PayoffMatrix(
        entries=tuple(entries), n=len(entries), n_cols=width, m_lo=m_lo, m_hi=m_hi, v=v
    )


def security_level(game: PayoffMatrix, p: ProbVector) -> Fraction:
    """Worst-column expected payoff of mixed strategy p (exact)."""
    if len(p) != game.n:
        raise ValidationError(f"strategy has length {len(p)}, expected {game.n}")
    return min(
        sum((p[i] * game.entries[i][j] for i in range(game.n)), Fraction(0))
        for j in range(game.n_cols)
    )


def in_polytope(game: PayoffMatrix, w, p: ProbVector) -> bool:
    """True iff p guarantees payoff at least w against every column."""
    return security_level(game, p) >= to_fraction(w)


def direct_sum(u1: PayoffMatrix, u2: PayoffMatrix) -> PayoffMatrix:
    """The game where both component games are played simultaneously and
    payoffs add.  Row (i1,i2) / column (j1,j2) indices are row-major with
    the second coordinate fastest.
    """
    rows = []
    for i1 in range(u1.n):
        for i2 in range(u2.n):
            rows.append(
                tuple(
                    u1.entries[i1][j1] + u2.entries[i2][j2]
                    for j1 in range(u1.n_cols)
                    for j2 in range(u2.n_cols)
                )
            )
    return validate_game(rows)
