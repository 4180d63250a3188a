"""Information measures over finite distributions.

Shannon/conditional/Renyi entropy, total-variation distance, the order-2
divergence log2(1 + chi^2), conditional collision entropy, and the
typical-set lower bound certifying the smooth collision entropy of i.i.d.
blocks.  Masses are held as exact rationals; entropies are evaluated in
double precision (exact-rational logs do not exist), so sandwich-style
comparisons downstream use 1e-9 tolerances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .game import ProbVector
from .rational import ValidationError, to_fraction


@dataclass(frozen=True)
class JointPmf:
    """A finite 2-D joint distribution p(x, y), rows indexed by x."""

    table: tuple  # tuple of row tuples, Fractions

    def __post_init__(self):
        rows = tuple(tuple(to_fraction(v) for v in row) for row in self.table)
        if not rows or not rows[0]:
            raise ValidationError("joint pmf table is empty")
        if any(len(r) != len(rows[0]) for r in rows):
            raise ValidationError("joint pmf table is ragged")
        if any(v < 0 for r in rows for v in r):
            raise ValidationError("joint pmf entries must be nonnegative")
        total = sum((v for r in rows for v in r), Fraction(0))
        if total != 1:
            if abs(float(total) - 1.0) > 1e-12:
                raise ValidationError(f"joint pmf mass is {float(total)}, not 1")
            rows = tuple(tuple(v / total for v in row) for row in rows)
        object.__setattr__(self, "table", rows)

    @property
    def nx(self):
        return len(self.table)

    @property
    def ny(self):
        return len(self.table[0])

    def p_x(self) -> tuple:
        return tuple(sum(row, Fraction(0)) for row in self.table)

    def p_y(self) -> tuple:
        return tuple(
            sum((self.table[x][y] for x in range(self.nx)), Fraction(0)) for y in range(self.ny)
        )

    def cond_x_given_y(self, y) -> tuple:
        py = self.p_y()[y]
        if py == 0:
            raise ValidationError(f"conditioning on zero-probability column {y}")
        return tuple(self.table[x][y] / py for x in range(self.nx))

    @staticmethod
    def from_marginal_and_channel(px, channel) -> "JointPmf":
        """Assemble p(x,y) = px[x] * channel[x][y]."""
        px = [to_fraction(v) for v in px]
        return JointPmf(
            tuple(
                tuple(px[x] * to_fraction(c) for c in channel[x]) for x in range(len(px))
            )
        )

    @staticmethod
    def independent(px, py) -> "JointPmf":
        px = [to_fraction(v) for v in px]
        py = [to_fraction(v) for v in py]
        return JointPmf(tuple(tuple(a * b for b in py) for a in px))


def _masses(p):
    if isinstance(p, ProbVector):
        return list(p.probs)
    if isinstance(p, JointPmf):
        return [v for row in p.table for v in row]
    return [to_fraction(v) for v in p]


def entropy(p) -> float:
    """Shannon entropy in bits, with 0*log(0) = 0."""
    return -sum(float(q) * math.log2(float(q)) for q in _masses(p) if q > 0)


def conditional_entropy(j: JointPmf) -> float:
    """H(X|Y) = sum_y p(y) H(X|Y=y) in bits."""
    h = 0.0
    py = j.p_y()
    for y in range(j.ny):
        if py[y] == 0:
            continue
        fy = float(py[y])
        for x in range(j.nx):
            pxy = float(j.table[x][y])
            if pxy > 0:
                h -= pxy * math.log2(pxy / fy)
    return h


def renyi_entropy(p, alpha) -> float:
    """Renyi entropy of order alpha (alpha > 0, alpha != 1; inf allowed)."""
    masses = [float(q) for q in _masses(p)]
    if alpha == math.inf:
        return -math.log2(max(masses))
    alpha = float(alpha)
    if alpha <= 0:
        raise ValidationError("Renyi order must be positive")
    if alpha == 1.0:
        raise ValidationError("order 1 is Shannon entropy; call entropy()")
    return math.log2(sum(q**alpha for q in masses if q > 0)) / (1.0 - alpha)


def tv_distance(p, q):
    """Total variation (1/2) sum |p - q|; exact Fraction on rational inputs."""
    pm, qm = _masses(p), _masses(q)
    if len(pm) != len(qm):
        raise ValidationError(f"shape mismatch: {len(pm)} vs {len(qm)} masses")
    return sum((abs(a - b) for a, b in zip(pm, qm)), Fraction(0)) / 2


def d2_divergence(p, q) -> float:
    """log2 sum p_i^2/q_i = log2(1 + chi^2(p, q)), in bits; may be +inf.

    Conventions: a 0/0 term is 0; p_i > 0 with q_i = 0 gives +inf.
    """
    pm, qm = _masses(p), _masses(q)
    if len(pm) != len(qm):
        raise ValidationError(f"shape mismatch: {len(pm)} vs {len(qm)} masses")
    acc = Fraction(0)
    for a, b in zip(pm, qm):
        if a == 0:
            continue
        if b == 0:
            return math.inf
        acc += a * a / b
    return math.log2(float(acc))


def collision_entropy_cond(j: JointPmf, q_y=None) -> float:
    """Conditional collision entropy -log2 sum p(x,y)^2 / q(y) in bits.

    With q_y=None, returns the maximum over reference distributions, which
    by Cauchy-Schwarz is attained at q(y) proportional to
    sqrt(sum_x p(x,y)^2) and equals -2 log2 sum_y sqrt(sum_x p(x,y)^2).
    """
    col_sq = [
        sum((j.table[x][y] ** 2 for x in range(j.nx)), Fraction(0)) for y in range(j.ny)
    ]
    if q_y is None:
        return -2.0 * math.log2(sum(math.sqrt(float(c)) for c in col_sq))
    q = [to_fraction(v) for v in q_y]
    if len(q) != j.ny:
        raise ValidationError("reference distribution is on the wrong alphabet")
    acc = Fraction(0)
    for y in range(j.ny):
        if col_sq[y] == 0:
            continue
        if q[y] == 0:
            return -math.inf
        acc += col_sq[y] / q[y]
    return -math.log2(float(acc))


def cond_self_information_variance(j: JointPmf) -> float:
    """Variance of -log2 p(X|Y) under the joint; drives the Chebyshev bound."""
    py = j.p_y()
    mean = conditional_entropy(j)
    var = 0.0
    for x in range(j.nx):
        for y in range(j.ny):
            pxy = float(j.table[x][y])
            if pxy > 0:
                val = -math.log2(pxy / float(py[y]))
                var += pxy * (val - mean) ** 2
    return var


@dataclass(frozen=True)
class TypicalBound:
    """A certified lower bound on the smooth collision entropy of a block."""

    bound: float  # n*(H(X|Y)-eps), clamped at 0
    atypical_mass: float
    certified: bool
    method: str  # "exact" | "chebyshev"
    note: str = ""


# Above this many type classes the exact enumeration is abandoned for the
# Chebyshev tail bound on the self-information average.
_MAX_TYPE_CLASSES = 2_000_000


def typical_collision_bound(j: JointPmf, n: int, eps) -> TypicalBound:
    """Lower-bound the eps-smooth collision entropy of the n-fold i.i.d.
    block (X^n, Y^n) by n*(H(X|Y)-eps).

    The bound is certified when the probability that a block falls outside
    the conditional-self-information typical set is at most eps; that mass
    is computed exactly by enumerating type classes of the support when
    small enough, else bounded by Chebyshev.
    """
    if n < 1:
        raise ValidationError("block length must be >= 1")
    eps_f = float(eps)
    if eps_f <= 0:
        raise ValidationError("eps must be positive")
    h = conditional_entropy(j)
    bound = n * (h - eps_f)
    note = ""
    if bound <= 0:
        bound = 0.0
        note = "eps >= H(X|Y): the bound is vacuous"

    py = j.p_y()
    cells = []  # (probability, -log2 p(x|y)) over the support
    for x in range(j.nx):
        for y in range(j.ny):
            pxy = j.table[x][y]
            if pxy > 0:
                cells.append((pxy, -math.log2(float(pxy) / float(py[y]))))

    k = len(cells)
    if math.comb(n + k - 1, k - 1) <= _MAX_TYPE_CLASSES:
        atypical = _atypical_mass_exact(cells, n, h, eps_f)
        method = "exact"
    else:
        var = cond_self_information_variance(j)
        atypical = min(1.0, var / (n * eps_f * eps_f))
        method = "chebyshev"
    certified = atypical <= eps_f
    if not certified and not note:
        note = "atypical mass exceeds eps; bound not certified at this n"
    return TypicalBound(
        bound=bound, atypical_mass=float(atypical), certified=certified, method=method, note=note
    )


def _atypical_mass_exact(cells, n, h, eps):
    """Sum the exact mass of blocks whose average conditional self-information
    deviates from H(X|Y) by more than eps, via type-class enumeration."""
    k = len(cells)
    pow_tables = [[Fraction(1)] * (n + 1) for _ in range(k)]
    for c in range(k):
        for t in range(1, n + 1):
            pow_tables[c][t] = pow_tables[c][t - 1] * cells[c][0]
    fact = [math.factorial(t) for t in range(n + 1)]

    atypical = Fraction(0)
    counts = [0] * k

    def rec(idx, remaining):
        nonlocal atypical
        if idx == k - 1:
            counts[idx] = remaining
            avg = sum(counts[c] * cells[c][1] for c in range(k)) / n
            if abs(avg - h) > eps + 1e-12:
                coef = fact[n]
                mass = Fraction(1)
                for c in range(k):
                    coef //= fact[counts[c]]
                    mass *= pow_tables[c][counts[c]]
                atypical += coef * mass
            return
        for t in range(remaining + 1):
            counts[idx] = t
            rec(idx + 1, remaining - t)

    rec(0, n)
    return float(atypical)
