"""Exact linear programming over rationals.

A small dictionary simplex with Bland's anti-cycling rule (so termination
is guaranteed) powers three game-level operations: the maximin game value
with a Nash strategy for the row player, row-incentive values, and linear
functionals maximized over the payoff-guarantee polytope.  Everything is
Fraction arithmetic end to end; no floating point touches the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .game import PayoffMatrix, ProbVector
from .rational import ValidationError, to_fraction

FEASIBLE = "feasible"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpSolution:
    status: str
    optimum: Fraction | None = None
    x: tuple | None = None
    argmax: ProbVector | None = None


class _Dictionary:
    """Simplex dictionary: basic_i = const[i] - sum_j coef[i][j] * nonbasic_j."""

    def __init__(self, A, b, n_vars):
        m = len(A)
        self.nonbasic = list(range(n_vars))
        self.basic = list(range(n_vars, n_vars + m))
        self.coef = [[to_fraction(v) for v in row] for row in A]
        self.const = [to_fraction(v) for v in b]
        # objective: z = obj0 + sum_j obj[j] * nonbasic_j
        self.obj = [Fraction(0)] * n_vars
        self.obj0 = Fraction(0)

    def set_objective(self, c_by_var):
        """Express z = sum c_by_var[var]*var through the current dictionary."""
        self.obj = [c_by_var.get(v, Fraction(0)) for v in self.nonbasic]
        self.obj0 = Fraction(0)
        for i, bv in enumerate(self.basic):
            cb = c_by_var.get(bv, Fraction(0))
            if cb == 0:
                continue
            self.obj0 += cb * self.const[i]
            for j in range(len(self.nonbasic)):
                self.obj[j] -= cb * self.coef[i][j]

    def pivot(self, i, j):
        """Swap basic row i with nonbasic column j (column j then holds the
        coefficients of the departed basic variable)."""
        piv = self.coef[i][j]
        self.const[i] /= piv
        row = self.coef[i]
        for k in range(len(row)):
            row[k] /= piv
        row[j] = Fraction(1) / piv
        for r in range(len(self.basic)):
            if r == i:
                continue
            f = self.coef[r][j]
            if f == 0:
                continue
            self.const[r] -= f * self.const[i]
            rr = self.coef[r]
            for k in range(len(rr)):
                rr[k] -= f * row[k]
            rr[j] = -f * row[j]
        f = self.obj[j]
        if f != 0:
            self.obj0 += f * self.const[i]
            for k in range(len(row)):
                self.obj[k] -= f * row[k]
            self.obj[j] = -f * row[j]
        self.basic[i], self.nonbasic[j] = self.nonbasic[j], self.basic[i]

    def bland_step(self):
        """One Bland pivot toward maximizing z. Returns 'optimal'/'unbounded'/None."""
        enter_j = None
        enter_var = None
        for j, var in enumerate(self.nonbasic):
            if self.obj[j] > 0 and (enter_var is None or var < enter_var):
                enter_j, enter_var = j, var
        if enter_j is None:
            return "optimal"
        leave_i = None
        best = None
        leave_var = None
        for i in range(len(self.basic)):
            a = self.coef[i][enter_j]
            if a > 0:
                ratio = self.const[i] / a
                if best is None or ratio < best or (ratio == best and self.basic[i] < leave_var):
                    best, leave_i, leave_var = ratio, i, self.basic[i]
        if leave_i is None:
            return "unbounded"
        self.pivot(leave_i, enter_j)
        return None

    def solve_current(self):
        while True:
            state = self.bland_step()
            if state is not None:
                return state

    def values(self, n_vars):
        out = [Fraction(0)] * n_vars
        for i, bv in enumerate(self.basic):
            if bv < n_vars:
                out[bv] = self.const[i]
        return out


def maximize(c, A, b) -> LpSolution:
    """Maximize c.x subject to A x <= b, x >= 0 (exact rationals)."""
    n = len(c)
    d = _Dictionary(A, b, n)
    if any(v < 0 for v in d.const):
        # Phase 1 with the single-artificial-variable trick.
        art = n + len(A) + 1
        d.nonbasic.append(art)
        for row in d.coef:
            row.append(Fraction(-1))
        d.set_objective({art: Fraction(-1)})
        worst = min(range(len(d.const)), key=lambda i: d.const[i])
        d.pivot(worst, len(d.nonbasic) - 1)
        state = d.solve_current()
        if state != "optimal" or d.obj0 != 0:
            return LpSolution(status=INFEASIBLE)
        if art in d.basic:
            i = d.basic.index(art)
            j = next((k for k in range(len(d.nonbasic)) if d.coef[i][k] != 0), None)
            if j is None:
                # Redundant row; the artificial variable is stuck at zero.
                del d.basic[i], d.coef[i], d.const[i]
            else:
                d.pivot(i, j)
        j = d.nonbasic.index(art)
        del d.nonbasic[j]
        for row in d.coef:
            del row[j]
    d.set_objective({i: to_fraction(ci) for i, ci in enumerate(c)})
    state = d.solve_current()
    if state == "unbounded":
        return LpSolution(status=UNBOUNDED)
    return LpSolution(status=FEASIBLE, optimum=d.obj0, x=tuple(d.values(n)))


def game_value(game: PayoffMatrix) -> LpSolution:
    """The value w* of the game and a maximin (Nash) strategy for the row
    player, via the standard LP  max w  s.t.  p^T U >= w 1,  p in simplex.

    Always feasible and bounded for finite tables.  With multiple optima
    the Bland-order vertex is returned; callers must treat it as *a* Nash
    strategy, never *the* Nash strategy.
    """
    n, nc = game.n, game.n_cols
    shift = game.m_lo
    # Variables: p_0..p_{n-1}, t = w - m_lo >= 0.
    c = [Fraction(0)] * n + [Fraction(1)]
    A = []
    b = []
    for j in range(nc):
        A.append([-(game.entries[i][j] - shift) for i in range(n)] + [Fraction(1)])
        b.append(Fraction(0))
    A.append([Fraction(1)] * n + [Fraction(0)])
    b.append(Fraction(1))
    A.append([Fraction(-1)] * n + [Fraction(0)])
    b.append(Fraction(-1))
    sol = maximize(c, A, b)
    assert sol.status == FEASIBLE
    p = ProbVector(sol.x[:n])
    return LpSolution(status=FEASIBLE, optimum=sol.optimum + shift, x=sol.x, argmax=p)


def incentive_value(game: PayoffMatrix, a) -> Fraction:
    """Value of the game with an extra payoff a_i for playing row i.

    Satisfies the shift identity: adding c to every incentive adds c.
    """
    return game_value(game.shifted_rows(a)).optimum


def max_linear_over_polytope(game: PayoffMatrix, w, a) -> LpSolution:
    """Maximize sum a_i p_i over the strategies guaranteeing payoff w.

    Infeasible exactly when w exceeds the game value.
    """
    if len(a) != game.n:
        raise ValidationError(f"objective vector has length {len(a)}, expected {game.n}")
    w = to_fraction(w)
    n, nc = game.n, game.n_cols
    c = [to_fraction(ai) for ai in a]
    A = []
    b = []
    for j in range(nc):
        A.append([-game.entries[i][j] for i in range(n)])
        b.append(-w)
    A.append([Fraction(1)] * n)
    b.append(Fraction(1))
    A.append([Fraction(-1)] * n)
    b.append(Fraction(-1))
    sol = maximize(c, A, b)
    if sol.status != FEASIBLE:
        return LpSolution(status=INFEASIBLE)
    return LpSolution(status=FEASIBLE, optimum=sol.optimum, x=sol.x, argmax=ProbVector(sol.x[:n]))
