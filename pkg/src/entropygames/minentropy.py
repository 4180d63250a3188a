"""The min-entropy curve of a zero-sum game and its bounds.

F(w) is the least Shannon entropy of any mixed strategy guaranteeing
payoff w.  Entropy is concave, so the minimum over the guarantee polytope
sits at a vertex; vertices are enumerated combinatorially with exact
rational solves (the problem is NP-hard in general, so action counts are
capped).  Around F live its inverse J, the upper concave envelope J_cav,
two LP-backed bounds (G1 exact/relaxed, Q2), three closed forms (G2, G3,
G4), the Nash-interpolation bound Q1, and the sliced-polytope bound Q3.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .game import PayoffMatrix, ProbVector
from .info import entropy
from .lp import FEASIBLE, game_value, incentive_value, max_linear_over_polytope
from .rational import ResourceCapError, ValidationError, solve_int_augmented, to_fraction

MAX_ACTIONS = 10
MAX_SUBSETS = 2_000_000

SANDWICH_TOL = 1e-9


def binary_entropy(x) -> float:
    x = float(x)
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


@dataclass(frozen=True)
class VertexSet:
    """All vertices of the guarantee polytope at level w.

    Constraint indices: 0..n-1 are the nonnegativity facets p_i >= 0,
    n..n+n_cols-1 the column facets sum_i p_i u[i][j] >= w.
    """

    w: Fraction
    vertices: tuple
    active_sets: tuple

    def __len__(self):
        return len(self.vertices)


def polytope_vertices(
    game: PayoffMatrix,
    w,
    equality_cols=(),
    cap_actions: int = MAX_ACTIONS,
    cap_subsets: int = MAX_SUBSETS,
) -> VertexSet:
    """Enumerate the vertices of {p in simplex : p^T U >= w 1} exactly,
    optionally slicing with equalities sum_i p_i u[i][j] = w for j in
    equality_cols.  Empty exactly when w exceeds the game value.
    """
    w = to_fraction(w)
    n, nc = game.n, game.n_cols
    if n > cap_actions:
        raise ResourceCapError(
            f"combinatorial blow-up: {n} actions exceeds the cap of {cap_actions} "
            f"(~{math.comb(n + nc, n - 1)} constraint subsets)"
        )
    # integer constraint pool: row . p >= rhs, denominators cleared per row
    pool = []
    rhs = []
    for i in range(n):
        pool.append([int(k == i) for k in range(n)])
        rhs.append(0)
    for j in range(nc):
        col = game.column(j)
        scale = math.lcm(w.denominator, *(c.denominator for c in col))
        pool.append([int(c * scale) for c in col])
        rhs.append(int(w * scale))

    eq_aug = [[1] * n + [1]]  # simplex equality
    for j in equality_cols:
        eq_aug.append(pool[n + j] + [rhs[n + j]])

    need = n - len(eq_aug)
    if need < 0:
        return VertexSet(w=w, vertices=(), active_sets=())
    if math.comb(len(pool), need) > cap_subsets:
        raise ResourceCapError(
            f"combinatorial blow-up: {math.comb(len(pool), need)} constraint subsets "
            f"exceed the cap of {cap_subsets}"
        )

    seen = {}
    for subset in itertools.combinations(range(len(pool)), need):
        aug = eq_aug + [pool[k] + [rhs[k]] for k in subset]
        sol = solve_int_augmented(aug)
        if sol is None:
            continue
        ys, den = sol
        if any(y < 0 for y in ys):
            continue
        ok = True
        for k in range(n, len(pool)):
            row = pool[k]
            if sum(row[i] * ys[i] for i in range(n)) < rhs[k] * den:
                ok = False
                break
        if ok:
            g = math.gcd(den, *ys)
            seen.setdefault(tuple(y // g for y in ys) + (den // g,), None)

    vertices = []
    active_sets = []
    for key in seen:
        ys, den = key[:-1], key[-1]
        vertices.append(ProbVector(tuple(Fraction(y, den) for y in ys)))
        tight = tuple(
            k
            for k in range(len(pool))
            if sum(pool[k][i] * ys[i] for i in range(n)) == rhs[k] * den
        )
        active_sets.append(tight)
    return VertexSet(w=w, vertices=tuple(vertices), active_sets=tuple(active_sets))


def min_entropy_point(game: PayoffMatrix, w):
    """(F(w), minimizing vertex).  F is 0 below the pure security level and
    +inf above the game value (empty polytope)."""
    w = to_fraction(w)
    if w <= game.v:
        i_star = max(range(game.n), key=lambda i: min(game.row(i)))
        return 0.0, ProbVector.unit(game.n, i_star)
    vs = polytope_vertices(game, w)
    if not vs.vertices:
        return math.inf, None
    best_h, best_p = math.inf, None
    for p in vs.vertices:
        h = entropy(p)
        if h < best_h:
            best_h, best_p = h, p
    return best_h, best_p


def min_entropy(game: PayoffMatrix, w) -> float:
    """F(w): bits of randomness needed to guarantee payoff w."""
    return min_entropy_point(game, w)[0]


def payoff_at_entropy(game: PayoffMatrix, h) -> Fraction:
    """J(h) = max{w : F(w) <= h}, by bisection with exact F probes.

    F is strictly increasing on [v, w*], so 64 dyadic halvings pin the
    threshold to (w*-v)/2^64, far below 1e-12.
    """
    h = float(h)
    if h < 0:
        raise ValidationError("entropy budget must be nonnegative")
    w_star = game_value(game).optimum
    if min_entropy(game, w_star) <= h:
        return w_star
    lo, hi = game.v, w_star  # F(lo) <= h < F(hi)
    for _ in range(64):
        mid = (lo + hi) / 2
        if min_entropy(game, mid) <= h:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class EnvelopePoint:
    h: float
    w: Fraction
    strategy: ProbVector


def envelope_points(game: PayoffMatrix, grid_size: int = 129):
    """Upper-concave-envelope vertices of the (F(w), w) curve, sampled on a
    uniform w grid of [v, w*] plus the zero-entropy endpoint."""
    if grid_size < 3:
        raise ValidationError("grid_size must be at least 3")
    w_star = game_value(game).optimum
    pts = []
    h0, p0 = min_entropy_point(game, game.v)
    pts.append(EnvelopePoint(0.0, game.v, p0))
    if w_star > game.v:
        for k in range(grid_size):
            w = game.v + Fraction(k, grid_size - 1) * (w_star - game.v)
            h, p = min_entropy_point(game, w)
            pts.append(EnvelopePoint(h, w, p))
    # keep the highest payoff at any duplicated entropy
    pts.sort(key=lambda t: (t.h, float(t.w)))
    dedup = []
    for t in pts:
        if dedup and t.h == dedup[-1].h:
            dedup[-1] = t
        else:
            dedup.append(t)
    hull = []
    for t in dedup:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b when it lies on or below segment a-t
            if (float(b.w) - float(a.w)) * (t.h - a.h) <= (float(t.w) - float(a.w)) * (
                b.h - a.h
            ):
                hull.pop()
            else:
                break
        hull.append(t)
    return hull


def envelope_support(game: PayoffMatrix, h, grid_size: int = 129):
    """The envelope segment supporting entropy budget h: two endpoints and
    the mixing weight gamma such that gamma*h_hi + (1-gamma)*h_lo = h."""
    h = float(h)
    hull = envelope_points(game, grid_size)
    if h >= hull[-1].h:
        return hull[-1], hull[-1], 1.0
    if h <= hull[0].h:
        return hull[0], hull[0], 1.0
    for a, b in zip(hull, hull[1:]):
        if a.h <= h <= b.h:
            gamma = (h - a.h) / (b.h - a.h)
            return a, b, gamma
    raise AssertionError("unreachable: h inside hull range")


def payoff_envelope(game: PayoffMatrix, h, grid_size: int = 129):
    """J_cav(h): the upper concave envelope of J evaluated at h, clamped to
    the game value once the entropy budget stops binding.  Resolution is
    limited by the grid spacing (see grid_size)."""
    a, b, gamma = envelope_support(game, h, grid_size)
    if a is b:
        return a.w
    return float(a.w) + gamma * (float(b.w) - float(a.w))


def row_incentive_values(game: PayoffMatrix):
    """Val(U + e_i 1^T) for every row i (w-independent, cache per game)."""
    out = []
    for i in range(game.n):
        inc = [Fraction(int(k == i)) for k in range(game.n)]
        out.append(incentive_value(game, inc))
    return tuple(out)


def max_prob_solutions(game: PayoffMatrix, w):
    """Per-row LP solutions maximizing p_i over the guarantee polytope."""
    sols = []
    for i in range(game.n):
        a = [Fraction(int(k == i)) for k in range(game.n)]
        sols.append(max_linear_over_polytope(game, w, a))
    return sols


def bound_max_prob(game: PayoffMatrix, w, relaxed: bool = False, incentives=None) -> float:
    """G1: -log2 of the largest single-action probability available at
    guarantee level w.  The relaxed form replaces each LP with the
    incentive-value cap Val(U + e_i 1^T) - w; exact >= relaxed always."""
    w = to_fraction(w)
    if relaxed:
        if incentives is None:
            incentives = row_incentive_values(game)
        best = max(inc - w for inc in incentives)
        if best <= 0:
            return math.inf
        return -math.log2(float(best))
    sols = max_prob_solutions(game, w)
    if any(s.status != FEASIBLE for s in sols):
        return math.inf
    return -math.log2(float(max(s.optimum for s in sols)))


def closed_form_lower_bounds(game: PayoffMatrix, w) -> dict:
    """The explicit lower bounds G2, G3, G4 from the scalar parameters.

    G4 uses only the maximum entry and the pure security level; it is the
    tightest bound knowing nothing else about the table.
    """
    w = to_fraction(w)
    if w < game.v or w > game.m_hi:
        raise ValidationError(f"w={w} outside [{game.v}, {game.m_hi}]")
    v, m_lo, m_hi = game.v, game.m_lo, game.m_hi
    if w == v:
        return {"G2": 0.0, "G3": 0.0, "G4": 0.0}
    if w == m_hi:
        # w = v = m_hi was handled above; here the formulas blow up as limits
        g3_arg = 1 - (w - v) / (m_hi - m_lo)
        g3 = math.inf if g3_arg == 0 else -math.log2(float(g3_arg))
        return {"G2": math.inf, "G3": g3, "G4": math.inf}
    g2 = math.log2(float(1 + (w - v) ** 2 / ((w - m_lo) * (m_hi - w))))
    g3 = -math.log2(float(1 - (w - v) / (m_hi - m_lo)))
    r = (m_hi - w) / (m_hi - v)
    k = (m_hi - v) // (m_hi - w)
    kr = k * r
    g4 = -float(kr) * math.log2(float(r))
    if kr < 1:
        g4 -= float(1 - kr) * math.log2(float(1 - kr))
    return {"G2": g2, "G3": g3, "G4": g4}


def upper_bounds(game: PayoffMatrix, w, nash=None, maxprob=None) -> dict:
    """Q1 (Nash interpolation), Q2 (max-prob argmax entropies), Q3
    (max-entropy vertex of each tight-column slice; vertex-restricted).

    Q3's inner maximization is concave and need not peak at a vertex; the
    vertex-restricted value is still an upper bound on F because every
    slice vertex guarantees w.  Columns with empty slices contribute +inf.
    """
    w = to_fraction(w)
    if nash is None:
        nash = game_value(game)
    w_star = nash.optimum
    if w < game.v or w > w_star:
        raise ValidationError(f"w={w} outside [{game.v}, {w_star}]")
    h_star = entropy(nash.argmax)
    frac = Fraction(1) if w_star == game.v else (w - game.v) / (w_star - game.v)
    q1 = min(h_star, float(frac) * h_star + binary_entropy(frac))

    if maxprob is None:
        maxprob = max_prob_solutions(game, w)
    q2 = min(entropy(s.argmax) for s in maxprob)

    q3 = math.inf
    for j in range(game.n_cols):
        vs = polytope_vertices(game, w, equality_cols=(j,))
        if vs.vertices:
            q3 = min(q3, max(entropy(p) for p in vs.vertices))
    return {"Q1": q1, "Q2": q2, "Q3": q3, "q3_vertex_restricted": True}


@dataclass(frozen=True)
class BoundsRow:
    w: Fraction
    F: float
    G1: float
    G1_relaxed: float
    G2: float
    G3: float
    G4: float
    Q1: float
    Q2: float
    Q3: float


@dataclass(frozen=True)
class BoundsReport:
    """Per-w table of the min-entropy value and all bound families.

    Construction enforces the sandwich max(G*) <= F <= min(Q*) within the
    float-log tolerance and fails loudly on any violation.
    """

    rows: tuple
    v: Fraction
    w_star: Fraction
    grid_size: int = 0
    q3_vertex_restricted: bool = True
    nash_strategy: ProbVector | None = None

    CSV_COLUMNS = ("w", "F", "G1", "G1_relaxed", "G2", "G3", "G4", "Q1", "Q2", "Q3")

    def write_csv(self, fh, header_lines=()):
        from .rational import format_fraction

        for line in header_lines:
            fh.write(f"# {line}\r\n")
        fh.write(",".join(self.CSV_COLUMNS) + "\r\n")
        for r in self.rows:
            cells = [format_fraction(r.w)]
            for name in self.CSV_COLUMNS[1:]:
                val = getattr(r, name)
                cells.append("inf" if math.isinf(val) else repr(val))
            fh.write(",".join(cells) + "\r\n")


def bounds_report(game: PayoffMatrix, w_grid) -> BoundsReport:
    """Evaluate F and G1..Q3 on a grid of guarantee levels inside [v, w*]."""
    nash = game_value(game)
    w_star = nash.optimum
    incentives = row_incentive_values(game)
    rows = []
    for w_raw in w_grid:
        w = to_fraction(w_raw)
        if w < game.v or w > w_star:
            raise ValidationError(f"grid point w={w} outside [v, w*] = [{game.v}, {w_star}]")
        try:
            f_val = min_entropy(game, w)
            maxprob = max_prob_solutions(game, w)
            g1 = bound_max_prob(game, w)
            g1r = bound_max_prob(game, w, relaxed=True, incentives=incentives)
            lows = closed_form_lower_bounds(game, w)
            if math.isinf(lows["G2"]) and w == w_star:
                # w = w* = m_hi degenerate games: cap to the exact value
                lows["G2"] = f_val
            ups = upper_bounds(game, w, nash=nash, maxprob=maxprob)
        except (ValidationError, ResourceCapError) as exc:
            raise type(exc)(f"at w={w}: {exc}") from exc
        row = BoundsRow(
            w=w,
            F=f_val,
            G1=g1,
            G1_relaxed=g1r,
            G2=lows["G2"],
            G3=lows["G3"],
            G4=lows["G4"],
            Q1=ups["Q1"],
            Q2=ups["Q2"],
            Q3=ups["Q3"],
        )
        lower = max(row.G1, row.G1_relaxed, row.G2, row.G3, row.G4)
        upper = min(row.Q1, row.Q2, row.Q3)
        if not (lower <= row.F + SANDWICH_TOL and row.F <= upper + SANDWICH_TOL):
            raise AssertionError(
                f"bound sandwich violated at w={w}: "
                f"max(G)={lower}, F={row.F}, min(Q)={upper}"
            )
        rows.append(row)
    return BoundsReport(
        rows=tuple(rows),
        v=game.v,
        w_star=w_star,
        grid_size=len(rows),
        nash_strategy=nash.argmax,
    )
